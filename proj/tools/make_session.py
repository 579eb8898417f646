#!/usr/bin/env python3
"""Convert epoched P300 speller data into the EEGS session container read by `rtgp fit` / `rtgp evaluate`.

Inputs
  epochs .npz   signal (n, K, T) float; char, sequence, stimulus (n,) 1-based ints;
                optional label (n,) in {1, 0, -1}, channel_names (K,), sample_rate scalar.
  epochs .csv   columns char,sequence,stimulus[,label] followed by K*T values per flash,
                channel-major (all T samples of channel 1, then channel 2, ...). Needs --channels.
  continuous    `--continuous` with an .npz holding signal (samples, K), onset (n,) sample
                indices and the per-flash char/sequence/stimulus[/label] arrays; epochs are
                cut as [onset, onset + window) and decimated by --decimate.

Stimuli 1-6 are rows and 7-12 columns of the 6x6 speller. With --text, labels are derived
from the spelled characters instead of read from the input.
"""

import argparse
import struct
import sys

import numpy as np

LAYOUT = "ABCDEFGHIJKLMNOPQRSTUVWXYZ123456789_"
MAGIC = b"EEGS"
VERSION = 1


def labels_from_text(text, char, stimulus):
    out = np.zeros(len(char), dtype=np.int8)
    for i, (r, j) in enumerate(zip(char, stimulus)):
        if r < 1 or r > len(text):
            raise ValueError(f"character index {r} outside the target text")
        pos = LAYOUT.find(text[r - 1])
        if pos < 0:
            raise ValueError(f"symbol {text[r - 1]!r} is not on the speller")
        row, col = pos // 6 + 1, pos % 6 + 1
        out[i] = 1 if j == row or j == col + 6 else 0
    return out


def read_npz(path):
    z = np.load(path, allow_pickle=False)
    data = {k: z[k] for k in z.files}
    if data["signal"].ndim != 3:
        raise ValueError("signal must be (flashes, channels, samples)")
    return data


def read_csv(path, channels):
    with open(path) as f:
        header = f.readline().strip().split(",")
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    has_label = len(header) > 3 and header[3] == "label"
    meta = 4 if has_label else 3
    values = raw[:, meta:]
    if values.shape[1] % channels:
        raise ValueError(f"{values.shape[1]} signal columns do not split into {channels} channels")
    data = {
        "char": raw[:, 0].astype(int),
        "sequence": raw[:, 1].astype(int),
        "stimulus": raw[:, 2].astype(int),
        "signal": values.reshape(len(raw), channels, -1),
    }
    if has_label:
        data["label"] = raw[:, 3].astype(int)
    return data


def epoch_continuous(path, window, decimate):
    z = np.load(path, allow_pickle=False)
    cont = z["signal"]
    onset = z["onset"].astype(int)
    if cont.ndim != 2:
        raise ValueError("continuous signal must be (samples, channels)")
    if np.any(onset < 0) or np.any(onset + window > cont.shape[0]):
        raise ValueError("an epoch window runs past the recording")
    epochs = np.stack([cont[o:o + window:decimate].T for o in onset])
    data = {k: z[k] for k in z.files if k not in ("signal", "onset")}
    data["signal"] = epochs
    if "sample_rate" in data:
        data["sample_rate"] = float(data["sample_rate"]) / decimate
    return data


def write_session(path, data, names, sample_rate, display_ms, pause_ms):
    signal = np.asarray(data["signal"], dtype="<f4")
    n, K, T = signal.shape
    char = np.asarray(data["char"], dtype=int)
    seq = np.asarray(data["sequence"], dtype=int)
    stim = np.asarray(data["stimulus"], dtype=int)
    label = np.asarray(data.get("label", np.full(n, -1)), dtype=int)
    R, S, J = int(char.max()), int(seq.max()), 12
    if n != R * S * J:
        raise ValueError(f"{n} flashes but R*S*J = {R}*{S}*{J}")
    seen = set(zip(char.tolist(), seq.tolist(), stim.tolist()))
    if len(seen) != n or min(char.min(), seq.min(), stim.min()) < 1 or stim.max() > J:
        raise ValueError("every (char, sequence) block needs stimuli 1..12 exactly once")
    if not set(np.unique(label).tolist()) <= {-1, 0, 1}:
        raise ValueError("labels must be 1, 0 or -1")
    if len(names) != K:
        raise ValueError(f"{len(names)} channel names for {K} channels")

    with open(path, "wb") as out:
        out.write(MAGIC)
        out.write(struct.pack("<H", VERSION))
        out.write(struct.pack("<6I", K, T, R, S, J, n))
        out.write(struct.pack("<3d", sample_rate, display_ms, pause_ms))
        for name in names:
            b = name.encode()
            out.write(struct.pack("<I", len(b)) + b)
        for i in range(n):
            out.write(struct.pack("<3Hb", char[i], seq[i], stim[i], label[i]))
            out.write(np.ascontiguousarray(signal[i]).tobytes())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("input")
    ap.add_argument("output")
    ap.add_argument("--channels", help="comma-separated channel names (required for .csv input)")
    ap.add_argument("--sample-rate", type=float)
    ap.add_argument("--display-ms", type=float, default=125.0)
    ap.add_argument("--pause-ms", type=float, default=62.5)
    ap.add_argument("--text", help="target string; overrides any labels in the input")
    ap.add_argument("--continuous", action="store_true")
    ap.add_argument("--window", type=int, help="epoch length in input samples (--continuous)")
    ap.add_argument("--decimate", type=int, default=1)
    args = ap.parse_args(argv)

    names = args.channels.split(",") if args.channels else None
    if args.continuous:
        if not args.window:
            ap.error("--continuous needs --window")
        data = epoch_continuous(args.input, args.window, args.decimate)
    elif args.input.endswith(".csv"):
        if not names:
            ap.error(".csv input needs --channels")
        data = read_csv(args.input, len(names))
    else:
        data = read_npz(args.input)

    K = data["signal"].shape[1]
    if names is None:
        names = [str(s) for s in data["channel_names"]] if "channel_names" in data else [f"ch{k + 1}" for k in range(K)]
    if args.text:
        data["label"] = labels_from_text(args.text, np.asarray(data["char"]), np.asarray(data["stimulus"]))
    rate = args.sample_rate or float(data.get("sample_rate", 0.0))
    if rate <= 0:
        ap.error("sample rate unknown; pass --sample-rate")

    try:
        write_session(args.output, data, names, rate, args.display_ms, args.pause_ms)
    except ValueError as e:
        print(f"make_session: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
