#include "rtgp/session_io.hpp"

#include "rtgp/binary_io.hpp"
#include "rtgp/csv.hpp"

#include <fstream>
#include <limits>
#include <sstream>

namespace rtgp {

namespace {

constexpr char kMagic[5] = "EEGS";

void write_u16(std::ostream& out, int v, const char* what)
{
    if (v < 0 || v > std::numeric_limits<std::uint16_t>::max()) {
        throw StructuralError(std::string(what) + " does not fit the container's u16 field");
    }
    binio::put<std::uint16_t>(out, static_cast<std::uint16_t>(v));
}

}  // namespace

void save_session(const SessionData& session, const std::string& path)
{
    session.validate();
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, 4);
    binio::put<std::uint16_t>(out, kSessionVersion);
    for (int v : {session.K, session.T, session.R, session.S, session.J, session.n()}) {
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    }
    binio::put<double>(out, session.sample_rate);
    binio::put<double>(out, session.timing.display_ms);
    binio::put<double>(out, session.timing.pause_ms);

    for (int k = 0; k < session.K; ++k) {
        const std::string name = session.channel_names.empty() ? "ch" + std::to_string(k + 1)
                                                               : session.channel_names[static_cast<std::size_t>(k)];
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
        binio::put_bytes(out, name.data(), name.size());
    }

    for (const auto& f : session.flashes) {
        write_u16(out, f.r, "character index");
        write_u16(out, f.s, "sequence index");
        write_u16(out, f.j, "stimulus index");
        binio::put<std::int8_t>(out, static_cast<std::int8_t>(f.y));
        // Channel-major: row k of the K x T signal, then row k+1.
        const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = f.signal;
        binio::put_bytes(out, rm.data(), sizeof(float) * static_cast<std::size_t>(rm.size()));
    }
    write_file_atomic(path, out.str());
}

SessionData load_session(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatError::Code::io, "cannot open session file " + path);
    }
    binio::expect_magic(in, kMagic);
    const auto version = binio::get<std::uint16_t>(in, "version");
    if (version != kSessionVersion) {
        throw FormatError(FormatError::Code::unsupported_version,
                          "unsupported session version " + std::to_string(version));
    }
    SessionData s;
    std::uint32_t dims[6];
    for (auto& d : dims) {
        d = binio::get<std::uint32_t>(in, "header");
    }
    constexpr std::uint32_t kLimit = 1u << 24;
    for (auto d : dims) {
        if (d > kLimit) {
            throw FormatError(FormatError::Code::dimension_mismatch, "header dimension out of range");
        }
    }
    s.K = static_cast<int>(dims[0]);
    s.T = static_cast<int>(dims[1]);
    s.R = static_cast<int>(dims[2]);
    s.S = static_cast<int>(dims[3]);
    s.J = static_cast<int>(dims[4]);
    const auto n = static_cast<std::uint64_t>(dims[5]);
    if (n != static_cast<std::uint64_t>(dims[2]) * dims[3] * dims[4]) {
        throw FormatError(FormatError::Code::dimension_mismatch, "header n != R*S*J");
    }
    if (s.K < 1 || s.T < 1 || s.J != s.layout.stimulus_count()) {
        throw FormatError(FormatError::Code::dimension_mismatch, "header dimensions inconsistent with the layout");
    }
    s.sample_rate = binio::get<double>(in, "sample rate");
    s.timing.display_ms = binio::get<double>(in, "display time");
    s.timing.pause_ms = binio::get<double>(in, "pause time");

    s.channel_names.resize(static_cast<std::size_t>(s.K));
    for (auto& name : s.channel_names) {
        const auto len = binio::get<std::uint32_t>(in, "channel name length");
        if (len > 4096) {
            throw FormatError(FormatError::Code::dimension_mismatch, "channel name too long");
        }
        name.resize(len);
        binio::get_bytes(in, name.data(), len, "channel name");
    }

    const auto kt = static_cast<std::size_t>(s.K) * static_cast<std::size_t>(s.T);
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(s.K, s.T);
    s.flashes.resize(n);
    for (auto& f : s.flashes) {
        f.r = binio::get<std::uint16_t>(in, "flash block");
        f.s = binio::get<std::uint16_t>(in, "flash block");
        f.j = binio::get<std::uint16_t>(in, "flash block");
        const auto y = binio::get<std::int8_t>(in, "flash block");
        if (y < -1 || y > 1) {
            throw FormatError(FormatError::Code::dimension_mismatch, "label byte outside {-1, 0, 1}");
        }
        f.y = static_cast<Label>(y);
        binio::get_bytes(in, rm.data(), sizeof(float) * kt, "flash signal");
        f.signal = rm;
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(FormatError::Code::dimension_mismatch, "trailing bytes after the last flash block");
    }
    try {
        s.validate();
    } catch (const StructuralError& e) {
        throw FormatError(FormatError::Code::dimension_mismatch, e.what());
    }
    s.refresh_interactions();
    return s;
}

}  // namespace rtgp
