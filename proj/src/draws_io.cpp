#include "rtgp/draws_io.hpp"

#include "rtgp/binary_io.hpp"
#include "rtgp/csv.hpp"

#include <fstream>
#include <sstream>

namespace rtgp {

namespace {

constexpr char kMagic[5] = "RTGP";
constexpr std::uint8_t kFlagInteractions = 1;
constexpr std::uint8_t kFlagStandardizer = 2;

void put_vector(std::ostream& out, const Eigen::VectorXd& v)
{
    binio::put_bytes(out, v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd get_vector(std::istream& in, Eigen::Index size, const char* what)
{
    Eigen::VectorXd v(size);
    binio::get_bytes(in, v.data(), sizeof(double) * static_cast<std::size_t>(size), what);
    return v;
}

void put_bits(std::ostream& out, const auto& column)
{
    const auto size = static_cast<std::size_t>(column.size());
    std::string bytes((size + 7) / 8, '\0');
    for (std::size_t i = 0; i < size; ++i) {
        if (column(static_cast<Eigen::Index>(i))) {
            bytes[i / 8] = static_cast<char>(bytes[i / 8] | (1u << (i % 8)));
        }
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void get_bits(std::istream& in, auto column)
{
    const auto size = static_cast<std::size_t>(column.size());
    std::string bytes((size + 7) / 8, '\0');
    binio::get_bytes(in, bytes.data(), bytes.size(), "indicator bits");
    for (std::size_t i = 0; i < size; ++i) {
        column(static_cast<Eigen::Index>(i)) = (static_cast<unsigned char>(bytes[i / 8]) >> (i % 8)) & 1u;
    }
}

}  // namespace

void save_draws(const PosteriorDraws& d, const std::string& path)
{
    const int p = d.p();
    if (d.beta.rows() != p || d.zeta.rows() != d.q || d.gamma_beta.rows() != p || d.gamma_zeta.rows() != d.q ||
        d.zeta.cols() != d.D() || d.gamma_beta.cols() != d.D() || d.gamma_zeta.cols() != d.D()) {
        throw StructuralError("save_draws: draw matrices disagree with the header dimensions");
    }
    if (d.basis.T() != d.T) {
        throw StructuralError("save_draws: KL basis grid length differs from T");
    }
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, 4);
    binio::put<std::uint16_t>(out, kDrawsVersion);
    for (int v : {d.D(), d.K, d.T, d.q, d.basis.L()}) {
        binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(v));
    }
    binio::put<std::uint8_t>(out, static_cast<std::uint8_t>(d.link));
    std::uint8_t flags = 0;
    flags |= d.use_interactions ? kFlagInteractions : 0;
    flags |= d.standardizer ? kFlagStandardizer : 0;
    binio::put<std::uint8_t>(out, flags);
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(d.iterations));
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(d.burn_in));
    binio::put<std::uint32_t>(out, static_cast<std::uint32_t>(d.thin));
    binio::put<std::uint64_t>(out, d.seed);

    binio::put<double>(out, d.basis.params.rho);
    binio::put<double>(out, d.basis.params.alpha);
    binio::put<double>(out, d.basis.variance_threshold);
    binio::put<double>(out, d.basis.variance_fraction);
    put_vector(out, d.basis.grid);
    put_vector(out, d.basis.lambdas);
    binio::put_bytes(out, d.basis.psi.data(), sizeof(double) * static_cast<std::size_t>(d.basis.psi.size()));

    if (d.standardizer) {
        if (d.standardizer->mean.size() != p || d.standardizer->scale.size() != p) {
            throw StructuralError("save_draws: standardizer length differs from K*T");
        }
        put_vector(out, d.standardizer->mean);
        put_vector(out, d.standardizer->scale);
    }

    for (int c = 0; c < d.D(); ++c) {
        binio::put_bytes(out, d.beta.col(c).data(), sizeof(float) * static_cast<std::size_t>(p));
        binio::put_bytes(out, d.zeta.col(c).data(), sizeof(float) * static_cast<std::size_t>(d.q));
        put_bits(out, d.gamma_beta.col(c));
        put_bits(out, d.gamma_zeta.col(c));
    }
    write_file_atomic(path, out.str());
}

PosteriorDraws load_draws(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError(FormatError::Code::io, "cannot open draws file " + path);
    }
    binio::expect_magic(in, kMagic);
    const auto version = binio::get<std::uint16_t>(in, "version");
    if (version != kDrawsVersion) {
        throw FormatError(FormatError::Code::unsupported_version,
                          "unsupported draws version " + std::to_string(version));
    }
    std::uint32_t dims[5];
    for (auto& v : dims) {
        v = binio::get<std::uint32_t>(in, "header");
        if (v > (1u << 24)) {
            throw FormatError(FormatError::Code::dimension_mismatch, "draws header dimension out of range");
        }
    }
    PosteriorDraws d;
    const int D = static_cast<int>(dims[0]);
    d.K = static_cast<int>(dims[1]);
    d.T = static_cast<int>(dims[2]);
    d.q = static_cast<int>(dims[3]);
    const int L = static_cast<int>(dims[4]);
    const auto link = binio::get<std::uint8_t>(in, "link");
    if (link > 1) {
        throw FormatError(FormatError::Code::dimension_mismatch, "unknown link code");
    }
    d.link = static_cast<Link>(link);
    const auto flags = binio::get<std::uint8_t>(in, "flags");
    d.use_interactions = (flags & kFlagInteractions) != 0;
    if (d.K < 1 || d.T < 1 || L < 1 || L > d.T || (d.q != 0 && d.q != d.K * (d.K - 1) / 2) ||
        (d.q > 0) != d.use_interactions) {
        throw FormatError(FormatError::Code::dimension_mismatch, "inconsistent draws header");
    }
    d.iterations = static_cast<int>(binio::get<std::uint32_t>(in, "config"));
    d.burn_in = static_cast<int>(binio::get<std::uint32_t>(in, "config"));
    d.thin = static_cast<int>(binio::get<std::uint32_t>(in, "config"));
    d.seed = binio::get<std::uint64_t>(in, "config");

    d.basis.params.rho = binio::get<double>(in, "kernel");
    d.basis.params.alpha = binio::get<double>(in, "kernel");
    d.basis.variance_threshold = binio::get<double>(in, "kernel");
    d.basis.variance_fraction = binio::get<double>(in, "kernel");
    d.basis.grid = get_vector(in, d.T, "grid");
    d.basis.lambdas = get_vector(in, L, "eigenvalues");
    d.basis.psi.resize(d.T, L);
    binio::get_bytes(in, d.basis.psi.data(), sizeof(double) * static_cast<std::size_t>(d.T) * L, "eigenvectors");

    const int p = d.p();
    if (flags & kFlagStandardizer) {
        Standardizer st;
        st.mean = get_vector(in, p, "standardizer");
        st.scale = get_vector(in, p, "standardizer");
        d.standardizer = st;
    }

    d.beta.resize(p, D);
    d.zeta.resize(d.q, D);
    d.gamma_beta.resize(p, D);
    d.gamma_zeta.resize(d.q, D);
    for (int c = 0; c < D; ++c) {
        binio::get_bytes(in, d.beta.col(c).data(), sizeof(float) * static_cast<std::size_t>(p), "beta frame");
        binio::get_bytes(in, d.zeta.col(c).data(), sizeof(float) * static_cast<std::size_t>(d.q), "zeta frame");
        get_bits(in, d.gamma_beta.col(c));
        get_bits(in, d.gamma_zeta.col(c));
    }
    if (in.peek() != std::char_traits<char>::eof()) {
        throw FormatError(FormatError::Code::dimension_mismatch, "trailing bytes after the last draw frame");
    }
    return d;
}

}  // namespace rtgp
