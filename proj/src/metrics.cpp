#include "fetv/metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "fetv/error.hpp"
#include "fetv/rng.hpp"

namespace fetv {

double psnr(const Discretization& disc, const DgFunction& u, const DgFunction& u_ref, double peak) {
    if (u.coeffs.size() != u_ref.coeffs.size()) throw ConfigError("psnr: functions live in different spaces");
    const Eigen::VectorXd diff = u.coeffs - u_ref.coeffs;
    const double err = disc.mass().inner(diff, diff);
    if (err <= 0) return kPsnrIdentical;
    return 10.0 * std::log10(peak * peak * disc.mesh().total_area() / err);
}

Eigen::VectorXd gaussian_noise(Eigen::Index n, const NoiseSpec& spec) {
    if (!(spec.sigma >= 0)) throw ConfigError("noise sigma must be nonnegative");
    Eigen::VectorXd z(n);
    Rng rng(spec.seed);
    for (Eigen::Index k = 0; k < n; ++k) z[k] = spec.sigma * rng.normal();
    return z;
}

DgFunction add_noise(const DgFunction& u, const NoiseSpec& spec) {
    if (spec.sigma == 0) return u;
    DgFunction out = u;
    out.coeffs += gaussian_noise(u.coeffs.size(), spec);
    return out;
}

namespace {

// First m entries of a seeded Fisher-Yates shuffle of 0..n-1.
std::vector<int> choose(int n, int m, std::uint64_t seed) {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed);
    for (int k = 0; k < m; ++k) {
        const auto j = k + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - k)));
        std::swap(idx[k], idx[j]);
    }
    idx.resize(m);
    return idx;
}

}  // namespace

DgFunction add_salt_pepper(const DgFunction& u, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0 && fraction <= 1)) throw ConfigError("impulse fraction must lie in [0,1]");
    const int n = static_cast<int>(u.coeffs.size());
    const int m = static_cast<int>(std::lround(fraction * n));
    DgFunction out = u;
    Rng coin(seed ^ 0x5A17ull);
    for (int k : choose(n, m, seed)) out.coeffs[k] = (coin.next() >> 63) ? 1.0 : 0.0;
    return out;
}

CellMask random_cell_mask(int num_cells, double fraction, std::uint64_t seed) {
    if (!(fraction >= 0 && fraction <= 1)) throw ConfigError("mask fraction must lie in [0,1]");
    const int m = static_cast<int>(std::lround(fraction * num_cells));
    CellMask mask = full_mask(num_cells);
    for (int t : choose(num_cells, m, seed)) mask[t] = 0;
    return mask;
}

namespace {

constexpr char kVecMagic[8] = {'F', 'E', 'T', 'V', 'V', 'E', 'C', '1'};

void put_u64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(const unsigned char* b) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
}

}  // namespace

void write_vector_file(const std::string& path, const Eigen::VectorXd& v) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out.write(kVecMagic, 8);
    put_u64(out, static_cast<std::uint64_t>(v.size()));
    for (Eigen::Index k = 0; k < v.size(); ++k) put_u64(out, std::bit_cast<std::uint64_t>(v[k]));
    if (!out) throw Error("write failed for '" + path + "'");
}

Eigen::VectorXd read_vector_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 16 || std::memcmp(buf.data(), kVecMagic, 8) != 0) throw ParseError("not a vector file: " + path, 0);
    const std::uint64_t n = get_u64(buf.data() + 8);
    if (n > (buf.size() - 16) / 8 || buf.size() != 16 + 8 * n) throw ParseError("truncated vector file: " + path, 0);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::uint64_t k = 0; k < n; ++k) v[static_cast<Eigen::Index>(k)] = std::bit_cast<double>(get_u64(buf.data() + 16 + 8 * k));
    return v;
}

}  // namespace fetv
