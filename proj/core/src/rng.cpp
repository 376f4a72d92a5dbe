#include "hypomix/rng.hpp"

#include <cmath>

namespace hypomix {

namespace {

constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    return static_cast<std::uint64_t>(p);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

} // namespace

std::array<std::uint64_t, 4> Philox4x64::block(std::array<std::uint64_t, 4> x,
                                               std::array<std::uint64_t, 2> key) {
    for (int r = 0; r < rounds; ++r) {
        std::uint64_t hi0, hi1;
        const std::uint64_t lo0 = mulhilo(kMul0, x[0], hi0);
        const std::uint64_t lo1 = mulhilo(kMul1, x[2], hi1);
        x = {hi1 ^ x[1] ^ key[0], lo1, hi0 ^ x[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return x;
}

void GaussianStream::fill(double* out, std::size_t n) {
    std::size_t have = 0;
    while (spare_left_ > 0 && have < n) out[have++] = spare_[4 - spare_left_--];
    if (have == n) return;

    const std::size_t want = n - have;
    const std::size_t blocks = (want + 3) / 4; // 4 normals per counter block

    // Uniforms first, then deinterleave so every transcendental pass runs
    // over a contiguous array the vector math library can chew through.
    std::vector<double>& u = scratch_u_;
    u.resize(blocks * 4);
    for (std::size_t b = 0; b < blocks; ++b) {
        const auto w = Philox4x64::block({counter_ + b, 0, 0, 0}, key_);
        u[4 * b + 0] = uniform_from_bits(w[0]);
        u[4 * b + 1] = uniform_from_bits(w[1]);
        u[4 * b + 2] = uniform_from_bits(w[2]);
        u[4 * b + 3] = uniform_from_bits(w[3]);
    }
    counter_ += blocks;

    const std::size_t pairs = blocks * 2;
    std::vector<double>& a = scratch_a_;
    std::vector<double>& r = scratch_r_;
    std::vector<double>& zc = scratch_c_;
    std::vector<double>& zs = scratch_s_;
    std::vector<double>& z = scratch_z_;
    a.resize(pairs);
    r.resize(pairs);
    zc.resize(pairs);
    zs.resize(pairs);
    z.resize(blocks * 4);
    for (std::size_t i = 0; i < pairs; ++i) a[i] = kTwoPi * u[2 * i + 1];
    for (std::size_t i = 0; i < pairs; ++i) r[i] = u[2 * i];
    for (std::size_t i = 0; i < pairs; ++i) r[i] = std::sqrt(-2.0 * std::log(r[i]));
    for (std::size_t i = 0; i < pairs; ++i) zc[i] = r[i] * std::cos(a[i]);
    for (std::size_t i = 0; i < pairs; ++i) zs[i] = r[i] * std::sin(a[i]);

    // z[2i] = r cos, z[2i+1] = r sin; write straight into out while full
    // pairs fit, spill the final partial block.
    for (std::size_t i = 0; i < pairs; ++i) {
        z[2 * i] = zc[i];
        z[2 * i + 1] = zs[i];
    }
    for (std::size_t i = 0; i < want; ++i) out[have + i] = z[i];
    const int leftover = static_cast<int>(blocks * 4 - want);
    for (int i = 0; i < leftover; ++i) spare_[4 - leftover + i] = z[want + i];
    spare_left_ = leftover;
}

double GaussianStream::next() {
    double v;
    fill(&v, 1);
    return v;
}

void GaussianStream::fill_uniform(double* out, std::size_t n) {
    spare_left_ = 0; // uniforms and normals never share a block
    std::size_t have = 0;
    while (have < n) {
        const auto w = Philox4x64::block({counter_++, 0, 0, 0}, key_);
        for (int i = 0; i < 4 && have < n; ++i) out[have++] = uniform_from_bits(w[i]);
    }
}

} // namespace hypomix
