#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace hypomix {

/// Philox4x64 with 10 rounds: a counter-based block cipher whose output
/// block is a pure function of (key, counter). Stream i, position k is
/// addressable without generating anything in between, which makes
/// parallel Monte Carlo independent of scheduling.
struct Philox4x64 {
    static constexpr int rounds = 10;

    /// Encrypt one counter block under the given key.
    static std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> counter,
                                              std::array<std::uint64_t, 2> key);
};

/// Map a 64-bit word to (0, 1]: take the top 53 bits, add one ulp so the
/// result is never 0 (safe under log), at most 1.
inline double uniform_from_bits(std::uint64_t w) {
    return static_cast<double>((w >> 11) + 1) * 0x1.0p-53;
}

/// Deterministic stream of standard normals for one logical consumer.
/// The key is (seed, stream id) and the counter is the running block
/// index, so trajectory i's draws depend only on (seed, i, position).
/// Batch fills run the log/cos/sin work in separate flat loops that the
/// vector math library can pick up.
class GaussianStream {
  public:
    GaussianStream(std::uint64_t seed, std::uint64_t stream_id)
        : key_{seed, stream_id} {}

    /// Fill out[0..n) with independent standard normals.
    void fill(double* out, std::size_t n);
    void fill(std::vector<double>& out) { fill(out.data(), out.size()); }

    /// Next single normal (buffered; same sequence as fill).
    double next();

    /// Fill with uniforms on (0, 1] (independent of the normal reads:
    /// shares the same counter sequence).
    void fill_uniform(double* out, std::size_t n);

  private:
    std::array<std::uint64_t, 2> key_;
    std::uint64_t counter_ = 0; ///< next unconsumed block index
    std::array<double, 4> spare_{};
    int spare_left_ = 0;
    std::vector<double> scratch_u_, scratch_a_, scratch_r_, scratch_c_, scratch_s_, scratch_z_;
};

} // namespace hypomix
