#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace relisim {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
/// Stateless bijection of a 128-bit counter under a 64-bit key.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter apply(Counter ctr, Key key) noexcept;
};

/**
 * Standard normal variates keyed by (master seed, trajectory index).
 *
 * The seed is the Philox key and the trajectory index occupies the upper half of
 * the counter, so every trajectory owns a disjoint stream whose contents do not
 * depend on which worker generates it or in what order.
 *
 * Conversion (version 1, pinned by tests): each Philox block gives two 64-bit
 * words, each mapped to a uniform in (0,1) as ((w >> 11) + 0.5) * 2^-53, and the
 * pair is turned into two normals by the Box-Muller transform (cos branch first).
 */
class GaussianStream {
public:
    static constexpr int kConversionVersion = 1;

    GaussianStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;

    double next() noexcept;
    void fill(std::span<double> out) noexcept;

    /// Uniform in (0,1), sharing the block counter with next().
    double next_uniform() noexcept;

private:
    void refill() noexcept;

    Philox4x32::Key key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    std::array<double, 2> uniforms_{};
    std::array<double, 2> normals_{};
    int uniform_pos_ = 2;
    int normal_pos_ = 2;
};

struct StreamSpec {
    std::uint64_t master_seed = 0;
    std::uint64_t trajectory_index = 0;
    std::size_t dimension = 1;
    double step = 1.0;
};

/// Brownian increments for one trajectory; increment k is the m-vector `at(k)`.
struct BrownianIncrements {
    std::uint64_t seed = 0;
    std::uint64_t trajectory_index = 0;
    std::size_t dimension = 1;
    double step = 1.0;
    std::vector<double> values;  // count * dimension, row-major

    std::size_t count() const noexcept { return dimension == 0 ? 0 : values.size() / dimension; }
    std::span<const double> at(std::size_t k) const noexcept {
        return {values.data() + k * dimension, dimension};
    }
    /// Sum of consecutive pairs of increments: the same path on a grid of twice the step.
    BrownianIncrements coarsened() const;
};

/// `count` i.i.d. Normal(0, step * I_m) vectors, reproducible from the stream spec alone.
BrownianIncrements gaussian_increments(const StreamSpec& spec, std::size_t count);

/// In-place variant used by the simulation loop to avoid per-trajectory allocation.
void fill_gaussian_increments(const StreamSpec& spec, std::size_t count, BrownianIncrements& out);

}  // namespace relisim
