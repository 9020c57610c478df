#include "relisim/rng.hpp"

#include <cmath>
#include <numbers>

#include "relisim/error.hpp"

namespace relisim {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& lo, std::uint32_t& hi) noexcept {
    const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
    lo = static_cast<std::uint32_t>(p);
    hi = static_cast<std::uint32_t>(p >> 32);
}

inline double to_open_unit(std::uint64_t w) noexcept {
    return (static_cast<double>(w >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
        std::uint32_t lo0, hi0, lo1, hi1;
        mulhilo(kMul0, ctr[0], lo0, hi0);
        mulhilo(kMul1, ctr[2], lo1, hi1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

GaussianStream::GaussianStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept
    : key_{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32)},
      stream_(stream_index) {}

void GaussianStream::refill() noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)};
    ++block_;
    const auto r = Philox4x32::apply(ctr, key_);
    const std::uint64_t w0 = (static_cast<std::uint64_t>(r[1]) << 32) | r[0];
    const std::uint64_t w1 = (static_cast<std::uint64_t>(r[3]) << 32) | r[2];
    uniforms_ = {to_open_unit(w0), to_open_unit(w1)};
}

double GaussianStream::next_uniform() noexcept {
    if (uniform_pos_ == 2) {
        refill();
        uniform_pos_ = 0;
    }
    return uniforms_[uniform_pos_++];
}

double GaussianStream::next() noexcept {
    if (normal_pos_ == 2) {
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        normals_ = {radius * std::cos(angle), radius * std::sin(angle)};
        normal_pos_ = 0;
    }
    return normals_[normal_pos_++];
}

void GaussianStream::fill(std::span<double> out) noexcept {
    for (double& v : out) v = next();
}

void fill_gaussian_increments(const StreamSpec& spec, std::size_t count, BrownianIncrements& out) {
    if (!(spec.step > 0.0) || !std::isfinite(spec.step)) throw DomainError("increment step must be positive");
    if (spec.dimension == 0) throw DomainError("noise dimension must be positive");
    out.seed = spec.master_seed;
    out.trajectory_index = spec.trajectory_index;
    out.dimension = spec.dimension;
    out.step = spec.step;
    out.values.resize(count * spec.dimension);
    GaussianStream stream(spec.master_seed, spec.trajectory_index);
    const double scale = std::sqrt(spec.step);
    for (double& v : out.values) v = scale * stream.next();
}

BrownianIncrements gaussian_increments(const StreamSpec& spec, std::size_t count) {
    BrownianIncrements out;
    fill_gaussian_increments(spec, count, out);
    return out;
}

BrownianIncrements BrownianIncrements::coarsened() const {
    if (count() % 2 != 0) throw DomainError("coarsening needs an even number of increments");
    BrownianIncrements out{seed, trajectory_index, dimension, 2.0 * step, {}};
    out.values.resize(values.size() / 2);
    for (std::size_t k = 0; k < count() / 2; ++k) {
        for (std::size_t j = 0; j < dimension; ++j) {
            out.values[k * dimension + j] = values[2 * k * dimension + j] + values[(2 * k + 1) * dimension + j];
        }
    }
    return out;
}

}  // namespace relisim
