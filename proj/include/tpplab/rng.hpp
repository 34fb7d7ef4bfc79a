#pragma once

#include <array>
#include <cmath>
#include <cstdint>

#include "tpplab/vec.hpp"

namespace tpp {

// Philox4x32-10 counter-based generator (Salmon et al., Random123).
// A (key, counter) pair maps to 128 random bits; there is no hidden state,
// so independent streams are obtained by partitioning the counter space.
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += 0x9E3779B9u;
        key[1] += 0xBB67AE85u;
      }
      const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }
};

// Named substreams. Every random draw in the library is addressed by
// (root seed, stream, index) so that components never share randomness.
enum class Stream : std::uint32_t {
  Path = 1,      // Brownian increments of a simulated path
  Flux = 2,      // initial point on the boundary of A
  Bar = 3,       // boundary samples for ratio estimation
  Probe = 4,     // training probes
  Langevin = 5,  // long equilibrium runs
  Test = 15,
};

// Compose a 32-bit stream word from a stream kind and a round index
// (e.g. the SGD step), keeping the two fields disjoint.
inline std::uint32_t stream_word(Stream s, std::uint32_t round = 0) {
  return (round << 4) | (static_cast<std::uint32_t>(s) & 0xFu);
}

// Child seed for an independent component (e.g. one side of a selection),
// by two rounds of the splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t tag) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(root ^ mix(tag));
}

// Sequential standard normals (and uniforms) drawn from one Philox stream.
// Deterministic given (seed, stream word, index); copying the object forks
// the sequence at the current position.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint32_t stream, std::uint32_t index)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream),
        index_(index) {}

  double uniform() {
    if (uniform_pos_ >= 2) refill_uniform();
    return uniform_buf_[uniform_pos_++];
  }

  double normal() {
    if (normal_pos_ >= 2) refill_normal();
    return normal_buf_[normal_pos_++];
  }

  // Fill the first `dim` components with independent standard normals.
  void normal_vec(Vec& v) {
    for (int i = 0; i < v.dim; ++i) v.c[i] = normal();
  }

 private:
  static double to_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (std::uint64_t{hi} << 32) | lo;
    // 53 random bits mapped to (0, 1).
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::array<double, 2> next_pair() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(counter_),
                                  static_cast<std::uint32_t>(counter_ >> 32), index_, stream_};
    ++counter_;
    const auto out = Philox4x32::block(ctr, key_);
    return {to_unit(out[0], out[1]), to_unit(out[2], out[3])};
  }

  void refill_uniform() {
    uniform_buf_ = next_pair();
    uniform_pos_ = 0;
  }

  void refill_normal() {
    // Box-Muller on a fresh pair of uniforms.
    const auto u = next_pair();
    const double r = std::sqrt(-2.0 * std::log(u[0]));
    const double phi = 6.283185307179586476925 * u[1];
    normal_buf_ = {r * std::cos(phi), r * std::sin(phi)};
    normal_pos_ = 0;
  }

  Philox4x32::Key key_;
  std::uint32_t stream_;
  std::uint32_t index_;
  std::uint64_t counter_ = 0;
  std::array<double, 2> uniform_buf_{};
  std::array<double, 2> normal_buf_{};
  int uniform_pos_ = 2;
  int normal_pos_ = 2;
};

}  // namespace tpp
