#pragma once

#include <cstdint>
#include <random>

namespace twinsim::rng {

/// splitmix64 finalizer; bijective 64-bit mix with good avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named substreams. Every stochastic stage draws from its own stream so
/// that composed operations never share random state.
enum class Stream : std::uint64_t {
  twin_pairs = 1,
  coherent = 2,
  thermal = 3,
  split = 4,
  object_thin = 5,
  loss_signal = 6,
  loss_idler = 7,
  background_signal = 8,
  background_idler = 9,
  chain = 10,
  calibration = 11,
  run = 12,
  sweep_point = 13,
  demo = 14,
};

/// Stable 64-bit mix of (master seed, stream tag, index). Identical inputs
/// give identical seeds on every platform; distinct frames or streams give
/// statistically independent engines.
constexpr std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index) {
  std::uint64_t s = mix64(master ^ 0x7477696e73696d31ULL);  // "twinsim1"
  s = mix64(s ^ static_cast<std::uint64_t>(stream) * 0x9e3779b97f4a7c15ULL);
  s = mix64(s ^ index * 0xc2b2ae3d27d4eb4fULL);
  return s;
}

/// Per-frame engine for an operation whose own seed is `op_seed`.
inline std::mt19937_64 frame_engine(std::uint64_t op_seed, std::uint64_t frame) {
  return std::mt19937_64(mix64(op_seed ^ mix64(frame ^ 0x66726d65ULL)));
}

}  // namespace twinsim::rng
