#pragma once

#include <cstdint>
#include <random>

namespace dfdrnn {

using Rng = std::mt19937_64;

// Independent random streams derived from one master seed. Each consumer
// draws from its own stream so toggling one stochastic component leaves the
// others untouched.
enum class Stream : std::uint64_t {
  kInit = 1,
  kFeatureDropout = 2,
  kEdgeDropout = 3,
  kFolds = 4,
  kRun = 5,
};

std::uint64_t splitmix64(std::uint64_t x);

// Sub-seed for (master, stream, index). Pure function of its inputs.
std::uint64_t derive_seed(std::uint64_t master, Stream stream, std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, Stream stream, std::uint64_t index = 0) {
  return Rng(derive_seed(master, stream, index));
}

// Uniform double in [0, 1) built from the top 53 bits, independent of the
// standard library's distribution implementation.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace dfdrnn
