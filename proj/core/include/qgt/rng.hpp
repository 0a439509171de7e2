#pragma once

#include <array>
#include <cstdint>

namespace qgt {

// Deterministic pseudo-random generation.
//
// Every random quantity in the lab is drawn from an Rng derived via
// stream_rng(seed, kind, split, index), so each (seed, purpose, sample)
// combination owns an independent stream:
//
//   pooling matrix        stream_rng(seed, StreamKind::kPooling)
//   signal of sample i    stream_rng(seed, StreamKind::kSignal, split, i)
//   noise of sample i     stream_rng(seed, StreamKind::kNoise, split, i)
//   weight init, layer l  stream_rng(seed, StreamKind::kWeightInit, 0, l)
//   dropout masks         stream_rng(seed, StreamKind::kDropout)
//   shuffle of epoch e    stream_rng(seed, StreamKind::kShuffle, 0, e)
//
// Per-sample streams make generation order-independent: regenerating a
// dataset with a different split size never perturbs other samples.
// Reproducibility is bit-exact for a fixed build of this library.

// SplitMix64 step; also the mixer used to key derived streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// xoshiro256++ with a SplitMix64-expanded seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform double in [0, 1) with 53 random bits.
  double uniform();

  // True with probability p; p <= 0 never, p >= 1 always.
  bool bernoulli(double p);

  // Uniform integer in [lo, hi], both inclusive. Unbiased via rejection.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  // Uniform double in [lo, hi).
  double uniform_real(double lo, double hi);

 private:
  std::array<std::uint64_t, 4> state_;
};

enum class StreamKind : std::uint64_t {
  kPooling = 1,
  kSignal = 2,
  kNoise = 3,
  kWeightInit = 4,
  kDropout = 5,
  kShuffle = 6,
};

Rng stream_rng(std::uint64_t seed, StreamKind kind, std::uint64_t split = 0,
               std::uint64_t index = 0);

}  // namespace qgt
