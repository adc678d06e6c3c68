#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "common.hpp"

namespace pdeftl {

/// Deterministic RNG with labeled substreams. A master seed plus a purpose
/// label yields an independent stream, so placement draws, dummy content,
/// dummy counts etc. never share state and a whole run replays from one seed.
class Rng {
 public:
  Rng() : engine_(0) {}
  explicit Rng(uint64_t seed) : engine_(seed) {}

  /// Substream for `purpose`, mixed from the parent seed. Deterministic:
  /// same (seed, purpose) always yields the same stream.
  static Rng substream(uint64_t master_seed, std::string_view purpose);

  uint64_t next() { return engine_(); }

  /// Uniform in [0, n). Rejection sampling, so the draw sequence is fully
  /// determined by the engine (no distribution-object variance across
  /// standard library implementations).
  uint64_t below(uint64_t n);

  /// Uniform double in [0, 1).
  double unit();

  /// Geometric on {0,1,2,...} with the given mean (mean >= 0; mean 0 always
  /// yields 0). Inverse-CDF on one unit draw.
  uint32_t geometric(double mean);

  void fill(uint8_t* out, size_t len);
  Bytes bytes(size_t len);

 private:
  std::mt19937_64 engine_;
};

}  // namespace pdeftl
