#include "rng.hpp"

#include <cmath>

namespace pdeftl {

namespace {

// splitmix64; used only to whiten (seed, purpose) into an engine seed.
uint64_t mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= uint8_t(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Rng Rng::substream(uint64_t master_seed, std::string_view purpose) {
  return Rng(mix(master_seed ^ mix(fnv1a(purpose))));
}

uint64_t Rng::below(uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

double Rng::unit() {
  return double(engine_() >> 11) * 0x1.0p-53;
}

uint32_t Rng::geometric(double mean) {
  if (mean <= 0.0) return 0;
  // success probability p = 1/(1+mean) puts the mean of {0,1,2,...} at `mean`
  const double p = 1.0 / (1.0 + mean);
  double u = unit();
  // inverse CDF: k = floor(log(1-u) / log(1-p))
  double k = std::floor(std::log1p(-u) / std::log1p(-p));
  if (k < 0) k = 0;
  if (k > double(UINT32_MAX)) k = double(UINT32_MAX);
  return uint32_t(k);
}

void Rng::fill(uint8_t* out, size_t len) {
  size_t i = 0;
  while (i + 8 <= len) {
    uint64_t v = engine_();
    for (int b = 0; b < 8; ++b) out[i++] = uint8_t(v >> (8 * b));
  }
  if (i < len) {
    uint64_t v = engine_();
    while (i < len) {
      out[i++] = uint8_t(v);
      v >>= 8;
    }
  }
}

Bytes Rng::bytes(size_t len) {
  Bytes out(len);
  fill(out.data(), len);
  return out;
}

}  // namespace pdeftl
