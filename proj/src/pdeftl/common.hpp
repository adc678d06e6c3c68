#pragma once

#include <cstdint>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pdeftl {

using Bytes = std::vector<uint8_t>;

/// Failure classes surfaced by the simulator. Mirrored 1:1 by the C API
/// status codes, so keep the order stable.
enum class Errc {
  Ok = 0,
  InvalidGeometry,
  OutOfRange,
  PageNotErased,
  BadBlock,
  GeometryMismatch,
  EmptyPassword,
  LengthMismatch,
  TagTooLarge,
  SlotOutOfRange,
  SamePassword,
  GeometryTooSmall,
  NoMatch,
  WrongMode,
  DeviceFull,
  CommitFailed,
  NoValidSuperblock,
  RecoveryRequired,
  VolumesCollide,
  TraceError,
  TooFewTrials,
  EmptyRegion,
  BadConfig,
  IoError,
  BadSnapshot,
};

const char* errc_name(Errc e);

/// Single exception type carrying the failure class; the C boundary maps
/// it back to a status code.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void put_u32(Bytes& out, uint32_t v) {
  out.push_back(uint8_t(v));
  out.push_back(uint8_t(v >> 8));
  out.push_back(uint8_t(v >> 16));
  out.push_back(uint8_t(v >> 24));
}

inline void put_u64(Bytes& out, uint64_t v) {
  put_u32(out, uint32_t(v));
  put_u32(out, uint32_t(v >> 32));
}

inline uint32_t get_u32(const uint8_t* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

inline uint64_t get_u64(const uint8_t* p) {
  return uint64_t(get_u32(p)) | uint64_t(get_u32(p + 4)) << 32;
}

}  // namespace pdeftl
