#include "common.hpp"

namespace pdeftl {

const char* errc_name(Errc e) {
  switch (e) {
    case Errc::Ok: return "ok";
    case Errc::InvalidGeometry: return "invalid geometry";
    case Errc::OutOfRange: return "out of range";
    case Errc::PageNotErased: return "page not erased";
    case Errc::BadBlock: return "bad block";
    case Errc::GeometryMismatch: return "geometry mismatch";
    case Errc::EmptyPassword: return "empty password";
    case Errc::LengthMismatch: return "length mismatch";
    case Errc::TagTooLarge: return "tag too large";
    case Errc::SlotOutOfRange: return "slot out of range";
    case Errc::SamePassword: return "same password";
    case Errc::GeometryTooSmall: return "geometry too small";
    case Errc::NoMatch: return "no match";
    case Errc::WrongMode: return "wrong mode";
    case Errc::DeviceFull: return "device full";
    case Errc::CommitFailed: return "commit failed";
    case Errc::NoValidSuperblock: return "no valid superblock";
    case Errc::RecoveryRequired: return "recovery required";
    case Errc::VolumesCollide: return "volumes collide";
    case Errc::TraceError: return "trace error";
    case Errc::TooFewTrials: return "too few trials";
    case Errc::EmptyRegion: return "empty region";
    case Errc::BadConfig: return "bad config";
    case Errc::IoError: return "io error";
    case Errc::BadSnapshot: return "bad snapshot";
  }
  return "unknown";
}

}  // namespace pdeftl
