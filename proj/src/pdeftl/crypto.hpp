#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"
#include "flash.hpp"

namespace pdeftl {

enum class KeyRole : uint8_t { Decoy = 0, True = 1 };

/// Password-derived volume key plus the per-purpose subkeys everything
/// else consumes. Deterministic for a fixed (password, salt, role, work
/// factor), so unlock always reproduces the format-time keys.
struct VolumeKey {
  KeyRole role = KeyRole::Decoy;
  std::array<uint8_t, 32> material{};

  // per-purpose subkeys, all derived from `material`
  std::array<uint8_t, 32> page_key{};
  std::array<uint8_t, 32> tag_enc_key{};
  std::array<uint8_t, 32> tag_mac_key{};
  std::array<uint8_t, 32> map_key{};
  std::array<uint8_t, 32> loc_key{};
  std::array<uint8_t, 32> meta_key{};
  std::array<uint8_t, 32> meta_mac_key{};

  bool operator==(const VolumeKey& other) const {
    return role == other.role && material == other.material;
  }
};

/// PBKDF2-HMAC-SHA256 with a configurable iteration count. The role byte is
/// folded into the salt so the same password can never alias across roles.
VolumeKey derive_key(const std::string& password, std::span<const uint8_t> salt,
                     KeyRole role, uint32_t work_factor);

enum class PageClass : uint8_t { PublicData = 1, HiddenData = 2, MapCommit = 3 };

struct TagFields {
  uint32_t lba = 0;
  uint64_t version = 0;
  PageClass page_class = PageClass::PublicData;
};

/// 13 bytes of SIV-encrypted fields plus a 16-byte authenticity code.
constexpr size_t kTagSize = 13 + 16;

/// Encode tag fields into `oob_size` bytes: the sealed record at offset 0,
/// the remainder filled from `filler_rng` so a tagged OOB and a pure random
/// OOB are indistinguishable without the key.
Bytes tag_encode(const VolumeKey& key, const TagFields& fields, size_t oob_size,
                 class Rng& filler_rng);

/// Decode an OOB area. Returns the fields only when the authenticity code
/// verifies under this key; anything else (other key, dummy filler, erased
/// page) yields nullopt.
std::optional<TagFields> tag_decode(const VolumeKey& key, std::span<const uint8_t> oob);

/// Length-preserving page encryption, AES-256-CTR under the page subkey.
/// The tweak (physical page index, write version) separates keystreams, so
/// rewriting identical plaintext never repeats ciphertext.
Bytes encrypt_page(const VolumeKey& key, uint64_t page_index, uint64_t version,
                   std::span<const uint8_t> plaintext);
Bytes decrypt_page(const VolumeKey& key, uint64_t page_index, uint64_t version,
                   std::span<const uint8_t> ciphertext);

/// Sealed variable-length records for map commits and superblock payloads:
/// AES-256-CTR under a context subkey with an HMAC-SHA256 authenticity code
/// (truncated to 16 bytes) appended.
Bytes seal_record(const std::array<uint8_t, 32>& enc_key,
                  const std::array<uint8_t, 32>& mac_key, uint64_t context,
                  std::span<const uint8_t> plaintext);
std::optional<Bytes> open_record(const std::array<uint8_t, 32>& enc_key,
                                 const std::array<uint8_t, 32>& mac_key, uint64_t context,
                                 std::span<const uint8_t> sealed);
constexpr size_t kSealOverhead = 16;

enum class MapLabel : uint8_t { PublicMap = 0, HiddenMap = 1 };

/// All `slot_count` commit-slot pages for one volume, derived from the key
/// alone. Slots land in pairwise distinct blocks, never inside
/// `avoid_blocks`; collisions re-index deterministically.
std::vector<PhysPageAddr> derive_slot_pages(const VolumeKey& key, MapLabel label,
                                            uint32_t slot_count, const FlashGeometry& geom,
                                            const std::set<uint32_t>& avoid_blocks);

/// Slot `slot_index` of the sequence above.
PhysPageAddr map_slot_location(const VolumeKey& key, MapLabel label, uint32_t slot_index,
                               uint32_t slot_count, const FlashGeometry& geom,
                               const std::set<uint32_t>& avoid_blocks);

/// Keyed PRF to u64, used for key-derived offsets (baseline tail region).
uint64_t keyed_offset(const VolumeKey& key, std::string_view label, uint64_t modulus);

}  // namespace pdeftl
