#include "crypto.hpp"

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include <cstring>

#include "rng.hpp"

namespace pdeftl {

namespace {

std::array<uint8_t, 32> hmac_sha256(std::span<const uint8_t> key,
                                    std::span<const uint8_t> msg) {
  std::array<uint8_t, 32> out{};
  unsigned int len = 0;
  if (!HMAC(EVP_sha256(), key.data(), int(key.size()), msg.data(), msg.size(), out.data(),
            &len) ||
      len != 32)
    fail(Errc::IoError, "HMAC failure");
  return out;
}

std::array<uint8_t, 32> subkey(const std::array<uint8_t, 32>& material,
                               std::string_view label) {
  Bytes msg(label.begin(), label.end());
  return hmac_sha256(material, msg);
}

// AES-256-CTR; the IV doubles as the initial counter block.
void ctr_crypt(const std::array<uint8_t, 32>& key, const std::array<uint8_t, 16>& iv,
               std::span<const uint8_t> in, uint8_t* out) {
  EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
  if (!ctx) fail(Errc::IoError, "cipher ctx alloc");
  int len = 0;
  const bool ok = EVP_EncryptInit_ex(ctx, EVP_aes_256_ctr(), nullptr, key.data(), iv.data()) &&
                  EVP_EncryptUpdate(ctx, out, &len, in.data(), int(in.size()));
  EVP_CIPHER_CTX_free(ctx);
  if (!ok || size_t(len) != in.size()) fail(Errc::IoError, "cipher failure");
}

// Counter space lives in the low 6 bytes; identity goes in the high bytes so
// distinct (context, index) pairs can never overlap keystreams.
std::array<uint8_t, 16> make_iv(uint32_t hi32, uint64_t mid48) {
  std::array<uint8_t, 16> iv{};
  iv[0] = uint8_t(hi32 >> 24);
  iv[1] = uint8_t(hi32 >> 16);
  iv[2] = uint8_t(hi32 >> 8);
  iv[3] = uint8_t(hi32);
  for (int i = 0; i < 6; ++i) iv[4 + i] = uint8_t(mid48 >> (8 * (5 - i)));
  return iv;
}

}  // namespace

VolumeKey derive_key(const std::string& password, std::span<const uint8_t> salt,
                     KeyRole role, uint32_t work_factor) {
  if (password.empty()) fail(Errc::EmptyPassword, "password must not be empty");
  if (salt.size() < 16) fail(Errc::LengthMismatch, "salt must be at least 16 bytes");
  if (work_factor == 0) work_factor = 1;
  Bytes salted(salt.begin(), salt.end());
  salted.push_back(uint8_t(role));
  VolumeKey key;
  key.role = role;
  if (!PKCS5_PBKDF2_HMAC(password.data(), int(password.size()), salted.data(),
                         int(salted.size()), int(work_factor), EVP_sha256(),
                         int(key.material.size()), key.material.data()))
    fail(Errc::IoError, "PBKDF2 failure");
  key.page_key = subkey(key.material, "page");
  key.tag_enc_key = subkey(key.material, "tag-enc");
  key.tag_mac_key = subkey(key.material, "tag-mac");
  key.map_key = subkey(key.material, "map");
  key.loc_key = subkey(key.material, "loc");
  key.meta_key = subkey(key.material, "meta");
  key.meta_mac_key = subkey(key.material, "meta-mac");
  return key;
}

Bytes tag_encode(const VolumeKey& key, const TagFields& fields, size_t oob_size,
                 Rng& filler_rng) {
  if (oob_size < kTagSize) fail(Errc::TagTooLarge, "tag does not fit in OOB area");
  Bytes plain;
  put_u32(plain, fields.lba);
  put_u64(plain, fields.version);
  plain.push_back(uint8_t(fields.page_class));

  // SIV construction: the authenticity code doubles as the cipher IV, so
  // equal tags arise only from equal fields (which versioning rules out).
  const auto mac = hmac_sha256(key.tag_mac_key, plain);
  std::array<uint8_t, 16> iv{};
  std::memcpy(iv.data(), mac.data(), 16);

  Bytes out = filler_rng.bytes(oob_size);
  ctr_crypt(key.tag_enc_key, iv, plain, out.data());
  std::memcpy(out.data() + plain.size(), mac.data(), 16);
  return out;
}

std::optional<TagFields> tag_decode(const VolumeKey& key, std::span<const uint8_t> oob) {
  if (oob.size() < kTagSize) return std::nullopt;
  std::array<uint8_t, 16> iv{};
  std::memcpy(iv.data(), oob.data() + 13, 16);
  Bytes plain(13);
  ctr_crypt(key.tag_enc_key, iv, oob.subspan(0, 13), plain.data());
  const auto mac = hmac_sha256(key.tag_mac_key, plain);
  if (std::memcmp(mac.data(), oob.data() + 13, 16) != 0) return std::nullopt;
  TagFields fields;
  fields.lba = get_u32(plain.data());
  fields.version = get_u64(plain.data() + 4);
  const uint8_t cls = plain[12];
  if (cls < uint8_t(PageClass::PublicData) || cls > uint8_t(PageClass::MapCommit))
    return std::nullopt;
  fields.page_class = PageClass(cls);
  return fields;
}

Bytes encrypt_page(const VolumeKey& key, uint64_t page_index, uint64_t version,
                   std::span<const uint8_t> plaintext) {
  Bytes out(plaintext.size());
  ctr_crypt(key.page_key, make_iv(uint32_t(page_index), version), plaintext, out.data());
  return out;
}

Bytes decrypt_page(const VolumeKey& key, uint64_t page_index, uint64_t version,
                   std::span<const uint8_t> ciphertext) {
  return encrypt_page(key, page_index, version, ciphertext);  // CTR is an involution
}

Bytes seal_record(const std::array<uint8_t, 32>& enc_key,
                  const std::array<uint8_t, 32>& mac_key, uint64_t context,
                  std::span<const uint8_t> plaintext) {
  Bytes out(plaintext.size() + kSealOverhead);
  ctr_crypt(enc_key, make_iv(0xCAFE0001u, context), plaintext, out.data());
  Bytes mac_input;
  put_u64(mac_input, context);
  mac_input.insert(mac_input.end(), out.begin(), out.begin() + std::ssize(plaintext));
  const auto mac = hmac_sha256(mac_key, mac_input);
  std::memcpy(out.data() + plaintext.size(), mac.data(), kSealOverhead);
  return out;
}

std::optional<Bytes> open_record(const std::array<uint8_t, 32>& enc_key,
                                 const std::array<uint8_t, 32>& mac_key, uint64_t context,
                                 std::span<const uint8_t> sealed) {
  if (sealed.size() < kSealOverhead) return std::nullopt;
  const size_t body = sealed.size() - kSealOverhead;
  Bytes mac_input;
  put_u64(mac_input, context);
  mac_input.insert(mac_input.end(), sealed.begin(), sealed.begin() + std::ptrdiff_t(body));
  const auto mac = hmac_sha256(mac_key, mac_input);
  if (std::memcmp(mac.data(), sealed.data() + body, kSealOverhead) != 0) return std::nullopt;
  Bytes plain(body);
  ctr_crypt(enc_key, make_iv(0xCAFE0001u, context), sealed.subspan(0, body), plain.data());
  return plain;
}

std::vector<PhysPageAddr> derive_slot_pages(const VolumeKey& key, MapLabel label,
                                            uint32_t slot_count, const FlashGeometry& geom,
                                            const std::set<uint32_t>& avoid_blocks) {
  std::vector<PhysPageAddr> slots;
  std::set<uint32_t> taken = avoid_blocks;
  const uint64_t total = geom.total_pages();
  for (uint32_t i = 0; i < slot_count; ++i) {
    for (uint32_t attempt = 0;; ++attempt) {
      Bytes msg;
      msg.push_back(uint8_t(label));
      put_u32(msg, i);
      put_u32(msg, attempt);
      const auto prf = hmac_sha256(key.loc_key, msg);
      const uint64_t idx = get_u64(prf.data()) % total;
      const uint32_t block = uint32_t(idx / geom.pages_per_block);
      if (taken.count(block)) continue;
      taken.insert(block);
      slots.push_back({block, uint32_t(idx % geom.pages_per_block)});
      break;
    }
  }
  return slots;
}

PhysPageAddr map_slot_location(const VolumeKey& key, MapLabel label, uint32_t slot_index,
                               uint32_t slot_count, const FlashGeometry& geom,
                               const std::set<uint32_t>& avoid_blocks) {
  if (slot_index >= slot_count) fail(Errc::SlotOutOfRange, "slot index out of range");
  return derive_slot_pages(key, label, slot_count, geom, avoid_blocks)[slot_index];
}

uint64_t keyed_offset(const VolumeKey& key, std::string_view label, uint64_t modulus) {
  if (modulus == 0) return 0;
  Bytes msg(label.begin(), label.end());
  const auto prf = hmac_sha256(key.loc_key, msg);
  return get_u64(prf.data()) % modulus;
}

}  // namespace pdeftl
