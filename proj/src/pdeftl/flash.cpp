#include "flash.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <sstream>

namespace pdeftl {

namespace {
constexpr char kSnapMagic[8] = {'P', 'D', 'F', 'L', 'S', 'N', 'A', 'P'};
constexpr uint32_t kSnapVersion = 1;
constexpr uint32_t kFlagSidecar = 1u;
}  // namespace

void FlashGeometry::validate(bool allow_any_page_size) const {
  if (num_blocks == 0 || pages_per_block == 0 || page_size == 0 || oob_size == 0 ||
      pe_cycle_limit == 0)
    fail(Errc::InvalidGeometry, "geometry fields must be strictly positive");
  if (!allow_any_page_size && page_size != 512 && page_size != 2048 && page_size != 4096)
    fail(Errc::InvalidGeometry, "page_size must be 512, 2048 or 4096");
}

FlashArray::FlashArray(const FlashGeometry& geometry, bool allow_any_page_size)
    : geom_(geometry) {
  geom_.validate(allow_any_page_size);
  const uint64_t n = geom_.total_pages();
  data_.assign(n * geom_.page_size, 0xFF);
  oob_.assign(n * geom_.oob_size, 0xFF);
  state_.assign(n, uint8_t(PageState::Erased));
  wear_.assign(geom_.num_blocks, 0);
}

void FlashArray::check_addr(PhysPageAddr addr) const {
  if (addr.block >= geom_.num_blocks || addr.page >= geom_.pages_per_block)
    fail(Errc::OutOfRange, "page address out of range");
}

void FlashArray::program_page(PhysPageAddr addr, std::span<const uint8_t> data,
                              std::span<const uint8_t> oob) {
  check_addr(addr);
  if (is_bad(addr.block)) fail(Errc::BadBlock, "program on bad block");
  if (data.size() != geom_.page_size || oob.size() != geom_.oob_size)
    fail(Errc::LengthMismatch, "program payload size mismatch");
  const uint64_t idx = page_index(addr);
  if (state_[idx] != uint8_t(PageState::Erased))
    fail(Errc::PageNotErased, "page must be erased before programming");
  std::memcpy(cell_data(idx), data.data(), data.size());
  std::memcpy(cell_oob(idx), oob.data(), oob.size());
  state_[idx] = uint8_t(PageState::Programmed);
  programs_total_++;
}

void FlashArray::read_page(PhysPageAddr addr, Bytes& data, Bytes& oob,
                           PageState& state) const {
  check_addr(addr);
  const uint64_t idx = page_index(addr);
  data.assign(cell_data(idx), cell_data(idx) + geom_.page_size);
  oob.assign(cell_oob(idx), cell_oob(idx) + geom_.oob_size);
  state = PageState(state_[idx]);
}

PageState FlashArray::page_state(PhysPageAddr addr) const {
  check_addr(addr);
  return PageState(state_[page_index(addr)]);
}

std::span<const uint8_t> FlashArray::page_data(PhysPageAddr addr) const {
  check_addr(addr);
  return {cell_data(page_index(addr)), geom_.page_size};
}

std::span<const uint8_t> FlashArray::page_oob(PhysPageAddr addr) const {
  check_addr(addr);
  return {cell_oob(page_index(addr)), geom_.oob_size};
}

void FlashArray::erase_block(uint32_t block) {
  if (block >= geom_.num_blocks) fail(Errc::OutOfRange, "block out of range");
  if (is_bad(block)) fail(Errc::BadBlock, "erase on bad block");
  const uint64_t first = uint64_t(block) * geom_.pages_per_block;
  std::memset(cell_data(first), 0xFF, size_t(geom_.pages_per_block) * geom_.page_size);
  std::memset(cell_oob(first), 0xFF, size_t(geom_.pages_per_block) * geom_.oob_size);
  std::fill_n(state_.begin() + first, geom_.pages_per_block, uint8_t(PageState::Erased));
  wear_[block]++;
  erases_total_++;
  if (wear_[block] >= geom_.pe_cycle_limit) bad_.insert(block);  // worn out
}

uint32_t FlashArray::wear(uint32_t block) const {
  if (block >= geom_.num_blocks) fail(Errc::OutOfRange, "block out of range");
  return wear_[block];
}

void FlashArray::mark_bad(uint32_t block) {
  if (block >= geom_.num_blocks) fail(Errc::OutOfRange, "block out of range");
  bad_.insert(block);
}

FlashSnapshot FlashSnapshot::capture(const FlashArray& flash, bool include_sidecar) {
  FlashSnapshot s;
  s.geom_ = flash.geom_;
  s.has_sidecar_ = include_sidecar;
  s.state_ = flash.state_;
  s.data_ = flash.data_;
  s.oob_ = flash.oob_;
  if (include_sidecar) {
    s.wear_ = flash.wear_;
    s.bad_ = flash.bad_;
  }
  return s;
}

Bytes FlashSnapshot::serialize() const {
  Bytes out;
  const uint64_t n = geom_.total_pages();
  out.reserve(36 + n * (1 + geom_.page_size + geom_.oob_size) + geom_.num_blocks * 4);
  out.insert(out.end(), kSnapMagic, kSnapMagic + 8);
  put_u32(out, kSnapVersion);
  put_u32(out, has_sidecar_ ? kFlagSidecar : 0);
  put_u32(out, geom_.num_blocks);
  put_u32(out, geom_.pages_per_block);
  put_u32(out, geom_.page_size);
  put_u32(out, geom_.oob_size);
  put_u32(out, geom_.pe_cycle_limit);
  for (uint64_t i = 0; i < n; ++i) {
    out.push_back(state_[i]);
    out.insert(out.end(), data_.begin() + i * geom_.page_size,
               data_.begin() + (i + 1) * geom_.page_size);
    out.insert(out.end(), oob_.begin() + i * geom_.oob_size,
               oob_.begin() + (i + 1) * geom_.oob_size);
  }
  if (has_sidecar_) {
    for (uint32_t b = 0; b < geom_.num_blocks; ++b) put_u32(out, wear_[b]);
    Bytes bad_bits((geom_.num_blocks + 7) / 8, 0);
    for (uint32_t b : bad_) bad_bits[b / 8] |= uint8_t(1u << (b % 8));
    out.insert(out.end(), bad_bits.begin(), bad_bits.end());
  }
  return out;
}

FlashSnapshot FlashSnapshot::parse(std::span<const uint8_t> raw) {
  if (raw.size() < 36 || std::memcmp(raw.data(), kSnapMagic, 8) != 0)
    fail(Errc::BadSnapshot, "bad snapshot magic");
  const uint8_t* p = raw.data() + 8;
  const uint32_t version = get_u32(p);
  if (version != kSnapVersion) fail(Errc::BadSnapshot, "unsupported snapshot version");
  const uint32_t flags = get_u32(p + 4);
  FlashSnapshot s;
  s.geom_.num_blocks = get_u32(p + 8);
  s.geom_.pages_per_block = get_u32(p + 12);
  s.geom_.page_size = get_u32(p + 16);
  s.geom_.oob_size = get_u32(p + 20);
  s.geom_.pe_cycle_limit = get_u32(p + 24);
  s.geom_.validate(true);
  s.has_sidecar_ = (flags & kFlagSidecar) != 0;
  const uint64_t n = s.geom_.total_pages();
  const uint64_t rec = 1 + uint64_t(s.geom_.page_size) + s.geom_.oob_size;
  uint64_t need = 36 + n * rec;
  if (s.has_sidecar_) need += uint64_t(s.geom_.num_blocks) * 4 + (s.geom_.num_blocks + 7) / 8;
  if (raw.size() != need) fail(Errc::BadSnapshot, "snapshot size mismatch");
  s.state_.resize(n);
  s.data_.resize(n * s.geom_.page_size);
  s.oob_.resize(n * s.geom_.oob_size);
  const uint8_t* q = raw.data() + 36;
  for (uint64_t i = 0; i < n; ++i) {
    if (*q > 1) fail(Errc::BadSnapshot, "bad page state byte");
    s.state_[i] = *q++;
    std::memcpy(s.data_.data() + i * s.geom_.page_size, q, s.geom_.page_size);
    q += s.geom_.page_size;
    std::memcpy(s.oob_.data() + i * s.geom_.oob_size, q, s.geom_.oob_size);
    q += s.geom_.oob_size;
  }
  if (s.has_sidecar_) {
    s.wear_.resize(s.geom_.num_blocks);
    for (uint32_t b = 0; b < s.geom_.num_blocks; ++b) {
      s.wear_[b] = get_u32(q);
      q += 4;
    }
    for (uint32_t b = 0; b < s.geom_.num_blocks; ++b)
      if (q[b / 8] & (1u << (b % 8))) s.bad_.insert(b);
  }
  return s;
}

void FlashSnapshot::save(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(Errc::IoError, "cannot open for write: " + path);
  const Bytes raw = serialize();
  f.write(reinterpret_cast<const char*>(raw.data()), std::streamsize(raw.size()));
  if (!f) fail(Errc::IoError, "write failed: " + path);
}

FlashSnapshot FlashSnapshot::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(Errc::IoError, "cannot open for read: " + path);
  Bytes raw((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return parse(raw);
}

FlashArray FlashSnapshot::restore() const {
  if (!has_sidecar_) fail(Errc::BadSnapshot, "cannot restore without sidecar");
  FlashArray flash(geom_, true);
  flash.state_ = state_;
  flash.data_ = data_;
  flash.oob_ = oob_;
  flash.wear_ = wear_;
  flash.bad_ = bad_;
  return flash;
}

bool FlashSnapshot::operator==(const FlashSnapshot& other) const {
  return geom_ == other.geom_ && has_sidecar_ == other.has_sidecar_ &&
         state_ == other.state_ && data_ == other.data_ && oob_ == other.oob_ &&
         wear_ == other.wear_ && bad_ == other.bad_;
}

DiffReport diff_snapshots(const FlashSnapshot& a, const FlashSnapshot& b) {
  if (a.geometry() != b.geometry())
    fail(Errc::GeometryMismatch, "snapshots have different geometry");
  const FlashGeometry& g = a.geometry();
  DiffReport report;
  report.per_block_counts.assign(g.num_blocks, 0);
  const uint64_t n = g.total_pages();
  for (uint64_t i = 0; i < n; ++i) {
    const PageState sa = a.page_state(i), sb = b.page_state(i);
    PageChange change;
    if (sa == PageState::Erased && sb == PageState::Programmed) {
      change = PageChange::NewlyProgrammed;
    } else if (sa == PageState::Programmed && sb == PageState::Erased) {
      change = PageChange::EraseTransition;
    } else if (sa == PageState::Programmed && sb == PageState::Programmed) {
      const auto da = a.page_data(i), db = b.page_data(i);
      const auto oa = a.page_oob(i), ob = b.page_oob(i);
      if (std::equal(da.begin(), da.end(), db.begin()) &&
          std::equal(oa.begin(), oa.end(), ob.begin()))
        continue;
      change = PageChange::ContentChanged;
    } else {
      continue;  // erased -> erased is always byte-identical
    }
    const uint32_t block = uint32_t(i / g.pages_per_block);
    report.changes.push_back({{block, uint32_t(i % g.pages_per_block)}, change});
    report.per_block_counts[block]++;
  }
  return report;
}

std::string DiffReport::to_csv() const {
  std::ostringstream out;
  out << "block,page,change\n";
  for (const PageDiff& d : changes) {
    const char* kind = d.change == PageChange::NewlyProgrammed ? "programmed"
                       : d.change == PageChange::EraseTransition ? "erased"
                                                                 : "content";
    out << d.addr.block << ',' << d.addr.page << ',' << kind << '\n';
  }
  return out.str();
}

}  // namespace pdeftl
