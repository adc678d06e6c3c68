#include "pdeftl/ftl.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace pdeftl {

namespace {

constexpr char kSuperHeaderMagic[9] = "PDSBHDR1";
constexpr char kSuperDirtyMagic[9] = "PDSBDRT1";
constexpr uint32_t kOnFlashVersion = 1;
constexpr uint32_t kHeadTagPrefix = 0xFFFu;  // head tag lba = (0xFFF << 20) | slot

// Context bytes for sealed records; combined with the commit sequence they
// separate every sealed object class.
constexpr uint8_t kCtxSuper = 1;
constexpr uint8_t kCtxBlobPublic = 2;
constexpr uint8_t kCtxBlobHidden = 3;
constexpr uint8_t kCtxHeadPublic = 4;
constexpr uint8_t kCtxHeadHidden = 5;

uint64_t seal_ctx(uint8_t kind, uint64_t seq) {
  return (uint64_t(kind) << 56) | (seq & 0x00FFFFFFFFFFFFFFull);
}
uint8_t blob_ctx_for(MapLabel l) {
  return l == MapLabel::PublicMap ? kCtxBlobPublic : kCtxBlobHidden;
}
uint8_t head_ctx_for(MapLabel l) {
  return l == MapLabel::PublicMap ? kCtxHeadPublic : kCtxHeadHidden;
}

bool magic_match(std::span<const uint8_t> data, const char* magic) {
  return data.size() >= 8 && std::memcmp(data.data(), magic, 8) == 0;
}

bool contains(const std::vector<uint32_t>& v, uint32_t x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

void wipe_key(VolumeKey& k) {
  auto zero = [](std::array<uint8_t, 32>& a) { a.fill(0); };
  zero(k.material);
  zero(k.page_key);
  zero(k.tag_enc_key);
  zero(k.tag_mac_key);
  zero(k.map_key);
  zero(k.loc_key);
  zero(k.meta_key);
  zero(k.meta_mac_key);
}

}  // namespace

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::Locked: return "locked";
    case Mode::Public: return "public";
    case Mode::Hidden: return "hidden";
  }
  return "?";
}

const char* page_kind_name(PageKind k) {
  switch (k) {
    case PageKind::Free: return "free";
    case PageKind::Filler: return "filler";
    case PageKind::PublicLive: return "public_live";
    case PageKind::PublicStale: return "public_stale";
    case PageKind::HiddenLive: return "hidden_live";
    case PageKind::HiddenStale: return "hidden_stale";
    case PageKind::Dummy: return "dummy";
    case PageKind::PublicMap: return "public_map";
    case PageKind::PublicMapStale: return "public_map_stale";
    case PageKind::HiddenMap: return "hidden_map";
    case PageKind::HiddenMapStale: return "hidden_map_stale";
    case PageKind::SlotReserved: return "slot_reserved";
    case PageKind::Superblock: return "superblock";
  }
  return "?";
}

// ---------------------------------------------------------------- lifecycle

PdeFtl::PdeFtl(FlashArray flash, const FtlConfig& cfg)
    : flash_(std::move(flash)), cfg_(cfg) {
  cfg_.validate();
  if (!(flash_.geometry() == cfg_.geometry))
    fail(Errc::GeometryMismatch, "flash geometry does not match configuration");
  derive_geometry();

  rng_placement_ = Rng::substream(cfg_.master_seed, "placement");
  rng_content_ = Rng::substream(cfg_.master_seed, "content");
  rng_dummy_count_ = Rng::substream(cfg_.master_seed, "dummy-count");
  rng_idle_ = Rng::substream(cfg_.master_seed, "idle");
  rng_reclaim_ = Rng::substream(cfg_.master_seed, "reclaim");

  kind_.assign(total_pages_, PageKind::Free);
  bitmap_used_.assign(total_pages_, 0);
  invalid_public_.assign(total_pages_, 0);
  invalid_hidden_.assign(total_pages_, 0);
  dummy_ledger_.assign(total_pages_, 0);
  rev_public_.assign(total_pages_, -1);
  rev_hidden_.assign(total_pages_, -1);
  free_count_.assign(cfg_.geometry.num_blocks, 0);
  public_live_count_.assign(cfg_.geometry.num_blocks, 0);
  hidden_live_count_.assign(cfg_.geometry.num_blocks, 0);
  dummy_count_block_.assign(cfg_.geometry.num_blocks, 0);
  pool_.reset(total_pages_);
  for (uint64_t p = 0; p < uint64_t(kSuperblockBlocks) * ppb_; p++) {
    bitmap_used_[p] = 1;
    kind_[p] = PageKind::Superblock;
  }
}

void PdeFtl::derive_geometry() {
  const FlashGeometry& g = cfg_.geometry;
  total_pages_ = g.total_pages();
  ppb_ = g.pages_per_block;

  const uint32_t reserved_blocks = kSuperblockBlocks + 2 * cfg_.map_slots;
  if (g.num_blocks < reserved_blocks + 8)
    fail(Errc::GeometryTooSmall, "not enough blocks for reserved regions");
  usable_pages_ = total_pages_ - uint64_t(reserved_blocks) * ppb_;

  public_capacity_ = uint32_t(cfg_.public_capacity_frac * double(usable_pages_));
  hidden_capacity_ = uint32_t(cfg_.hidden_capacity_frac * double(usable_pages_));
  if (public_capacity_ == 0 || hidden_capacity_ == 0)
    fail(Errc::GeometryTooSmall, "volume capacity rounds to zero");

  baseline_head_limit_block_ =
      std::max<uint32_t>(kSuperblockBlocks + 1, uint32_t(0.70 * g.num_blocks));

  // Superblock commit record must fit in one region block with spare room
  // for the unlock marker.
  const uint64_t bitmap_bytes = (total_pages_ + 7) / 8;
  const uint64_t payload = 8 + 2 * bitmap_bytes + kSealOverhead;
  const uint64_t payload_pages = (payload + g.page_size - 1) / g.page_size;
  if (1 + payload_pages + 1 > ppb_)
    fail(Errc::GeometryTooSmall, "superblock record exceeds region block");

  // A full map commit (head plus chains) must be expressible.
  const uint64_t head_plain_cap = g.page_size - kSealOverhead;
  const uint64_t max_chains = (head_plain_cap - 8) / 4;
  max_map_bytes_ = (head_plain_cap - 8 - 4 * max_chains) + max_chains * g.page_size;
  const uint64_t worst_blob =
      8 + 16 * uint64_t(std::max(public_capacity_, hidden_capacity_)) + 4 +
      kSealOverhead;
  if (worst_blob > max_map_bytes_)
    fail(Errc::GeometryTooSmall, "mapping table exceeds commit chain capacity");

  if (cfg_.map_slots < 2)
    fail(Errc::BadConfig, "map_slots must be at least 2");
}

PdeFtl PdeFtl::format(FlashArray flash, const std::string& decoy_password,
                      const std::string& hidden_password, const FtlConfig& cfg) {
  if (decoy_password == hidden_password)
    fail(Errc::SamePassword, "decoy and hidden passwords must differ");

  PdeFtl ftl(std::move(flash), cfg);
  for (uint64_t p = 0; p < ftl.total_pages_; p++) {
    if (ftl.flash_.page_state(ftl.addr_of(p)) != PageState::Erased)
      fail(Errc::PageNotErased, "format requires a fully erased device");
  }

  ftl.salt_ = Rng::substream(cfg.master_seed, "salt").bytes(16);
  ftl.kdf_iters_ = cfg.kdf_iters;
  ftl.key_decoy_ = derive_key(decoy_password, ftl.salt_, KeyRole::Decoy, cfg.kdf_iters);
  ftl.key_true_ = derive_key(hidden_password, ftl.salt_, KeyRole::True, cfg.kdf_iters);

  std::set<uint32_t> avoid{0, 1};
  ftl.slot_pages_decoy_ = derive_slot_pages(*ftl.key_decoy_, MapLabel::PublicMap,
                                            cfg.map_slots, cfg.geometry, avoid);
  for (auto a : ftl.slot_pages_decoy_) ftl.slot_blocks_decoy_.push_back(a.block);
  for (uint32_t b : ftl.slot_blocks_decoy_) avoid.insert(b);
  ftl.slot_pages_true_ = derive_slot_pages(*ftl.key_true_, MapLabel::HiddenMap,
                                           cfg.map_slots, cfg.geometry, avoid);
  for (auto a : ftl.slot_pages_true_) ftl.slot_blocks_true_.push_back(a.block);

  // Random fill: every page outside the superblock region is programmed with
  // random content, except the slot pages the first commit will claim.
  std::vector<uint8_t> is_head(ftl.total_pages_, 0);
  for (auto a : ftl.slot_pages_decoy_) is_head[ftl.page_index(a)] = 1;
  for (auto a : ftl.slot_pages_true_) is_head[ftl.page_index(a)] = 1;

  const uint32_t page_size = cfg.geometry.page_size;
  const uint32_t oob_size = cfg.geometry.oob_size;
  for (uint32_t b = kSuperblockBlocks; b < cfg.geometry.num_blocks; b++) {
    const bool slot_block = contains(ftl.slot_blocks_decoy_, b) ||
                            contains(ftl.slot_blocks_true_, b);
    for (uint32_t pg = 0; pg < ftl.ppb_; pg++) {
      const uint64_t p = uint64_t(b) * ftl.ppb_ + pg;
      if (slot_block) ftl.bitmap_used_[p] = 1;
      if (is_head[p]) {
        ftl.kind_[p] = PageKind::SlotReserved;
        continue;
      }
      ftl.flash_.program_page({b, pg}, ftl.rng_content_.bytes(page_size),
                              ftl.rng_content_.bytes(oob_size));
      ftl.kind_[p] = slot_block ? PageKind::SlotReserved : PageKind::Filler;
      ftl.metrics_.pages_format_fill++;
    }
  }

  ftl.map_public_.assign(ftl.public_capacity_, {});
  ftl.map_hidden_.assign(ftl.hidden_capacity_, {});
  ftl.rebuild_runtime_from_bitmap();
  ftl.version_next_ = 1;
  ftl.commit_seq_next_ = 0;
  if (cfg.strategy == Strategy::HiddenVolumeBaseline) ftl.compute_baseline_tail();

  ftl.log_event("format", -1, -1, "fill=" + std::to_string(ftl.metrics_.pages_format_fill));
  ftl.do_commit(true);
  ftl.wipe_session_state();
  return ftl;
}

PdeFtl PdeFtl::adopt(FlashArray flash, const FtlConfig& cfg) {
  PdeFtl ftl(std::move(flash), cfg);
  SuperState st = ftl.scan_superblock();
  if (!st.have_commit)
    fail(Errc::NoValidSuperblock, "device carries no valid superblock commit");
  ftl.salt_ = st.salt;
  ftl.kdf_iters_ = st.kdf_iters;
  ftl.crash_pending_ = st.dirty;
  for (uint64_t p = kSuperblockBlocks * uint64_t(ftl.ppb_); p < ftl.total_pages_; p++)
    ftl.kind_[p] = ftl.flash_.page_state(ftl.addr_of(p)) == PageState::Programmed
                       ? PageKind::Filler
                       : PageKind::Free;
  return ftl;
}

// ------------------------------------------------------------- shared state

bool PdeFtl::is_reserved_block(uint32_t block) const {
  return block < kSuperblockBlocks || is_slot_block_known(block);
}

bool PdeFtl::is_slot_block_known(uint32_t block) const {
  if (key_decoy_ && contains(slot_blocks_decoy_, block)) return true;
  if (key_true_ && contains(slot_blocks_true_, block)) return true;
  return false;
}

void PdeFtl::require_mode(Mode m, const char* what) const {
  if (mode_ != m) fail(Errc::WrongMode, what);
}

void PdeFtl::log_event(const char* op, int64_t lba, int64_t page,
                       const std::string& detail) {
  if (!events_enabled_) return;
  events_.push_back({events_.size(), tick_now_, mode_, op, lba, page, detail});
}

void PdeFtl::mark_used(uint64_t page, PageKind kind) {
  kind_[page] = kind;
  bool track = true;
  if (cfg_.strategy == Strategy::HiddenVolumeBaseline &&
      (kind == PageKind::HiddenLive || kind == PageKind::HiddenMap))
    track = false;  // baseline hides nothing in shared metadata
  if (track && !bitmap_used_[page]) {
    bitmap_used_[page] = 1;
    free_count_[block_of(page)]--;
    free_total_--;
  }
  pool_.remove(page);
}

void PdeFtl::mark_free(uint64_t page) {
  if (bitmap_used_[page]) {
    bitmap_used_[page] = 0;
    free_count_[block_of(page)]++;
    free_total_++;
  }
}

double PdeFtl::load_factor() const {
  // Physical occupancy: stale pages count as load until their block is
  // erased, so high load means erased headroom is actually scarce.
  return 1.0 - erased_free_fraction();
}

double PdeFtl::erased_free_fraction() const {
  return double(std::min(pool_.size(), usable_pages_)) / double(usable_pages_);
}

uint64_t PdeFtl::pool_target() const {
  return std::max<uint64_t>(uint64_t(std::ceil(cfg_.gc_free_low * double(usable_pages_))),
                            2 * uint64_t(ppb_));
}

std::vector<uint64_t> PdeFtl::inspect_pool() const {
  std::vector<uint64_t> out;
  out.reserve(pool_.size());
  for (uint64_t i = 0; i < pool_.size(); i++) out.push_back(pool_.kth(i));
  return out;
}

// ---------------------------------------------------------------- placement

uint64_t PdeFtl::pool_in_block(uint32_t block) const {
  return pool_.rank(uint64_t(block + 1) * ppb_) - pool_.rank(uint64_t(block) * ppb_);
}

uint64_t PdeFtl::pool_draw() {
  const uint64_t k = rng_placement_.below(pool_.size());
  const uint64_t page = pool_.kth(k);
  if (observer_) {
    std::vector<uint32_t> counts(cfg_.geometry.num_blocks);
    for (uint32_t b = 0; b < cfg_.geometry.num_blocks; b++)
      counts[b] = uint32_t(pool_in_block(b));
    observer_(counts, page);
  }
  return page;
}

uint64_t PdeFtl::place_page(bool hidden_ctx) {
  if (cfg_.strategy == Strategy::DummyRandom) {
    ensure_pool(1);
    return pool_draw();
  }
  return hidden_ctx ? place_baseline_hidden() : place_baseline_public();
}

uint64_t PdeFtl::reloc_target(bool hidden_ctx) {
  if (cfg_.strategy == Strategy::DummyRandom) return pool_draw();
  return hidden_ctx ? pool_.kth(pool_.size() - 1) : pool_.kth(0);
}

uint64_t PdeFtl::place_baseline_public() {
  // Head allocation grows upward from the low blocks. Erased tail pages are
  // taken only once no head block can be erased any more; the keyed part of
  // the tail boundary stays unknown here, so the fixed floor is the fence.
  const uint64_t head_limit = uint64_t(baseline_head_limit_block_) * ppb_;
  for (;;) {
    if (pool_.size() > 0 && pool_.kth(0) < head_limit) return pool_.kth(0);
    int64_t victim = -1;
    for (uint32_t b = kSuperblockBlocks; b < baseline_head_limit_block_; b++) {
      if (flash_.is_bad(b) || is_reserved_block(b)) continue;
      if (free_count_[b] != ppb_) continue;
      if (pool_in_block(b) == ppb_) continue;
      victim = b;
      break;
    }
    if (victim >= 0) {
      erase_and_account(uint32_t(victim), "head_prep");
      continue;
    }
    if (pool_.size() > 0) return pool_.kth(0);
    if (!try_raise_pool()) fail(Errc::DeviceFull, "no erasable space available");
  }
}

uint64_t PdeFtl::place_baseline_hidden() {
  const uint64_t tail_start = uint64_t(baseline_tail_start_block_) * ppb_;
  for (;;) {
    if (pool_.size() > 0) {
      const uint64_t top = pool_.kth(pool_.size() - 1);
      if (top >= tail_start) return top;
    }
    // Erase the highest fully free tail block without hidden data.
    int64_t victim = -1;
    for (int64_t b = cfg_.geometry.num_blocks - 1;
         b >= int64_t(baseline_tail_start_block_); b--) {
      const uint32_t ub = uint32_t(b);
      if (flash_.is_bad(ub) || is_reserved_block(ub)) continue;
      if (free_count_[ub] != ppb_ || hidden_live_count_[ub] != 0) continue;
      if (pool_in_block(ub) == ppb_) continue;
      victim = b;
      break;
    }
    if (victim < 0)
      fail(Errc::VolumesCollide, "hidden tail region exhausted by public allocation");
    erase_and_account(uint32_t(victim), "tail_prep");
  }
}

void PdeFtl::ensure_pool(uint64_t need) {
  while (pool_.size() < need) {
    if (!try_raise_pool()) fail(Errc::DeviceFull, "no erasable space available");
  }
}

bool PdeFtl::try_raise_pool() {
  if (prep_erase_one()) return true;
  if (relocate_victim_once()) return true;
  if (mode_ == Mode::Hidden && cfg_.strategy == Strategy::DummyRandom) {
    ReclaimReport tmp;
    if (hidden_reclaim_one(tmp)) return true;
  }
  if (mode_ == Mode::Public && cfg_.strategy == Strategy::DummyRandom &&
      load_factor() >= cfg_.load_high) {
    ReclaimReport tmp;
    high_load_reclaim(tmp);
    if (tmp.pages_freed > 0) return true;
  }
  return false;
}

bool PdeFtl::prep_erase_one() {
  // Victim = uniformly random block among the minimum-wear candidates, so
  // erase churn carries no positional signature; the baseline instead takes
  // the lowest index, which is exactly its head/tail allocation tell.
  const bool by_wear = cfg_.strategy == Strategy::DummyRandom;
  int64_t best = -1;
  uint32_t best_wear = 0;
  uint32_t ties = 0;
  for (uint32_t b = kSuperblockBlocks; b < cfg_.geometry.num_blocks; b++) {
    if (flash_.is_bad(b) || free_count_[b] != ppb_) continue;
    if (mode_ == Mode::Hidden && hidden_live_count_[b] != 0) continue;
    if (pool_in_block(b) == ppb_) continue;  // already fully erased
    if (best < 0) {
      best = b;
      best_wear = flash_.wear(b);
      ties = 1;
      if (!by_wear) break;
      continue;
    }
    if (!by_wear) continue;
    const uint32_t w = flash_.wear(b);
    if (w < best_wear) {
      best = b;
      best_wear = w;
      ties = 1;
    } else if (w == best_wear && rng_placement_.below(++ties) == 0) {
      best = b;
    }
  }
  if (best < 0) return false;
  erase_and_account(uint32_t(best), "prep");
  return true;
}

bool PdeFtl::relocate_victim_once() {
  int64_t best = -1;
  int64_t best_gain = 0;
  uint32_t best_wear = 0;
  for (uint32_t b = kSuperblockBlocks; b < cfg_.geometry.num_blocks; b++) {
    if (flash_.is_bad(b) || free_count_[b] == ppb_) continue;
    uint64_t accounted = free_count_[b] + public_live_count_[b];
    uint64_t lives = public_live_count_[b];
    if (mode_ == Mode::Hidden) {
      lives += hidden_live_count_[b];
      if (cfg_.strategy == Strategy::DummyRandom)
        accounted += hidden_live_count_[b];
    }
    if (accounted != ppb_) continue;  // block holds pages this mode cannot move
    if (lives > pool_.size()) continue;
    const int64_t gain = int64_t(ppb_) - int64_t(pool_in_block(b)) - int64_t(lives);
    if (gain <= 0) continue;
    const bool better =
        best < 0 || (cfg_.strategy == Strategy::DummyRandom
                         ? (gain > best_gain ||
                            (gain == best_gain && flash_.wear(b) < best_wear))
                         : false);
    if (better) {
      best = b;
      best_gain = gain;
      best_wear = flash_.wear(b);
    }
    if (cfg_.strategy == Strategy::HiddenVolumeBaseline && best >= 0) break;
  }
  if (best < 0) return false;

  const uint32_t b = uint32_t(best);
  for (uint64_t p = uint64_t(b) * ppb_; p < uint64_t(b + 1) * ppb_; p++) {
    if (rev_public_[p] >= 0) relocate_page(p);
    else if (mode_ == Mode::Hidden && rev_hidden_[p] >= 0) relocate_page(p);
  }
  erase_and_account(b, "compact");
  return true;
}

void PdeFtl::relocate_page(uint64_t page) {
  const bool hid = rev_hidden_[page] >= 0;
  const uint32_t lba = uint32_t(hid ? rev_hidden_[page] : rev_public_[page]);
  const VolumeKey& key = hid ? *key_true_ : *key_decoy_;
  auto& map = hid ? map_hidden_ : map_public_;
  const MapEntry old = map[lba];

  Bytes plain = decrypt_page(key, page, old.version, flash_.page_data(addr_of(page)));
  const uint64_t version = version_next_++;
  const uint64_t target = reloc_target(hid);
  program_data_page(target, key, lba, version, plain,
                    hid ? PageClass::HiddenData : PageClass::PublicData,
                    hid ? PageKind::HiddenLive : PageKind::PublicLive);

  map[lba] = {uint32_t(target), version};
  (hid ? rev_hidden_ : rev_public_)[target] = lba;
  (hid ? hidden_live_count_ : public_live_count_)[block_of(target)]++;

  (hid ? rev_hidden_ : rev_public_)[page] = -1;
  (hid ? hidden_live_count_ : public_live_count_)[block_of(page)]--;
  mark_free(page);
  (hid ? invalid_hidden_ : invalid_public_)[page] = 1;
  kind_[page] = hid ? PageKind::HiddenStale : PageKind::PublicStale;

  (hid ? metrics_.pages_reloc_hidden : metrics_.pages_reloc_public)++;
  log_event("relocate", lba, int64_t(target), hid ? "hidden" : "public");
}

void PdeFtl::erase_and_account(uint32_t block, const char* why) {
  const uint64_t first = uint64_t(block) * ppb_;
  for (uint64_t p = first; p < first + ppb_; p++) {
    if (kind_[p] == PageKind::HiddenLive || kind_[p] == PageKind::HiddenMap)
      metrics_.baseline_hidden_overwrites++;
    invalid_public_[p] = 0;
    invalid_hidden_[p] = 0;
    if (dummy_ledger_[p]) {
      dummy_ledger_[p] = 0;
      dummy_count_block_[block]--;
    }
    kind_[p] = is_slot_block_known(block) ? PageKind::SlotReserved : PageKind::Free;
  }
  flash_.erase_block(block);
  if (!flash_.is_bad(block)) {
    for (uint64_t p = first; p < first + ppb_; p++)
      if (!bitmap_used_[p]) pool_.add(p);
  }
  log_event("erase", -1, int64_t(first), std::string(why) + " block=" + std::to_string(block));
}

// ---------------------------------------------------------------- data path

void PdeFtl::program_data_page(uint64_t page, const VolumeKey& key, uint32_t lba,
                               uint64_t version, std::span<const uint8_t> plain,
                               PageClass cls, PageKind kind) {
  Bytes cipher = encrypt_page(key, page, version, plain);
  Bytes oob = tag_encode(key, {lba, version, cls}, cfg_.geometry.oob_size, rng_content_);
  flash_.program_page(addr_of(page), cipher, oob);
  mark_used(page, kind);
}

void PdeFtl::require_capacity() {
  if (free_total_ >= capacity_floor() + 1) return;
  if (mode_ == Mode::Public) gc_public_pass();
  else gc_hidden_pass(false);
  if (free_total_ < capacity_floor() + 1)
    fail(Errc::DeviceFull, "free pages below hard floor");
}

void PdeFtl::write_sector(uint32_t lba, std::span<const uint8_t> data) {
  require_mode(Mode::Public, "public writes require an unlocked public volume");
  if (lba >= public_capacity_) fail(Errc::OutOfRange, "lba beyond public capacity");
  if (data.size() != cfg_.geometry.page_size)
    fail(Errc::LengthMismatch, "sector length must equal page size");
  require_capacity();

  const uint64_t version = version_next_++;
  const uint64_t target = place_page(false);
  program_data_page(target, *key_decoy_, lba, version, data, PageClass::PublicData,
                    PageKind::PublicLive);

  const MapEntry old = map_public_[lba];
  if (old.mapped()) {
    rev_public_[old.ppa] = -1;
    public_live_count_[block_of(old.ppa)]--;
    mark_free(old.ppa);
    invalid_public_[old.ppa] = 1;
    kind_[old.ppa] = PageKind::PublicStale;
  }
  map_public_[lba] = {uint32_t(target), version};
  rev_public_[target] = lba;
  public_live_count_[block_of(target)]++;

  metrics_.logical_public_writes++;
  metrics_.pages_public_data++;
  log_event("write", lba, int64_t(target), "");

  if (cfg_.strategy == Strategy::DummyRandom)
    run_dummy_burst(rng_dummy_count_.geometric(cfg_.dummy_mean), true, "write");
  ticks_since_public_ = 0;
  maintain_after_write();
}

void PdeFtl::hidden_write_sector(uint32_t lba, std::span<const uint8_t> data) {
  require_mode(Mode::Hidden, "hidden writes require an unlocked hidden volume");
  if (lba >= hidden_capacity_) fail(Errc::OutOfRange, "lba beyond hidden capacity");
  if (data.size() != cfg_.geometry.page_size)
    fail(Errc::LengthMismatch, "sector length must equal page size");
  require_capacity();

  const uint64_t version = version_next_++;
  const uint64_t target = place_page(true);
  program_data_page(target, *key_true_, lba, version, data, PageClass::HiddenData,
                    PageKind::HiddenLive);

  const MapEntry old = map_hidden_[lba];
  if (old.mapped()) {
    rev_hidden_[old.ppa] = -1;
    hidden_live_count_[block_of(old.ppa)]--;
    mark_free(old.ppa);
    invalid_hidden_[old.ppa] = 1;
    kind_[old.ppa] = PageKind::HiddenStale;
  }
  map_hidden_[lba] = {uint32_t(target), version};
  rev_hidden_[target] = lba;
  hidden_live_count_[block_of(target)]++;

  metrics_.logical_hidden_writes++;
  metrics_.pages_hidden_data++;
  log_event("hidden_write", lba, int64_t(target), "");
  maintain_after_write();
}

Bytes PdeFtl::read_sector(uint32_t lba) {
  if (mode_ == Mode::Locked) fail(Errc::WrongMode, "device is locked");
  const bool hid = mode_ == Mode::Hidden;
  const auto& map = hid ? map_hidden_ : map_public_;
  const uint32_t cap = hid ? hidden_capacity_ : public_capacity_;
  if (lba >= cap) fail(Errc::OutOfRange, "lba beyond volume capacity");
  metrics_.logical_reads++;
  const MapEntry e = map[lba];
  if (!e.mapped()) return Bytes(cfg_.geometry.page_size, 0);
  return decrypt_page(hid ? *key_true_ : *key_decoy_, e.ppa, e.version,
                      flash_.page_data(addr_of(e.ppa)));
}

void PdeFtl::write_dummy_page() {
  const uint64_t target = place_page(false);
  Bytes data = rng_content_.bytes(cfg_.geometry.page_size);
  Bytes oob = rng_content_.bytes(cfg_.geometry.oob_size);
  flash_.program_page(addr_of(target), data, oob);
  mark_used(target, PageKind::Dummy);
  dummy_ledger_[target] = 1;
  dummy_count_block_[block_of(target)]++;
  metrics_.pages_dummy++;
}

void PdeFtl::run_dummy_burst(uint32_t count, bool skip_on_full, const char* why) {
  if (cfg_.strategy != Strategy::DummyRandom) return;
  uint32_t done = 0;
  for (uint32_t i = 0; i < count; i++) {
    if (free_total_ < capacity_floor() + 1) {
      if (skip_on_full) break;
      fail(Errc::DeviceFull, "free pages below hard floor");
    }
    try {
      write_dummy_page();
      done++;
    } catch (const Error& e) {
      if (skip_on_full && e.code() == Errc::DeviceFull) break;
      throw;
    }
  }
  if (count > 0)
    log_event("dummy_burst", -1, -1,
              std::string(why) + " n=" + std::to_string(done) + "/" + std::to_string(count));
}

void PdeFtl::dummy_write(uint32_t count) {
  if (mode_ == Mode::Locked) fail(Errc::WrongMode, "device is locked");
  if (cfg_.strategy != Strategy::DummyRandom) return;
  for (uint32_t i = 0; i < count; i++) {
    if (free_total_ < capacity_floor() + 1)
      fail(Errc::DeviceFull, "free pages below hard floor");
    write_dummy_page();
  }
  log_event("dummy", -1, -1, "n=" + std::to_string(count));
  maintain_after_write();
}

void PdeFtl::tick(uint32_t n) {
  for (uint32_t i = 0; i < n; i++) {
    tick_now_++;
    metrics_.ticks++;
    if (mode_ == Mode::Locked) continue;
    ticks_since_public_++;
    if (ticks_since_public_ < cfg_.idle_threshold) continue;
    ticks_since_public_ = 0;
    if (cfg_.strategy == Strategy::DummyRandom) {
      metrics_.idle_bursts++;
      const uint32_t burst = rng_idle_.geometric(cfg_.idle_dummy_count);
      run_dummy_burst(burst, true, "idle");
      log_event("idle_burst", -1, -1, "n=" + std::to_string(burst));
    }
    if (mode_ == Mode::Hidden) gc_hidden_pass(true);
  }
}

void PdeFtl::maintain_after_write() {
  if (erased_free_fraction() >= cfg_.gc_free_low) return;
  if (mode_ == Mode::Public) gc_public_pass();
  else gc_hidden_pass(false);
}

// ----------------------------------------------------------------------- gc

ReclaimReport PdeFtl::gc_public() {
  require_mode(Mode::Public, "public reclamation requires the public mode");
  return gc_public_pass();
}

ReclaimReport PdeFtl::gc_hidden() {
  require_mode(Mode::Hidden, "hidden reclamation requires the hidden mode");
  return gc_hidden_pass(true);
}

ReclaimReport PdeFtl::gc_public_pass() {
  ReclaimReport rep;
  metrics_.gc_public_passes++;
  const uint64_t pre_reloc = metrics_.pages_reloc_public + metrics_.pages_reloc_hidden;
  const uint64_t pre_erase = flash_.erases_total();

  const bool may_reclaim =
      cfg_.strategy == Strategy::DummyRandom && mode_ == Mode::Public;

  // Reclaim is strictly a last resort: blocks holding dummy candidates are
  // neither erasable nor compactable, so when erase and compaction both
  // stall at high load, repeated reclaim passes are the only way to keep
  // making room; each pass uses the same per-page coin.
  const uint64_t target = pool_target();
  while (pool_.size() < target) {
    if (prep_erase_one()) continue;
    if (relocate_victim_once()) continue;
    if (may_reclaim && load_factor() >= cfg_.load_high) {
      const uint64_t before = rep.pages_freed;
      high_load_reclaim(rep);
      if (rep.pages_freed > before) continue;
    }
    break;
  }

  rep.pages_relocated_public =
      uint32_t(metrics_.pages_reloc_public + metrics_.pages_reloc_hidden - pre_reloc);
  rep.blocks_erased = uint32_t(flash_.erases_total() - pre_erase);
  log_event("gc_public", -1, -1,
            "erased=" + std::to_string(rep.blocks_erased) +
                " freed=" + std::to_string(rep.pages_freed));
  return rep;
}

void PdeFtl::high_load_reclaim(ReclaimReport& report) {
  const double f = cfg_.gc_reclaim_fraction;
  uint64_t candidates = 0;
  uint64_t hidden_candidates = 0;
  for (uint64_t p = uint64_t(kSuperblockBlocks) * ppb_; p < total_pages_; p++) {
    if (!bitmap_used_[p] || rev_public_[p] >= 0) continue;
    const uint32_t b = block_of(p);
    if (contains(slot_blocks_decoy_, b)) continue;
    if (contains(live_chain_public_, uint32_t(p))) continue;
    if (int64_t(p) == head_page_public_) continue;

    candidates++;
    const bool hidden_kind =
        kind_[p] == PageKind::HiddenLive || kind_[p] == PageKind::HiddenMap;
    if (hidden_kind) hidden_candidates++;

    if (rng_reclaim_.unit() >= f) continue;
    mark_free(p);
    invalid_public_[p] = 1;
    report.pages_freed++;
    if (kind_[p] == PageKind::Dummy) {
      report.dummy_pages_reclaimed++;
      metrics_.dummy_pages_reclaimed++;
      if (dummy_ledger_[p]) {
        dummy_ledger_[p] = 0;
        dummy_count_block_[b]--;
      }
    }
    if (hidden_kind) {
      report.hidden_risk_pages++;
      metrics_.hidden_risk_pages++;
    }
    kind_[p] = PageKind::Free;
  }
  const double expected = f * double(hidden_candidates);
  report.expected_hidden_loss += expected;
  metrics_.expected_hidden_loss += expected;
  log_event("reclaim", -1, -1,
            "candidates=" + std::to_string(candidates) +
                " freed=" + std::to_string(report.pages_freed) +
                " hidden_lost=" + std::to_string(report.hidden_risk_pages));
}

bool PdeFtl::hidden_reclaim_one(ReclaimReport& report) {
  int64_t best = -1;
  uint64_t best_score = 0;
  uint32_t best_wear = 0;
  for (uint32_t b = kSuperblockBlocks; b < cfg_.geometry.num_blocks; b++) {
    if (flash_.is_bad(b)) continue;
    const uint64_t accounted = uint64_t(free_count_[b]) + public_live_count_[b] +
                               hidden_live_count_[b] + dummy_count_block_[b];
    if (accounted != ppb_) continue;
    const uint64_t lives = uint64_t(public_live_count_[b]) + hidden_live_count_[b];
    if (lives > pool_.size()) continue;
    const uint64_t score =
        dummy_count_block_[b] + (free_count_[b] - pool_in_block(b));
    if (score == 0) continue;
    if (best < 0 || score > best_score ||
        (score == best_score && flash_.wear(b) < best_wear)) {
      best = b;
      best_score = score;
      best_wear = flash_.wear(b);
    }
  }
  if (best < 0) return false;

  const uint32_t b = uint32_t(best);
  const uint64_t first = uint64_t(b) * ppb_;
  for (uint64_t p = first; p < first + ppb_; p++) {
    if (dummy_ledger_[p]) {
      dummy_ledger_[p] = 0;
      dummy_count_block_[b]--;
      mark_free(p);
      kind_[p] = PageKind::Free;
      invalid_hidden_[p] = 1;
      report.dummy_pages_reclaimed++;
      metrics_.dummy_pages_reclaimed++;
      report.pages_freed++;
    }
  }
  for (uint64_t p = first; p < first + ppb_; p++) {
    if (rev_public_[p] >= 0 || rev_hidden_[p] >= 0) relocate_page(p);
  }
  erase_and_account(b, "hidden_gc");
  report.blocks_erased++;
  report.blocks_processed++;
  return true;
}

ReclaimReport PdeFtl::gc_hidden_pass(bool deep) {
  ReclaimReport rep;
  metrics_.gc_hidden_passes++;

  if (cfg_.strategy == Strategy::HiddenVolumeBaseline) {
    // Keep the tail erasable: clear stale blocks above the tail boundary.
    for (uint32_t b = cfg_.geometry.num_blocks; b-- > baseline_tail_start_block_;) {
      if (flash_.is_bad(b) || is_reserved_block(b)) continue;
      if (free_count_[b] != ppb_ || hidden_live_count_[b] != 0) continue;
      if (pool_in_block(b) == ppb_) continue;
      erase_and_account(b, "tail_gc");
      rep.blocks_erased++;
    }
    return rep;
  }

  // The deep sweep runs from idle ticks and explicit requests; write-path
  // upkeep stays shallow so foreground traffic only pays for pool repair.
  if (deep) {
    while (load_factor() > cfg_.hidden_gc_target) {
      if (hidden_reclaim_one(rep)) continue;
      if (prep_erase_one()) continue;
      break;
    }
  }
  const uint64_t target = pool_target();
  while (pool_.size() < target) {
    if (prep_erase_one()) continue;
    if (relocate_victim_once()) continue;
    if (hidden_reclaim_one(rep)) continue;
    break;
  }
  log_event("gc_hidden", -1, -1,
            "reclaimed=" + std::to_string(rep.dummy_pages_reclaimed));
  return rep;
}

// ----------------------------------------------------------- map commit I/O

Bytes PdeFtl::serialize_map(const std::vector<MapEntry>& map,
                            bool include_invalid_hidden) const {
  Bytes out;
  put_u32(out, uint32_t(map.size()));
  uint32_t count = 0;
  for (const auto& e : map)
    if (e.mapped()) count++;
  put_u32(out, count);
  for (uint32_t lba = 0; lba < map.size(); lba++) {
    if (!map[lba].mapped()) continue;
    put_u32(out, lba);
    put_u32(out, map[lba].ppa);
    put_u64(out, map[lba].version);
  }
  if (include_invalid_hidden) {
    std::vector<uint32_t> pages;
    for (uint64_t p = 0; p < total_pages_; p++)
      if (invalid_hidden_[p]) pages.push_back(uint32_t(p));
    // Advisory data: truncate rather than overflow the chain budget.
    const uint64_t room = max_map_bytes_ - kSealOverhead - out.size() - 4;
    if (pages.size() > room / 4) pages.resize(room / 4);
    put_u32(out, uint32_t(pages.size()));
    for (uint32_t p : pages) put_u32(out, p);
  }
  return out;
}

void PdeFtl::load_map_blob(std::span<const uint8_t> blob, std::vector<MapEntry>& map,
                           bool expect_invalid_hidden) {
  size_t off = 0;
  auto need = [&](size_t n) {
    if (off + n > blob.size())
      fail(Errc::NoValidSuperblock, "mapping payload truncated");
  };
  need(8);
  const uint32_t cap = get_u32(blob.data());
  const uint32_t count = get_u32(blob.data() + 4);
  off = 8;
  if (cap != map.size()) fail(Errc::BadConfig, "volume capacity does not match device");
  for (uint32_t i = 0; i < count; i++) {
    need(16);
    const uint32_t lba = get_u32(blob.data() + off);
    const uint32_t ppa = get_u32(blob.data() + off + 4);
    const uint64_t version = get_u64(blob.data() + off + 8);
    off += 16;
    if (lba >= cap || ppa >= total_pages_)
      fail(Errc::NoValidSuperblock, "mapping entry out of range");
    map[lba] = {ppa, version};
  }
  if (expect_invalid_hidden) {
    need(4);
    const uint32_t n = get_u32(blob.data() + off);
    off += 4;
    for (uint32_t i = 0; i < n; i++) {
      need(4);
      const uint32_t p = get_u32(blob.data() + off);
      off += 4;
      if (p < total_pages_) invalid_hidden_[p] = 1;
    }
  }
}

void PdeFtl::commit_map(const VolumeKey& key, MapLabel label, uint64_t seq) {
  const bool pub = label == MapLabel::PublicMap;
  const auto& slots = pub ? slot_pages_decoy_ : slot_pages_true_;
  auto& live_chain = pub ? live_chain_public_ : live_chain_hidden_;
  int64_t& head_page = pub ? head_page_public_ : head_page_hidden_;
  const PageKind live_kind = pub ? PageKind::PublicMap : PageKind::HiddenMap;
  const PageKind stale_kind = pub ? PageKind::PublicMapStale : PageKind::HiddenMapStale;

  const Bytes blob = serialize_map(pub ? map_public_ : map_hidden_, !pub);
  const Bytes sealed = seal_record(key.map_key, key.meta_mac_key,
                                   seal_ctx(blob_ctx_for(label), seq), blob);
  const uint64_t L = sealed.size();
  const uint64_t page_size = cfg_.geometry.page_size;
  const uint64_t head_plain_cap = page_size - kSealOverhead;

  uint64_t n = 0;
  for (;;) {
    const int64_t head_room = int64_t(head_plain_cap) - 8 - int64_t(4 * n);
    if (head_room < 0)
      fail(Errc::GeometryTooSmall, "mapping table exceeds commit chain capacity");
    if (uint64_t(head_room) + n * page_size >= L) break;
    n++;
  }

  // Chain pages first, then the head that references them.
  std::vector<uint32_t> chains;
  const uint64_t head_slice = head_plain_cap - 8 - 4 * n;
  uint64_t off = std::min(L, head_slice);
  for (uint64_t i = 0; i < n; i++) {
    const uint64_t target = place_page(!pub);
    Bytes data(sealed.begin() + off, sealed.begin() + std::min(L, off + page_size));
    off = std::min(L, off + page_size);
    while (data.size() < page_size) data.push_back(uint8_t(rng_content_.next()));
    Bytes oob = tag_encode(key, {uint32_t((uint64_t(seq % slots.size()) << 20) | i), seq,
                                 PageClass::MapCommit},
                           cfg_.geometry.oob_size, rng_content_);
    flash_.program_page(addr_of(target), data, oob);
    mark_used(target, live_kind);
    metrics_.pages_map_commit++;
    chains.push_back(uint32_t(target));
  }

  // Claim a commit slot, erasing its block if the page is consumed.
  const uint32_t R = uint32_t(slots.size());
  int64_t chosen = -1;
  for (uint32_t t = 0; t < R; t++) {
    const uint32_t si = uint32_t((seq + t) % R);
    const PhysPageAddr addr = slots[si];
    if (flash_.is_bad(addr.block)) continue;
    if (flash_.page_state(addr) != PageState::Erased) {
      const uint64_t first = uint64_t(addr.block) * ppb_;
      uint64_t lives = 0;
      for (uint64_t p = first; p < first + ppb_; p++)
        if (rev_public_[p] >= 0 || rev_hidden_[p] >= 0) lives++;
      while (pool_.size() < lives) {
        if (!try_raise_pool()) break;
      }
      if (pool_.size() < lives) continue;
      for (uint64_t p = first; p < first + ppb_; p++)
        if (rev_public_[p] >= 0 || rev_hidden_[p] >= 0) relocate_page(p);
      erase_and_account(addr.block, "slot_cycle");
    }
    chosen = si;
    break;
  }
  if (chosen < 0) fail(Errc::CommitFailed, "no usable commit slot");

  const uint32_t si = uint32_t(chosen);
  Bytes head_plain;
  put_u32(head_plain, uint32_t(L));
  put_u32(head_plain, uint32_t(n));
  for (uint32_t c : chains) put_u32(head_plain, c);
  head_plain.insert(head_plain.end(), sealed.begin(),
                    sealed.begin() + std::min(L, head_slice));
  while (head_plain.size() < head_plain_cap)
    head_plain.push_back(uint8_t(rng_content_.next()));
  Bytes head_data = seal_record(key.map_key, key.meta_mac_key,
                                seal_ctx(head_ctx_for(label), seq), head_plain);
  Bytes head_oob = tag_encode(key, {(kHeadTagPrefix << 20) | si, seq, PageClass::MapCommit},
                              cfg_.geometry.oob_size, rng_content_);
  const uint64_t head_idx = page_index(slots[si]);
  flash_.program_page(slots[si], head_data, head_oob);
  mark_used(head_idx, live_kind);
  metrics_.pages_map_commit++;

  // Retire the previous generation.
  if (head_page >= 0 && uint64_t(head_page) != head_idx)
    kind_[head_page] = stale_kind;
  for (uint32_t p : live_chain) {
    mark_free(p);
    (pub ? invalid_public_ : invalid_hidden_)[p] = 1;
    kind_[p] = stale_kind;
  }
  live_chain = chains;
  head_page = int64_t(head_idx);
  log_event("map_commit", -1, int64_t(head_idx),
            std::string(pub ? "public" : "hidden") + " seq=" + std::to_string(seq) +
                " chains=" + std::to_string(n));
}

PdeFtl::MapProbe PdeFtl::probe_map(const VolumeKey& key, MapLabel label,
                                   const std::vector<PhysPageAddr>& slots) const {
  MapProbe best;
  for (const PhysPageAddr& addr : slots) {
    if (flash_.page_state(addr) != PageState::Programmed) continue;
    auto tag = tag_decode(key, flash_.page_oob(addr));
    if (!tag || tag->page_class != PageClass::MapCommit) continue;
    if ((tag->lba >> 20) != kHeadTagPrefix) continue;
    const uint64_t seq = tag->version;
    auto head = open_record(key.map_key, key.meta_mac_key,
                            seal_ctx(head_ctx_for(label), seq), flash_.page_data(addr));
    if (!head || head->size() < 8) continue;
    const uint64_t L = get_u32(head->data());
    const uint64_t n = get_u32(head->data() + 4);
    if (8 + 4 * n > head->size() || L > max_map_bytes_) continue;

    Bytes sealed;
    std::vector<uint32_t> chain_pages;
    bool ok = true;
    sealed.insert(sealed.end(), head->begin() + 8 + 4 * n, head->end());
    for (uint64_t i = 0; i < n && ok; i++) {
      const uint32_t cp = get_u32(head->data() + 8 + 4 * i);
      if (cp >= total_pages_ ||
          flash_.page_state(addr_of(cp)) != PageState::Programmed) {
        ok = false;
        break;
      }
      auto data = flash_.page_data(addr_of(cp));
      sealed.insert(sealed.end(), data.begin(), data.end());
      chain_pages.push_back(cp);
    }
    if (!ok || sealed.size() < L) continue;
    sealed.resize(L);
    auto blob = open_record(key.map_key, key.meta_mac_key,
                            seal_ctx(blob_ctx_for(label), seq), sealed);
    if (!blob) continue;
    if (!best.found || seq > best.seq) {
      best.found = true;
      best.seq = seq;
      best.blob = std::move(*blob);
      best.chain_pages = std::move(chain_pages);
      best.head_page = uint32_t(page_index(addr));
    }
  }
  return best;
}

// ------------------------------------------------------------- superblock

PdeFtl::SuperState PdeFtl::scan_superblock() const {
  SuperState st;
  uint64_t max_dirty = 0;
  bool any_dirty = false;
  uint32_t walk_end[kSuperblockBlocks] = {0, 0};
  uint32_t phys_end[kSuperblockBlocks] = {0, 0};

  for (uint32_t b = 0; b < kSuperblockBlocks; b++) {
    uint32_t p = 0;
    while (p < ppb_) {
      if (flash_.page_state({b, p}) != PageState::Programmed) break;
      auto data = flash_.page_data({b, p});
      if (magic_match(data, kSuperHeaderMagic)) {
        const uint64_t seq = get_u64(data.data() + 12);
        const uint32_t pp = get_u32(data.data() + 40);
        const uint32_t len = get_u32(data.data() + 44);
        if (p + 1 + pp > ppb_) break;
        if (!st.have_commit || seq > st.newest_seq) {
          st.have_commit = true;
          st.newest_seq = seq;
          st.salt.assign(data.begin() + 20, data.begin() + 36);
          st.kdf_iters = get_u32(data.data() + 36);
          st.payload_block = b;
          st.payload_first_page = p + 1;
          st.payload_pages = pp;
          st.payload_len = len;
          st.active_block = b;
        }
        p += 1 + pp;
      } else if (magic_match(data, kSuperDirtyMagic)) {
        any_dirty = true;
        max_dirty = std::max(max_dirty, get_u64(data.data() + 8));
        p += 1;
      } else {
        break;
      }
    }
    walk_end[b] = p;
    for (uint32_t q = ppb_; q-- > 0;) {
      if (flash_.page_state({b, q}) == PageState::Programmed) {
        phys_end[b] = q + 1;
        break;
      }
    }
  }
  st.dirty = st.have_commit && any_dirty && max_dirty >= st.newest_seq;
  st.next_page = std::max(walk_end[st.active_block], phys_end[st.active_block]);
  return st;
}

void PdeFtl::super_ensure_room(uint32_t pages_needed) {
  if (pages_needed + 1 > ppb_)
    fail(Errc::GeometryTooSmall, "superblock record exceeds region block");
  if (super_next_page_ + pages_needed + 1 <= ppb_) return;
  const uint32_t other = 1 - super_active_block_;
  const uint64_t first = uint64_t(other) * ppb_;
  for (uint64_t p = first; p < first + ppb_; p++) kind_[p] = PageKind::Superblock;
  flash_.erase_block(other);
  super_active_block_ = other;
  super_next_page_ = 0;
  log_event("super_switch", -1, -1, "block=" + std::to_string(other));
}

Bytes PdeFtl::super_payload_plain() const {
  Bytes out;
  put_u64(out, version_next_);
  const uint64_t bytes = (total_pages_ + 7) / 8;
  out.reserve(out.size() + 2 * bytes);
  for (uint64_t i = 0; i < bytes; i++) {
    uint8_t v = 0;
    for (uint32_t bit = 0; bit < 8; bit++) {
      const uint64_t p = i * 8 + bit;
      if (p < total_pages_ && bitmap_used_[p]) v |= uint8_t(1u << bit);
    }
    out.push_back(v);
  }
  for (uint64_t i = 0; i < bytes; i++) {
    uint8_t v = 0;
    for (uint32_t bit = 0; bit < 8; bit++) {
      const uint64_t p = i * 8 + bit;
      if (p < total_pages_ && invalid_public_[p]) v |= uint8_t(1u << bit);
    }
    out.push_back(v);
  }
  return out;
}

void PdeFtl::super_append_commit(uint64_t seq) {
  const Bytes sealed = seal_record(key_decoy_->meta_key, key_decoy_->meta_mac_key,
                                   seal_ctx(kCtxSuper, seq), super_payload_plain());
  const uint32_t page_size = cfg_.geometry.page_size;
  const uint32_t pp = uint32_t((sealed.size() + page_size - 1) / page_size);
  super_ensure_room(1 + pp);

  const uint32_t b = super_active_block_;
  const uint32_t start = super_next_page_;
  for (uint32_t i = 0; i < pp; i++) {
    const size_t off = size_t(i) * page_size;
    Bytes data(sealed.begin() + off,
               sealed.begin() + std::min(sealed.size(), off + page_size));
    while (data.size() < page_size) data.push_back(uint8_t(rng_content_.next()));
    flash_.program_page({b, start + 1 + i}, data, rng_content_.bytes(cfg_.geometry.oob_size));
    metrics_.pages_superblock++;
  }

  Bytes header;
  header.insert(header.end(), kSuperHeaderMagic, kSuperHeaderMagic + 8);
  put_u32(header, kOnFlashVersion);
  put_u64(header, seq);
  header.insert(header.end(), salt_.begin(), salt_.end());
  put_u32(header, kdf_iters_);
  put_u32(header, pp);
  put_u32(header, uint32_t(sealed.size()));
  header.resize(page_size, 0);
  flash_.program_page({b, start}, header, rng_content_.bytes(cfg_.geometry.oob_size));
  metrics_.pages_superblock++;

  super_next_page_ = start + 1 + pp;
  log_event("super_commit", -1, -1, "seq=" + std::to_string(seq));
}

void PdeFtl::super_append_dirty() {
  if (super_next_page_ >= ppb_)
    fail(Errc::CommitFailed, "superblock region full");
  Bytes data;
  data.insert(data.end(), kSuperDirtyMagic, kSuperDirtyMagic + 8);
  put_u64(data, commit_seq_next_ - 1);
  data.resize(cfg_.geometry.page_size, 0);
  flash_.program_page({super_active_block_, super_next_page_}, data,
                      rng_content_.bytes(cfg_.geometry.oob_size));
  super_next_page_++;
  metrics_.pages_superblock++;
  log_event("dirty_mark", -1, -1, "");
}

void PdeFtl::load_super_payload(const SuperState& st, const VolumeKey& decoy) {
  Bytes sealed;
  for (uint32_t i = 0; i < st.payload_pages; i++) {
    auto data = flash_.page_data({st.payload_block, st.payload_first_page + i});
    sealed.insert(sealed.end(), data.begin(), data.end());
  }
  if (sealed.size() < st.payload_len)
    fail(Errc::NoValidSuperblock, "superblock payload truncated");
  sealed.resize(st.payload_len);
  auto plain = open_record(decoy.meta_key, decoy.meta_mac_key,
                           seal_ctx(kCtxSuper, st.newest_seq), sealed);
  if (!plain) fail(Errc::NoValidSuperblock, "superblock payload rejected");

  const uint64_t bytes = (total_pages_ + 7) / 8;
  if (plain->size() < 8 + 2 * bytes)
    fail(Errc::NoValidSuperblock, "superblock payload malformed");
  version_next_ = get_u64(plain->data());
  for (uint64_t p = 0; p < total_pages_; p++) {
    bitmap_used_[p] = ((*plain)[8 + p / 8] >> (p % 8)) & 1;
    invalid_public_[p] = ((*plain)[8 + bytes + p / 8] >> (p % 8)) & 1;
  }
  // Sanitize: the region itself is always accounted, invalid implies
  // free-but-programmed.
  for (uint64_t p = 0; p < uint64_t(kSuperblockBlocks) * ppb_; p++) bitmap_used_[p] = 1;
  for (uint64_t p = 0; p < total_pages_; p++) {
    if (invalid_public_[p] &&
        (bitmap_used_[p] || flash_.page_state(addr_of(p)) != PageState::Programmed))
      invalid_public_[p] = 0;
  }
}

// ----------------------------------------------------------- session control

void PdeFtl::rebuild_runtime_from_bitmap() {
  const uint32_t B = cfg_.geometry.num_blocks;
  free_count_.assign(B, 0);
  public_live_count_.assign(B, 0);
  hidden_live_count_.assign(B, 0);
  dummy_count_block_.assign(B, 0);
  rev_public_.assign(total_pages_, -1);
  rev_hidden_.assign(total_pages_, -1);
  pool_.reset(total_pages_);
  free_total_ = 0;
  for (uint64_t p = 0; p < total_pages_; p++) {
    if (bitmap_used_[p]) continue;
    free_count_[block_of(p)]++;
    free_total_++;
    if (flash_.page_state(addr_of(p)) == PageState::Erased &&
        !flash_.is_bad(block_of(p)))
      pool_.add(p);
  }
  for (uint32_t lba = 0; lba < map_public_.size(); lba++) {
    const MapEntry e = map_public_[lba];
    if (!e.mapped()) continue;
    rev_public_[e.ppa] = lba;
    public_live_count_[block_of(e.ppa)]++;
    kind_[e.ppa] = PageKind::PublicLive;
  }
  for (uint32_t lba = 0; lba < map_hidden_.size(); lba++) {
    const MapEntry e = map_hidden_[lba];
    if (!e.mapped()) continue;
    rev_hidden_[e.ppa] = lba;
    hidden_live_count_[block_of(e.ppa)]++;
    kind_[e.ppa] = PageKind::HiddenLive;
  }
  for (uint32_t p : live_chain_public_) kind_[p] = PageKind::PublicMap;
  for (uint32_t p : live_chain_hidden_) kind_[p] = PageKind::HiddenMap;
  if (head_page_public_ >= 0) kind_[head_page_public_] = PageKind::PublicMap;
  if (head_page_hidden_ >= 0) kind_[head_page_hidden_] = PageKind::HiddenMap;
  for (uint64_t p = 0; p < total_pages_; p++) {
    if (dummy_ledger_[p]) dummy_count_block_[block_of(p)]++;
  }
}

void PdeFtl::validate_hidden_entries() {
  uint32_t dropped = 0;
  for (uint32_t lba = 0; lba < map_hidden_.size(); lba++) {
    MapEntry& e = map_hidden_[lba];
    if (!e.mapped()) continue;
    bool ok = e.ppa < total_pages_ &&
              flash_.page_state(addr_of(e.ppa)) == PageState::Programmed;
    if (ok && cfg_.strategy == Strategy::DummyRandom) ok = bitmap_used_[e.ppa] != 0;
    if (ok) {
      auto tag = tag_decode(*key_true_, flash_.page_oob(addr_of(e.ppa)));
      ok = tag && tag->page_class == PageClass::HiddenData && tag->lba == lba &&
           tag->version == e.version;
    }
    if (!ok) {
      log_event("hidden_entry_lost", lba, e.ppa, "");
      e = {};
      dropped++;
    }
  }
  if (dropped > 0)
    log_event("hidden_entries_dropped", -1, -1, "n=" + std::to_string(dropped));
}

void PdeFtl::reconstruct_hidden_view() {
  dummy_ledger_.assign(total_pages_, 0);
  dummy_count_block_.assign(cfg_.geometry.num_blocks, 0);
  for (uint64_t p = uint64_t(kSuperblockBlocks) * ppb_; p < total_pages_; p++) {
    if (!bitmap_used_[p]) continue;
    const uint32_t b = block_of(p);
    if (contains(slot_blocks_decoy_, b) || contains(slot_blocks_true_, b)) continue;
    if (rev_public_[p] >= 0 || rev_hidden_[p] >= 0) continue;
    if (contains(live_chain_public_, uint32_t(p)) ||
        contains(live_chain_hidden_, uint32_t(p)))
      continue;
    dummy_ledger_[p] = 1;
    dummy_count_block_[b]++;
  }
  for (uint64_t p = 0; p < total_pages_; p++) {
    if (invalid_hidden_[p] &&
        (bitmap_used_[p] || flash_.page_state(addr_of(p)) != PageState::Programmed))
      invalid_hidden_[p] = 0;
  }
}

void PdeFtl::unlock(const std::string& password) {
  require_mode(Mode::Locked, "device already unlocked");
  SuperState st = scan_superblock();
  if (!st.have_commit)
    fail(Errc::NoValidSuperblock, "device carries no valid superblock commit");
  if (st.dirty)
    fail(Errc::RecoveryRequired, "unclean shutdown detected; run recovery");

  VolumeKey key = derive_key(password, st.salt, KeyRole::Decoy, st.kdf_iters);
  std::set<uint32_t> avoid{0, 1};
  auto slot_pages = derive_slot_pages(key, MapLabel::PublicMap, cfg_.map_slots,
                                      cfg_.geometry, avoid);
  MapProbe probe = probe_map(key, MapLabel::PublicMap, slot_pages);
  if (!probe.found) fail(Errc::NoMatch, "no volume matches the provided credentials");

  salt_ = st.salt;
  kdf_iters_ = st.kdf_iters;
  key_decoy_ = key;
  slot_pages_decoy_ = std::move(slot_pages);
  slot_blocks_decoy_.clear();
  for (auto a : slot_pages_decoy_) slot_blocks_decoy_.push_back(a.block);

  load_super_payload(st, *key_decoy_);
  commit_seq_next_ = st.newest_seq + 1;
  super_active_block_ = st.active_block;
  super_next_page_ = st.next_page;

  map_public_.assign(public_capacity_, {});
  map_hidden_.assign(hidden_capacity_, {});
  load_map_blob(probe.blob, map_public_, false);
  live_chain_public_ = probe.chain_pages;
  head_page_public_ = probe.head_page;
  live_chain_hidden_.clear();
  head_page_hidden_ = -1;

  rebuild_runtime_from_bitmap();
  super_append_dirty();
  mode_ = Mode::Public;
  ticks_since_public_ = 0;
  metrics_.unlock_count++;
  log_event("unlock", -1, -1, "public");
  // Prime the erased pool so the first write draws from replenished space
  // instead of whatever the previous session left behind.
  maintain_after_write();
}

void PdeFtl::unlock_hidden(const std::string& decoy_password,
                           const std::string& hidden_password) {
  require_mode(Mode::Locked, "device already unlocked");
  SuperState st = scan_superblock();
  if (!st.have_commit)
    fail(Errc::NoValidSuperblock, "device carries no valid superblock commit");
  if (st.dirty)
    fail(Errc::RecoveryRequired, "unclean shutdown detected; run recovery");

  VolumeKey kd = derive_key(decoy_password, st.salt, KeyRole::Decoy, st.kdf_iters);
  std::set<uint32_t> avoid{0, 1};
  auto decoy_slots = derive_slot_pages(kd, MapLabel::PublicMap, cfg_.map_slots,
                                       cfg_.geometry, avoid);
  MapProbe pub_probe = probe_map(kd, MapLabel::PublicMap, decoy_slots);
  if (!pub_probe.found) fail(Errc::NoMatch, "no volume matches the provided credentials");

  VolumeKey kt = derive_key(hidden_password, st.salt, KeyRole::True, st.kdf_iters);
  for (auto a : decoy_slots) avoid.insert(a.block);
  auto true_slots = derive_slot_pages(kt, MapLabel::HiddenMap, cfg_.map_slots,
                                      cfg_.geometry, avoid);
  MapProbe hid_probe = probe_map(kt, MapLabel::HiddenMap, true_slots);
  if (!hid_probe.found) fail(Errc::NoMatch, "no volume matches the provided credentials");

  salt_ = st.salt;
  kdf_iters_ = st.kdf_iters;
  key_decoy_ = kd;
  key_true_ = kt;
  slot_pages_decoy_ = std::move(decoy_slots);
  slot_pages_true_ = std::move(true_slots);
  slot_blocks_decoy_.clear();
  slot_blocks_true_.clear();
  for (auto a : slot_pages_decoy_) slot_blocks_decoy_.push_back(a.block);
  for (auto a : slot_pages_true_) slot_blocks_true_.push_back(a.block);

  load_super_payload(st, *key_decoy_);
  commit_seq_next_ = st.newest_seq + 1;
  super_active_block_ = st.active_block;
  super_next_page_ = st.next_page;

  map_public_.assign(public_capacity_, {});
  map_hidden_.assign(hidden_capacity_, {});
  load_map_blob(pub_probe.blob, map_public_, false);
  load_map_blob(hid_probe.blob, map_hidden_, true);
  live_chain_public_ = pub_probe.chain_pages;
  head_page_public_ = pub_probe.head_page;
  live_chain_hidden_ = hid_probe.chain_pages;
  head_page_hidden_ = hid_probe.head_page;

  validate_hidden_entries();
  rebuild_runtime_from_bitmap();
  reconstruct_hidden_view();
  if (cfg_.strategy == Strategy::HiddenVolumeBaseline) compute_baseline_tail();

  super_append_dirty();
  mode_ = Mode::Hidden;
  ticks_since_public_ = 0;
  metrics_.unlock_count++;
  log_event("unlock", -1, -1, "hidden");
  maintain_after_write();
}

void PdeFtl::compute_baseline_tail() {
  // The public head limit is fixed policy; only the offset into the slack
  // band between head and tail derives from the hidden key.
  const uint32_t B = cfg_.geometry.num_blocks;
  const uint32_t span = std::max<uint32_t>(1, uint32_t(0.15 * B));
  baseline_tail_start_block_ = std::min(
      B - 1, baseline_head_limit_block_ +
                 uint32_t(keyed_offset(*key_true_, "tail-start", span)));
}

void PdeFtl::do_commit(bool include_hidden) {
  const uint64_t seq = commit_seq_next_++;
  if (include_hidden) commit_map(*key_true_, MapLabel::HiddenMap, seq);
  commit_map(*key_decoy_, MapLabel::PublicMap, seq);
  super_append_commit(seq);
  metrics_.commit_count++;
  log_event("commit", -1, -1, "seq=" + std::to_string(seq));
}

void PdeFtl::commit_shutdown() {
  if (mode_ == Mode::Locked) fail(Errc::WrongMode, "device is locked");
  try {
    do_commit(mode_ == Mode::Hidden);
  } catch (const Error& e) {
    if (e.code() == Errc::CommitFailed) throw;
    fail(Errc::CommitFailed, std::string("commit failed: ") + e.what());
  }
  wipe_session_state();
  crash_pending_ = false;
  log_event("shutdown", -1, -1, "");
}

void PdeFtl::crash() {
  const bool was_unlocked = mode_ != Mode::Locked;
  wipe_session_state();
  if (was_unlocked) crash_pending_ = true;
  log_event("crash", -1, -1, was_unlocked ? "mid-session" : "while locked");
}

void PdeFtl::wipe_session_state() {
  if (key_decoy_) wipe_key(*key_decoy_);
  if (key_true_) wipe_key(*key_true_);
  key_decoy_.reset();
  key_true_.reset();
  slot_blocks_decoy_.clear();
  slot_blocks_true_.clear();
  slot_pages_decoy_.clear();
  slot_pages_true_.clear();
  map_public_.clear();
  map_hidden_.clear();
  rev_public_.assign(total_pages_, -1);
  rev_hidden_.assign(total_pages_, -1);
  invalid_public_.assign(total_pages_, 0);
  invalid_hidden_.assign(total_pages_, 0);
  dummy_ledger_.assign(total_pages_, 0);
  dummy_count_block_.assign(cfg_.geometry.num_blocks, 0);
  live_chain_public_.clear();
  live_chain_hidden_.clear();
  head_page_public_ = -1;
  head_page_hidden_ = -1;
  bitmap_used_.assign(total_pages_, 0);
  free_count_.assign(cfg_.geometry.num_blocks, 0);
  public_live_count_.assign(cfg_.geometry.num_blocks, 0);
  hidden_live_count_.assign(cfg_.geometry.num_blocks, 0);
  free_total_ = 0;
  pool_.reset(total_pages_);
  ticks_since_public_ = 0;
  mode_ = Mode::Locked;
}

void PdeFtl::recover(const std::string& decoy_password,
                     const std::optional<std::string>& hidden_password) {
  require_mode(Mode::Locked, "recovery requires a locked device");
  SuperState st = scan_superblock();
  if (!st.have_commit)
    fail(Errc::NoValidSuperblock, "device carries no valid superblock commit");

  VolumeKey kd = derive_key(decoy_password, st.salt, KeyRole::Decoy, st.kdf_iters);
  std::set<uint32_t> avoid{0, 1};
  auto decoy_slots = derive_slot_pages(kd, MapLabel::PublicMap, cfg_.map_slots,
                                       cfg_.geometry, avoid);
  if (!probe_map(kd, MapLabel::PublicMap, decoy_slots).found)
    fail(Errc::NoMatch, "no volume matches the provided credentials");

  std::optional<VolumeKey> kt;
  std::vector<PhysPageAddr> true_slots;
  if (hidden_password) {
    kt = derive_key(*hidden_password, st.salt, KeyRole::True, st.kdf_iters);
    std::set<uint32_t> avoid2 = avoid;
    for (auto a : decoy_slots) avoid2.insert(a.block);
    true_slots = derive_slot_pages(*kt, MapLabel::HiddenMap, cfg_.map_slots,
                                   cfg_.geometry, avoid2);
    if (!probe_map(*kt, MapLabel::HiddenMap, true_slots).found)
      fail(Errc::NoMatch, "no volume matches the provided credentials");
  }

  salt_ = st.salt;
  kdf_iters_ = st.kdf_iters;

  // Full-disk scan: recognize the newest version of every sector reachable
  // with the provided keys; everything else is reclaimed.
  std::vector<MapEntry> best_pub(public_capacity_);
  std::vector<MapEntry> best_hid(hidden_capacity_);
  uint64_t max_version = 0;
  for (uint64_t p = uint64_t(kSuperblockBlocks) * ppb_; p < total_pages_; p++) {
    if (flash_.page_state(addr_of(p)) != PageState::Programmed) continue;
    auto tag = tag_decode(kd, flash_.page_oob(addr_of(p)));
    bool from_true = false;
    if (!tag && kt) {
      tag = tag_decode(*kt, flash_.page_oob(addr_of(p)));
      from_true = true;
    }
    if (!tag) continue;
    max_version = std::max(max_version, tag->version);
    if (!from_true && tag->page_class == PageClass::PublicData &&
        tag->lba < public_capacity_) {
      MapEntry& e = best_pub[tag->lba];
      if (!e.mapped() || tag->version > e.version) e = {uint32_t(p), tag->version};
    } else if (from_true && tag->page_class == PageClass::HiddenData &&
               tag->lba < hidden_capacity_) {
      MapEntry& e = best_hid[tag->lba];
      if (!e.mapped() || tag->version > e.version) e = {uint32_t(p), tag->version};
    }
    // Map commit pages of any generation are superseded by the commit below.
  }

  // Committed version counter, when the payload still opens.
  uint64_t committed_version = 0;
  try {
    Bytes sealed;
    for (uint32_t i = 0; i < st.payload_pages; i++) {
      auto data = flash_.page_data({st.payload_block, st.payload_first_page + i});
      sealed.insert(sealed.end(), data.begin(), data.end());
    }
    if (sealed.size() >= st.payload_len) {
      sealed.resize(st.payload_len);
      auto plain = open_record(kd.meta_key, kd.meta_mac_key,
                               seal_ctx(kCtxSuper, st.newest_seq), sealed);
      if (plain && plain->size() >= 8) committed_version = get_u64(plain->data());
    }
  } catch (const Error&) {
  }

  key_decoy_ = kd;
  key_true_ = kt;
  slot_pages_decoy_ = std::move(decoy_slots);
  slot_pages_true_ = std::move(true_slots);
  slot_blocks_decoy_.clear();
  slot_blocks_true_.clear();
  for (auto a : slot_pages_decoy_) slot_blocks_decoy_.push_back(a.block);
  for (auto a : slot_pages_true_) slot_blocks_true_.push_back(a.block);

  bitmap_used_.assign(total_pages_, 0);
  invalid_public_.assign(total_pages_, 0);
  invalid_hidden_.assign(total_pages_, 0);
  dummy_ledger_.assign(total_pages_, 0);
  for (uint64_t p = 0; p < uint64_t(kSuperblockBlocks) * ppb_; p++) {
    bitmap_used_[p] = 1;
    kind_[p] = PageKind::Superblock;
  }
  auto reserve_slot_blocks = [&](const std::vector<uint32_t>& blocks) {
    for (uint32_t b : blocks) {
      const uint64_t first = uint64_t(b) * ppb_;
      for (uint64_t p = first; p < first + ppb_; p++) {
        bitmap_used_[p] = 1;
        kind_[p] = flash_.page_state(addr_of(p)) == PageState::Programmed
                       ? PageKind::Filler
                       : PageKind::SlotReserved;
      }
    }
  };
  reserve_slot_blocks(slot_blocks_decoy_);
  if (kt) reserve_slot_blocks(slot_blocks_true_);

  map_public_.assign(public_capacity_, {});
  map_hidden_.assign(hidden_capacity_, {});
  for (uint32_t lba = 0; lba < public_capacity_; lba++) {
    if (!best_pub[lba].mapped()) continue;
    map_public_[lba] = best_pub[lba];
    bitmap_used_[best_pub[lba].ppa] = 1;
  }
  for (uint32_t lba = 0; lba < hidden_capacity_; lba++) {
    if (!best_hid[lba].mapped()) continue;
    map_hidden_[lba] = best_hid[lba];
    if (cfg_.strategy == Strategy::DummyRandom) bitmap_used_[best_hid[lba].ppa] = 1;
  }
  for (uint64_t p = uint64_t(kSuperblockBlocks) * ppb_; p < total_pages_; p++) {
    if (bitmap_used_[p]) continue;
    if (flash_.page_state(addr_of(p)) == PageState::Programmed) {
      invalid_public_[p] = 1;
      if (kind_[p] != PageKind::Filler) kind_[p] = PageKind::Free;
    } else {
      kind_[p] = PageKind::Free;
    }
  }

  live_chain_public_.clear();
  live_chain_hidden_.clear();
  head_page_public_ = -1;
  head_page_hidden_ = -1;
  version_next_ = std::max(committed_version, max_version + 1);
  commit_seq_next_ = st.newest_seq + 1;
  super_active_block_ = st.active_block;
  super_next_page_ = st.next_page;

  rebuild_runtime_from_bitmap();
  if (cfg_.strategy == Strategy::HiddenVolumeBaseline && kt) compute_baseline_tail();
  do_commit(kt.has_value());
  metrics_.recover_count++;
  log_event("recover", -1, -1, kt ? "both volumes" : "public only");
  wipe_session_state();
  crash_pending_ = false;
}

// ------------------------------------------------------------------ reports

std::string FtlMetrics::to_text() const {
  std::ostringstream os;
  os << "logical_public_writes=" << logical_public_writes << "\n"
     << "logical_hidden_writes=" << logical_hidden_writes << "\n"
     << "logical_reads=" << logical_reads << "\n"
     << "pages_public_data=" << pages_public_data << "\n"
     << "pages_hidden_data=" << pages_hidden_data << "\n"
     << "pages_dummy=" << pages_dummy << "\n"
     << "pages_reloc_public=" << pages_reloc_public << "\n"
     << "pages_reloc_hidden=" << pages_reloc_hidden << "\n"
     << "pages_map_commit=" << pages_map_commit << "\n"
     << "pages_superblock=" << pages_superblock << "\n"
     << "pages_format_fill=" << pages_format_fill << "\n"
     << "gc_public_passes=" << gc_public_passes << "\n"
     << "gc_hidden_passes=" << gc_hidden_passes << "\n"
     << "dummy_pages_reclaimed=" << dummy_pages_reclaimed << "\n"
     << "hidden_risk_pages=" << hidden_risk_pages << "\n"
     << "expected_hidden_loss=" << std::fixed << std::setprecision(6)
     << expected_hidden_loss << "\n"
     << "baseline_hidden_overwrites=" << baseline_hidden_overwrites << "\n"
     << "ticks=" << ticks << "\n"
     << "idle_bursts=" << idle_bursts << "\n"
     << "unlock_count=" << unlock_count << "\n"
     << "commit_count=" << commit_count << "\n"
     << "recover_count=" << recover_count << "\n"
     << "write_amplification=" << std::setprecision(6) << write_amplification() << "\n"
     << "dummy_overhead=" << std::setprecision(6) << dummy_overhead() << "\n";
  return os.str();
}

std::string PdeFtl::metrics_text() const {
  std::ostringstream os;
  os << "strategy=" << strategy_name(cfg_.strategy) << "\n"
     << "mode=" << mode_name(mode_) << "\n"
     << metrics_.to_text();
  os << "flash_programs=" << flash_.programs_total() << "\n"
     << "flash_erases=" << flash_.erases_total() << "\n"
     << "bad_blocks=" << flash_.bad_blocks().size() << "\n"
     << "load_factor=" << std::fixed << std::setprecision(6) << load_factor() << "\n"
     << "erased_free_fraction=" << std::setprecision(6) << erased_free_fraction()
     << "\n";
  const auto& wear = flash_.wear_counters();
  double mean = 0;
  for (uint32_t w : wear) mean += w;
  mean /= double(wear.size());
  double var = 0;
  for (uint32_t w : wear) var += (w - mean) * (w - mean);
  var /= double(wear.size());
  const double sd = std::sqrt(var);
  os << "wear_mean=" << std::setprecision(6) << mean << "\n"
     << "wear_std=" << sd << "\n"
     << "wear_cv=" << (mean > 0 ? sd / mean : 0.0) << "\n";
  return os.str();
}

std::string PdeFtl::events_csv() const {
  std::ostringstream os;
  os << "seq,tick,mode,op,lba,page,detail\n";
  for (const auto& e : events_) {
    os << e.seq << "," << e.tick << "," << mode_name(e.mode) << "," << e.op << ","
       << e.lba << "," << e.page << "," << e.detail << "\n";
  }
  return os.str();
}

}  // namespace pdeftl
