#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pdeftl/common.hpp"
#include "pdeftl/config.hpp"
#include "pdeftl/crypto.hpp"
#include "pdeftl/flash.hpp"
#include "pdeftl/pool.hpp"
#include "pdeftl/rng.hpp"

namespace pdeftl {

enum class Mode : uint8_t { Locked = 0, Public = 1, Hidden = 2 };

const char* mode_name(Mode m);

/// Ground-truth classification of each physical page. This is simulator
/// instrumentation: translation decisions never read it in a way that would
/// give one mode knowledge the on-flash state does not carry.
enum class PageKind : uint8_t {
  Free = 0,        // erased, or reclaimed and awaiting erase
  Filler,          // random fill from format, awaiting erase
  PublicLive,
  PublicStale,     // superseded public data, awaiting erase
  HiddenLive,
  HiddenStale,
  Dummy,
  PublicMap,       // live public map head or chain page
  PublicMapStale,
  HiddenMap,
  HiddenMapStale,
  SlotReserved,    // unprogrammed page inside a reserved map-slot block
  Superblock,
};

const char* page_kind_name(PageKind k);

struct ReclaimReport {
  uint32_t blocks_processed = 0;
  uint32_t blocks_erased = 0;
  uint32_t pages_relocated_public = 0;
  uint32_t pages_relocated_hidden = 0;
  uint32_t dummy_pages_reclaimed = 0;
  uint32_t pages_freed = 0;           // bitmap used -> free transitions
  uint32_t hidden_risk_pages = 0;     // hidden pages actually destroyed
  double expected_hidden_loss = 0.0;  // closed-form expectation for this pass
};

struct FtlMetrics {
  uint64_t logical_public_writes = 0;
  uint64_t logical_hidden_writes = 0;
  uint64_t logical_reads = 0;
  uint64_t pages_public_data = 0;
  uint64_t pages_hidden_data = 0;
  uint64_t pages_dummy = 0;
  uint64_t pages_reloc_public = 0;
  uint64_t pages_reloc_hidden = 0;
  uint64_t pages_map_commit = 0;
  uint64_t pages_superblock = 0;
  uint64_t pages_format_fill = 0;
  uint64_t gc_public_passes = 0;
  uint64_t gc_hidden_passes = 0;
  uint64_t dummy_pages_reclaimed = 0;
  uint64_t hidden_risk_pages = 0;
  double expected_hidden_loss = 0.0;
  uint64_t baseline_hidden_overwrites = 0;
  uint64_t ticks = 0;
  uint64_t idle_bursts = 0;
  uint64_t unlock_count = 0;
  uint64_t commit_count = 0;
  uint64_t recover_count = 0;

  uint64_t data_pages_total() const {
    return pages_public_data + pages_hidden_data + pages_dummy +
           pages_reloc_public + pages_reloc_hidden;
  }
  /// Physical data-path programs per logical sector write. Metadata
  /// (map commits, superblock, format fill) is excluded and accounted
  /// separately; the full per-page ledger is checked in tests.
  double write_amplification() const {
    const uint64_t logical = logical_public_writes + logical_hidden_writes;
    return logical == 0 ? 0.0 : double(data_pages_total()) / double(logical);
  }
  double dummy_overhead() const {
    return logical_public_writes == 0
               ? 0.0
               : double(pages_dummy) / double(logical_public_writes);
  }
  std::string to_text() const;
};

struct FtlEvent {
  uint64_t seq = 0;
  uint64_t tick = 0;
  Mode mode = Mode::Locked;
  std::string op;
  int64_t lba = -1;
  int64_t page = -1;
  std::string detail;
};

class PdeFtl {
 public:
  struct MapEntry {
    static constexpr uint32_t kUnmapped = 0xFFFFFFFFu;
    uint32_t ppa = kUnmapped;
    uint64_t version = 0;
    bool mapped() const { return ppa != kUnmapped; }
  };

  /// Initializes a fresh device: random fill, reserved slot blocks, empty
  /// maps for both volumes, clean superblock. The flash must be fully erased.
  static PdeFtl format(FlashArray flash, const std::string& decoy_password,
                       const std::string& hidden_password, const FtlConfig& cfg);

  /// Adopts an existing formatted device image in the Locked state.
  static PdeFtl adopt(FlashArray flash, const FtlConfig& cfg);

  PdeFtl(PdeFtl&&) = default;
  PdeFtl& operator=(PdeFtl&&) = default;

  // --- session control ---
  void unlock(const std::string& password);
  void unlock_hidden(const std::string& decoy_password,
                     const std::string& hidden_password);
  /// Commits maps and superblock, wipes session secrets, returns to Locked.
  void commit_shutdown();
  /// Power loss: discards all volatile state without committing.
  void crash();
  /// Full-disk scan rebuild. With only the decoy password the hidden volume
  /// is unrecognizable and its pages are reclaimed. Ends Locked and clean.
  void recover(const std::string& decoy_password,
               const std::optional<std::string>& hidden_password);

  // --- data path ---
  void write_sector(uint32_t lba, std::span<const uint8_t> data);
  void hidden_write_sector(uint32_t lba, std::span<const uint8_t> data);
  Bytes read_sector(uint32_t lba);
  void dummy_write(uint32_t count);
  void tick(uint32_t n = 1);
  ReclaimReport gc_public();
  ReclaimReport gc_hidden();

  // --- observation ---
  Mode mode() const { return mode_; }
  const FtlConfig& config() const { return cfg_; }
  const FlashArray& flash() const { return flash_; }
  FlashSnapshot take_snapshot() const { return FlashSnapshot::capture(flash_, cfg_.snapshot_sidecar); }
  const FtlMetrics& metrics() const { return metrics_; }
  /// Counters plus live device state (load, wear, flash totals) as
  /// key=value lines. Contains no key or password material.
  std::string metrics_text() const;
  uint32_t public_capacity() const { return public_capacity_; }
  uint32_t hidden_capacity() const { return hidden_capacity_; }
  uint64_t usable_pages() const { return usable_pages_; }
  /// Fraction of usable pages currently marked used.
  double load_factor() const;
  /// Fraction of usable pages immediately writable (erased and free).
  double erased_free_fraction() const;
  bool crash_pending() const { return crash_pending_; }

  const std::vector<FtlEvent>& events() const { return events_; }
  void clear_events() { events_.clear(); }
  void set_events_enabled(bool on) { events_enabled_ = on; }
  std::string events_csv() const;

  // --- test instrumentation (never consulted by translation decisions) ---
  PageKind inspect_kind(uint64_t page) const { return kind_[page]; }
  bool inspect_used(uint64_t page) const { return bitmap_used_[page] != 0; }
  bool inspect_dummy_ledger(uint64_t page) const { return dummy_ledger_[page] != 0; }
  std::vector<uint64_t> inspect_pool() const;
  const std::vector<MapEntry>& inspect_public_map() const { return map_public_; }
  const std::vector<MapEntry>& inspect_hidden_map() const { return map_hidden_; }
  uint64_t inspect_version_counter() const { return version_next_; }
  uint64_t inspect_commit_seq() const { return commit_seq_next_; }
  const std::vector<uint32_t>& inspect_decoy_slot_blocks() const { return slot_blocks_decoy_; }
  /// Called before each placement draw with the per-block erased-free counts
  /// and after it with the chosen page.
  using PlacementObserver =
      std::function<void(const std::vector<uint32_t>&, uint64_t)>;
  void set_placement_observer(PlacementObserver obs) { observer_ = std::move(obs); }

 private:
  PdeFtl(FlashArray flash, const FtlConfig& cfg);

  // geometry-derived constants
  static constexpr uint32_t kSuperblockBlocks = 2;
  uint64_t total_pages_ = 0;
  uint32_t ppb_ = 0;
  uint64_t usable_pages_ = 0;
  uint64_t max_map_bytes_ = 0;
  uint32_t public_capacity_ = 0;
  uint32_t hidden_capacity_ = 0;

  FlashArray flash_;
  FtlConfig cfg_;
  Mode mode_ = Mode::Locked;

  // persistent identity
  Bytes salt_;
  uint32_t kdf_iters_ = 0;

  // session keys (present only while unlocked; hidden mode holds both)
  std::optional<VolumeKey> key_decoy_;
  std::optional<VolumeKey> key_true_;

  // reserved regions
  std::vector<uint32_t> slot_blocks_decoy_;   // valid while decoy key held
  std::vector<uint32_t> slot_blocks_true_;    // valid while true key held
  std::vector<PhysPageAddr> slot_pages_decoy_;
  std::vector<PhysPageAddr> slot_pages_true_;

  // volatile translation state
  std::vector<uint8_t> bitmap_used_;
  std::vector<uint8_t> invalid_public_;
  std::vector<uint8_t> invalid_hidden_;   // hidden sessions only
  std::vector<uint8_t> dummy_ledger_;     // reconstructed at hidden unlock
  std::vector<MapEntry> map_public_;
  std::vector<MapEntry> map_hidden_;
  std::vector<int64_t> rev_public_;       // page -> lba or -1
  std::vector<int64_t> rev_hidden_;
  std::vector<uint32_t> free_count_;      // per block, bitmap-free pages
  std::vector<uint32_t> public_live_count_;
  std::vector<uint32_t> hidden_live_count_;
  std::vector<uint32_t> dummy_count_block_;  // hidden sessions only
  uint64_t free_total_ = 0;
  PagePool pool_;                         // erased AND free pages
  std::vector<uint32_t> live_chain_public_;
  std::vector<uint32_t> live_chain_hidden_;
  int64_t head_page_public_ = -1;
  int64_t head_page_hidden_ = -1;

  uint64_t version_next_ = 1;
  uint64_t commit_seq_next_ = 1;
  uint32_t super_active_block_ = 0;
  uint32_t super_next_page_ = 0;
  bool crash_pending_ = false;
  uint32_t ticks_since_public_ = 0;
  uint64_t tick_now_ = 0;

  // baseline strategy state
  uint32_t baseline_tail_start_block_ = 0;
  uint32_t baseline_head_limit_block_ = 0;

  // ground truth instrumentation
  std::vector<PageKind> kind_;

  Rng rng_placement_;
  Rng rng_content_;
  Rng rng_dummy_count_;
  Rng rng_idle_;
  Rng rng_reclaim_;

  FtlMetrics metrics_;
  std::vector<FtlEvent> events_;
  bool events_enabled_ = true;
  PlacementObserver observer_;

  // --- helpers ---
  uint64_t page_index(PhysPageAddr a) const { return flash_.page_index(a); }
  PhysPageAddr addr_of(uint64_t idx) const { return flash_.addr_of(idx); }
  uint32_t block_of(uint64_t idx) const { return uint32_t(idx / ppb_); }
  bool is_reserved_block(uint32_t block) const;
  bool is_slot_block_known(uint32_t block) const;

  void derive_geometry();
  void require_mode(Mode m, const char* what) const;
  void log_event(const char* op, int64_t lba, int64_t page,
                 const std::string& detail = "");

  void mark_used(uint64_t page, PageKind kind);
  void mark_free(uint64_t page);

  // placement
  uint64_t place_page(bool hidden_ctx);
  uint64_t pool_draw();
  uint64_t reloc_target(bool hidden_ctx);
  uint64_t pool_in_block(uint32_t block) const;
  uint64_t place_baseline_public();
  uint64_t place_baseline_hidden();
  void ensure_pool(uint64_t need);
  bool try_raise_pool();
  bool prep_erase_one();
  bool relocate_victim_once();
  bool hidden_reclaim_one(ReclaimReport& report);
  void erase_and_account(uint32_t block, const char* why);
  void relocate_page(uint64_t page);
  void require_capacity();

  void program_data_page(uint64_t page, const VolumeKey& key, uint32_t lba,
                         uint64_t version, std::span<const uint8_t> plain,
                         PageClass cls, PageKind kind);
  void write_dummy_page();
  void run_dummy_burst(uint32_t count, bool skip_on_full, const char* why);

  // gc internals
  ReclaimReport gc_public_pass();
  ReclaimReport gc_hidden_pass(bool deep);
  void high_load_reclaim(ReclaimReport& report);
  void maintain_after_write();
  uint64_t pool_target() const;
  uint64_t capacity_floor() const { return uint64_t(2) * ppb_; }

  // superblock
  struct SuperState {
    uint64_t newest_seq = 0;
    bool have_commit = false;
    bool dirty = false;
    Bytes salt;
    uint32_t kdf_iters = 0;
    uint32_t payload_block = 0;
    uint32_t payload_first_page = 0;
    uint32_t payload_pages = 0;
    uint32_t payload_len = 0;
    uint32_t active_block = 0;
    uint32_t next_page = 0;
  };
  SuperState scan_superblock() const;
  void super_append_dirty();
  void super_append_commit(uint64_t seq);
  void super_ensure_room(uint32_t pages_needed);
  Bytes super_payload_plain() const;
  void load_super_payload(const SuperState& st, const VolumeKey& decoy);

  // map commits
  Bytes serialize_map(const std::vector<MapEntry>& map, bool include_invalid_hidden) const;
  void load_map_blob(std::span<const uint8_t> blob, std::vector<MapEntry>& map,
                     bool expect_invalid_hidden);
  void commit_map(const VolumeKey& key, MapLabel label, uint64_t seq);
  struct MapProbe {
    uint64_t seq = 0;
    bool found = false;
    Bytes blob;
    std::vector<uint32_t> chain_pages;
    uint32_t head_page = 0;
  };
  MapProbe probe_map(const VolumeKey& key, MapLabel label,
                     const std::vector<PhysPageAddr>& slots) const;

  void rebuild_runtime_from_bitmap();
  void reconstruct_hidden_view();
  void validate_hidden_entries();
  void wipe_session_state();
  void do_commit(bool include_hidden);
  void compute_baseline_tail();
};

}  // namespace pdeftl
