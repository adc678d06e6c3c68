#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <vector>

#include "common.hpp"

namespace pdeftl {

struct FlashGeometry {
  uint32_t num_blocks = 0;
  uint32_t pages_per_block = 0;
  uint32_t page_size = 0;
  uint32_t oob_size = 0;
  uint32_t pe_cycle_limit = 0;

  uint64_t total_pages() const { return uint64_t(num_blocks) * pages_per_block; }

  /// All fields strictly positive. Page size must be one of 512/2048/4096
  /// unless allow_any_page_size is set.
  void validate(bool allow_any_page_size = false) const;

  bool operator==(const FlashGeometry&) const = default;
};

struct PhysPageAddr {
  uint32_t block = 0;
  uint32_t page = 0;

  bool operator==(const PhysPageAddr&) const = default;
  auto operator<=>(const PhysPageAddr&) const = default;
};

enum class PageState : uint8_t { Erased = 0, Programmed = 1 };

/// Raw NAND chip simulation: page-granularity programming with
/// erase-before-write, block-granularity erasure, wear counting, and
/// wear-out driven bad-block marking.
class FlashArray {
 public:
  explicit FlashArray(const FlashGeometry& geometry, bool allow_any_page_size = false);

  const FlashGeometry& geometry() const { return geom_; }

  uint64_t page_index(PhysPageAddr addr) const {
    return uint64_t(addr.block) * geom_.pages_per_block + addr.page;
  }
  PhysPageAddr addr_of(uint64_t page_index) const {
    return {uint32_t(page_index / geom_.pages_per_block),
            uint32_t(page_index % geom_.pages_per_block)};
  }

  void program_page(PhysPageAddr addr, std::span<const uint8_t> data,
                    std::span<const uint8_t> oob);
  void read_page(PhysPageAddr addr, Bytes& data, Bytes& oob, PageState& state) const;
  PageState page_state(PhysPageAddr addr) const;
  std::span<const uint8_t> page_data(PhysPageAddr addr) const;
  std::span<const uint8_t> page_oob(PhysPageAddr addr) const;

  /// Erases every page of the block and bumps its wear counter. Once wear
  /// reaches pe_cycle_limit the block is retired to the bad set.
  void erase_block(uint32_t block);

  uint32_t wear(uint32_t block) const;
  const std::vector<uint32_t>& wear_counters() const { return wear_; }
  bool is_bad(uint32_t block) const { return bad_.count(block) != 0; }
  const std::set<uint32_t>& bad_blocks() const { return bad_; }
  void mark_bad(uint32_t block);

  uint64_t programs_total() const { return programs_total_; }
  uint64_t erases_total() const { return erases_total_; }

 private:
  void check_addr(PhysPageAddr addr) const;
  uint8_t* cell_data(uint64_t idx) { return data_.data() + idx * geom_.page_size; }
  const uint8_t* cell_data(uint64_t idx) const { return data_.data() + idx * geom_.page_size; }
  uint8_t* cell_oob(uint64_t idx) { return oob_.data() + idx * geom_.oob_size; }
  const uint8_t* cell_oob(uint64_t idx) const { return oob_.data() + idx * geom_.oob_size; }

  FlashGeometry geom_;
  std::vector<uint8_t> data_;   // total_pages * page_size
  std::vector<uint8_t> oob_;    // total_pages * oob_size
  std::vector<uint8_t> state_;  // one PageState per page
  std::vector<uint32_t> wear_;
  std::set<uint32_t> bad_;
  uint64_t programs_total_ = 0;
  uint64_t erases_total_ = 0;

  friend class FlashSnapshot;
};

enum class PageChange : uint8_t {
  NewlyProgrammed,  // erased -> programmed
  EraseTransition,  // programmed -> erased
  ContentChanged,   // programmed -> programmed, different bytes
};

struct PageDiff {
  PhysPageAddr addr;
  PageChange change;
};

struct DiffReport {
  std::vector<PageDiff> changes;
  std::vector<uint32_t> per_block_counts;

  size_t total_changed() const { return changes.size(); }
  std::string to_csv() const;
};

/// Bit-exact capture of the chip state. Two snapshots serialize to equal
/// bytes iff every captured cell matches. Wear counters and the bad-block
/// set ride along as an optional sidecar.
class FlashSnapshot {
 public:
  FlashSnapshot() = default;
  static FlashSnapshot capture(const FlashArray& flash, bool include_sidecar = true);

  Bytes serialize() const;
  static FlashSnapshot parse(std::span<const uint8_t> raw);

  void save(const std::string& path) const;
  static FlashSnapshot load(const std::string& path);

  /// Rebuild a FlashArray from a sidecar-bearing snapshot.
  FlashArray restore() const;

  const FlashGeometry& geometry() const { return geom_; }
  bool has_sidecar() const { return has_sidecar_; }
  PageState page_state(uint64_t page_index) const { return PageState(state_[page_index]); }
  std::span<const uint8_t> page_data(uint64_t page_index) const {
    return {data_.data() + page_index * geom_.page_size, geom_.page_size};
  }
  std::span<const uint8_t> page_oob(uint64_t page_index) const {
    return {oob_.data() + page_index * geom_.oob_size, geom_.oob_size};
  }
  const std::vector<uint32_t>& wear() const { return wear_; }
  const std::set<uint32_t>& bad_blocks() const { return bad_; }

  bool operator==(const FlashSnapshot& other) const;

 private:
  FlashGeometry geom_;
  bool has_sidecar_ = true;
  std::vector<uint8_t> state_;
  std::vector<uint8_t> data_;
  std::vector<uint8_t> oob_;
  std::vector<uint32_t> wear_;
  std::set<uint32_t> bad_;
};

DiffReport diff_snapshots(const FlashSnapshot& a, const FlashSnapshot& b);

}  // namespace pdeftl
