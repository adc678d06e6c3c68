#pragma once

#include <cstdint>
#include <vector>

namespace pdeftl {

/// Order-statistic set over page indices (Fenwick tree of 0/1 membership).
/// Placement draws the k-th member in ascending page order, which keeps the
/// draw sequence a pure function of (membership set, k) and lets tests
/// replay placement decisions from a snapshot.
class PagePool {
 public:
  explicit PagePool(uint64_t universe = 0) { reset(universe); }

  void reset(uint64_t universe) {
    n_ = universe;
    tree_.assign(n_ + 1, 0);
    member_.assign(n_, 0);
    count_ = 0;
  }

  uint64_t size() const { return count_; }
  bool contains(uint64_t idx) const { return member_[idx] != 0; }

  void add(uint64_t idx) {
    if (member_[idx]) return;
    member_[idx] = 1;
    update(idx, 1);
    count_++;
  }

  void remove(uint64_t idx) {
    if (!member_[idx]) return;
    member_[idx] = 0;
    update(idx, -1);
    count_--;
  }

  /// k-th member (0-based) in ascending index order.
  uint64_t kth(uint64_t k) const {
    uint64_t pos = 0;      // 1-based tree position reached so far
    uint64_t remaining = k + 1;
    for (uint64_t mask = top_bit(); mask; mask >>= 1) {
      const uint64_t next = pos + mask;
      if (next <= n_ && uint64_t(tree_[next]) < remaining) {
        pos = next;
        remaining -= uint64_t(tree_[next]);
      }
    }
    return pos;  // smallest index with prefix count k+1, element stored at tree slot pos+1
  }

  /// Number of members with index < idx.
  uint64_t rank(uint64_t idx) const {
    uint64_t sum = 0;
    for (uint64_t i = idx; i > 0; i -= i & (~i + 1)) sum += uint64_t(tree_[i]);
    return sum;
  }

 private:
  uint64_t top_bit() const {
    uint64_t m = 1;
    while ((m << 1) <= n_) m <<= 1;
    return m;
  }

  void update(uint64_t idx, int delta) {
    for (uint64_t i = idx + 1; i <= n_; i += i & (~i + 1)) tree_[i] += delta;
  }

  uint64_t n_ = 0;
  std::vector<int64_t> tree_;
  std::vector<uint8_t> member_;
  uint64_t count_ = 0;
};

}  // namespace pdeftl
