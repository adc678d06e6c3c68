#pragma once

#include <cstdint>
#include <string>

#include "flash.hpp"

namespace pdeftl {

enum class Strategy : uint8_t {
  DummyRandom = 0,          // dummy writes + random placement
  HiddenVolumeBaseline = 1  // head/tail allocation, no dummies
};

/// Simulator configuration. Defaults give the 32 MiB desk-scale device.
struct FtlConfig {
  FlashGeometry geometry{256, 64, 2048, 64, 10000};
  Strategy strategy = Strategy::DummyRandom;

  double dummy_mean = 2.0;        // expected dummy writes per public write
  uint32_t idle_threshold = 10;   // ticks without a public write before idle dummies
  double idle_dummy_count = 2.0;  // mean of the idle dummy burst
  double gc_free_low = 0.10;      // free-fraction low watermark triggering GC
  double load_high = 0.90;        // load factor at which dummy reclamation starts
  uint32_t map_slots = 8;         // commit slots per volume
  uint64_t master_seed = 1;

  double gc_reclaim_fraction = 0.5;    // per-page reclaim probability at high load
  double public_capacity_frac = 0.70;  // public LBAs / usable pages
  double hidden_capacity_frac = 0.20;  // hidden LBAs / usable pages
  double hidden_gc_target = 0.50;      // hidden-mode GC drives load down to this
  uint32_t kdf_iters = 10000;
  bool snapshot_sidecar = true;

  void validate() const;

  std::string to_text() const;
  static FtlConfig parse_text(const std::string& text);
  static FtlConfig load_file(const std::string& path);
};

const char* strategy_name(Strategy s);

}  // namespace pdeftl
