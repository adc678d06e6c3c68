#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ftl.hpp"

namespace pdeftl {

/// One operation of a line-oriented trace. Text forms:
///   SESSION public|hidden
///   W <lba> <hexdata|seed>
///   HW <lba> <hexdata|seed>
///   TICK <n>
///   IDLE
///   SHUTDOWN
///   SNAPSHOT <name>
///   CRASH
///   RECOVER decoy|both
enum class TraceOp : uint8_t {
  SessionPublic,
  SessionHidden,
  Write,
  HiddenWrite,
  Tick,
  Idle,
  Shutdown,
  Snapshot,
  Crash,
  Recover,
};

struct TraceStep {
  TraceOp op = TraceOp::Tick;
  uint32_t lba = 0;
  uint64_t arg = 0;  // tick count or content seed
  Bytes data;        // explicit payload; empty means derive from the seed
  std::string name;  // snapshot label
  bool recover_both = false;
};

enum class Variant : uint8_t { WithHidden = 0, WithoutHidden = 1 };

const char* variant_name(Variant v);

struct Scenario {
  std::vector<TraceStep> steps;

  std::string to_text() const;
  static Scenario parse_text(const std::string& text);
  static Scenario load_file(const std::string& path);

  bool has_hidden_ops() const;

  /// The paired variant: hidden sessions become public sessions left idling
  /// (each hidden write turns into idle ticks), so the public sub-trace and
  /// the snapshot schedule stay identical while hidden activity vanishes.
  Scenario without_hidden(uint32_t ticks_per_hidden_write) const;
};

/// Parameters for deterministic scenario generation.
struct ScenarioParams {
  uint32_t intervals = 4;                 // snapshot-to-snapshot periods
  uint32_t public_writes_per_interval = 40;
  /// Traffic jitter: each interval's public write count is drawn uniformly
  /// from [count*(1-j), count*(1+j)], identically across trace variants.
  double public_writes_jitter = 0.0;
  uint32_t hidden_writes_per_interval = 16;
  /// A hidden session occurs in every period-th interval (1 = all of them),
  /// so hidden activity can be made occasional relative to snapshots.
  uint32_t hidden_session_period = 1;
  uint32_t public_lba_span = 120;
  uint32_t hidden_lba_span = 48;
  uint32_t ticks_per_interval = 4;        // sub-threshold ticks inside sessions
  uint32_t idle_ticks_per_hidden_write = 5;
};

/// Deterministic under (params, seed); begins and ends locked, snapshots
/// after format and after every interval.
Scenario build_scenario(const ScenarioParams& params, uint64_t seed);

struct RunResult {
  std::vector<std::pair<std::string, FlashSnapshot>> snapshots;
  FtlMetrics metrics;
  std::string events_csv;
};

/// Replays the trace against a device that starts Locked. Order violations
/// (writes while locked, snapshots while unlocked, nested sessions) are
/// TraceError. Snapshot steps invoke the sink with the step's name.
void replay_trace(
    PdeFtl& ftl, const Scenario& scenario, const std::string& decoy_password,
    const std::string& hidden_password,
    const std::function<void(const std::string&, const FlashSnapshot&)>& on_snapshot);

/// Formats a fresh device and replays the trace, collecting snapshots.
RunResult run_scenario(const FtlConfig& cfg, const Scenario& scenario,
                       const std::string& decoy_password,
                       const std::string& hidden_password);

}  // namespace pdeftl
