#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "scenario.hpp"

namespace pdeftl {

/// Per-interval observables of a multi-snapshot adversary. Everything here
/// is computable from two serialized flash images alone: no keys, no device
/// internals, no timing.
struct FeatureVector {
  double changed_pages = 0.0;   // pages that differ between the snapshots
  double changed_blocks = 0.0;  // blocks containing at least one such page
  double dispersion = 0.0;      // changed blocks per changed page
  double tail_fraction = 0.0;   // share of changes in the top region

  static constexpr size_t kCount = 4;
  double operator[](size_t i) const;
  static const char* name(size_t i);
};

/// Fraction of the block range treated as the "tail" when computing
/// tail_fraction: blocks at or above kTailRegionFrac * num_blocks.
inline constexpr double kTailRegionFrac = 0.70;

/// Pure function of the diff and the geometry.
FeatureVector extract_features(const DiffReport& diff, const FlashGeometry& geom);

/// One scenario replay observed through its snapshot sequence.
struct TrialResult {
  Variant label = Variant::WithHidden;
  uint64_t trial_index = 0;
  std::vector<FeatureVector> intervals;  // one per consecutive snapshot pair

  /// Mean across intervals, the per-trial summary the classifier consumes.
  FeatureVector mean() const;
};

/// Outcome of training and evaluating the threshold-vote distinguisher.
struct DistinguisherReport {
  size_t trials_with = 0;
  size_t trials_without = 0;
  size_t train_per_class = 0;
  size_t test_total = 0;
  size_t test_correct = 0;
  double accuracy = 0.0;   // held-out fraction correct
  double advantage = 0.0;  // |accuracy - 0.5|

  std::array<double, FeatureVector::kCount> thresholds{};
  std::array<bool, FeatureVector::kCount> greater_means_hidden{};
  /// Mann-Whitney two-sided p-value per feature over all trials.
  std::array<double, FeatureVector::kCount> feature_pvalues{};

  std::string to_csv() const;
  std::string to_text() const;
};

/// Train a per-feature threshold classifier (majority vote over features,
/// ties resolved toward "no hidden volume") on a deterministic stratified
/// front split of each class, then score the held-out remainder. Needs at
/// least 50 trials per variant (TooFewTrials otherwise).
DistinguisherReport distinguish(const std::vector<TrialResult>& trials,
                                double train_fraction = 0.5);

/// A contiguous page range of a snapshot to test for randomness.
struct Region {
  uint64_t first_page = 0;
  uint64_t page_count = 0;
};

struct RegionStats {
  Region region;
  uint64_t programmed_pages = 0;
  double entropy = 0.0;  // bits per byte
  double chi_square_p = 0.0;
  double serial_p = 0.0;
  bool pass = false;
};

struct BatteryReport {
  std::vector<RegionStats> regions;
  double alpha = 0.0;
  double aggregate_entropy = 0.0;  // over all regions' programmed bytes
  size_t regions_failed = 0;
  bool all_pass = false;

  std::string to_csv() const;
};

/// Byte-level randomness tests over the programmed pages of each region:
/// Shannon entropy, chi-square uniformity, lag-1 serial correlation, each
/// judged at significance alpha. A region with no programmed pages is an
/// EmptyRegion error.
BatteryReport randomness_battery(const FlashSnapshot& snap,
                                 std::span<const Region> regions,
                                 double alpha = 0.01);

struct ExperimentConfig {
  FtlConfig ftl;
  ScenarioParams scenario;
  uint32_t trials = 200;  // per variant
  uint32_t threads = 0;   // 0 = one per hardware thread
  uint64_t master_seed = 1;
  double train_fraction = 0.5;
  /// Replaces the hidden arm with a second independent no-hidden arm, so a
  /// calibrated distinguisher should find nothing.
  bool null_experiment = false;
  std::string decoy_password;
  std::string hidden_password;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;  // trial-major, WithHidden arm first
  DistinguisherReport report;

  std::string trials_csv() const;
};

/// Parse key=value experiment text. Experiment keys: trials, threads,
/// experiment_seed, train_fraction, null_experiment; scenario keys carry a
/// scenario_ prefix (scenario_intervals, scenario_public_writes,
/// scenario_public_writes_jitter, scenario_hidden_writes,
/// scenario_hidden_period, scenario_public_span, scenario_hidden_span,
/// scenario_ticks, scenario_idle_ticks). Every other key is a device key.
/// Passwords never appear in config text.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

/// Run paired trials: each trial index builds one scenario, replays it with
/// and without hidden activity on independently seeded devices, snapshots
/// through serialized images, and extracts features from the diffs. Trials
/// fan out across worker threads into preassigned slots, so the result is
/// deterministic under (config) regardless of thread count.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace pdeftl
