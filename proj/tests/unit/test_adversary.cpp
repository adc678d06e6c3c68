#include <doctest.h>

#include <functional>

#include "pdeftl/adversary.hpp"

using namespace pdeftl;

namespace {

constexpr const char* kDecoyPw = "decoy-passphrase";
constexpr const char* kTruePw = "true-passphrase";

FtlConfig test_cfg(uint64_t seed = 1, Strategy strategy = Strategy::DummyRandom) {
  FtlConfig cfg;
  cfg.geometry = {64, 32, 512, 64, 10000};
  cfg.map_slots = 4;
  cfg.kdf_iters = 200;
  cfg.master_seed = seed;
  cfg.strategy = strategy;
  return cfg;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Ok;
}

TrialResult synthetic_trial(Variant label, uint64_t index, double base) {
  TrialResult t;
  t.label = label;
  t.trial_index = index;
  FeatureVector f;
  const double jitter = double(index % 7);
  f.changed_pages = base + jitter;
  f.changed_blocks = base / 2 + jitter;
  f.dispersion = base / 100.0 + jitter / 50.0;
  f.tail_fraction = base / 1000.0 + jitter / 100.0;
  t.intervals.push_back(f);
  return t;
}

}  // namespace

TEST_CASE("feature extraction is pure arithmetic over the diff") {
  FlashGeometry geom{10, 4, 512, 64, 1000};
  DiffReport diff;
  diff.per_block_counts.assign(geom.num_blocks, 0);
  auto add = [&](uint32_t block, uint32_t page) {
    diff.changes.push_back({{block, page}, PageChange::NewlyProgrammed});
    diff.per_block_counts[block]++;
  };
  // Tail region starts at block 7 for 10 blocks.
  add(0, 0);
  add(0, 1);
  add(3, 2);
  add(7, 0);
  add(9, 3);

  const FeatureVector f = extract_features(diff, geom);
  CHECK(f.changed_pages == doctest::Approx(5.0));
  CHECK(f.changed_blocks == doctest::Approx(4.0));
  CHECK(f.dispersion == doctest::Approx(4.0 / 5.0));
  CHECK(f.tail_fraction == doctest::Approx(2.0 / 5.0));

  const FeatureVector empty = extract_features(DiffReport{}, geom);
  CHECK(empty.changed_pages == 0.0);
  CHECK(empty.dispersion == 0.0);
  CHECK(empty.tail_fraction == 0.0);

  CHECK(std::string(FeatureVector::name(0)) == "changed_pages");
  CHECK(f[0] == f.changed_pages);
  CHECK(f[3] == f.tail_fraction);
}

TEST_CASE("trial mean averages intervals") {
  TrialResult t;
  t.intervals.push_back({10.0, 4.0, 0.4, 0.1});
  t.intervals.push_back({20.0, 6.0, 0.3, 0.3});
  const FeatureVector m = t.mean();
  CHECK(m.changed_pages == doctest::Approx(15.0));
  CHECK(m.changed_blocks == doctest::Approx(5.0));
  CHECK(m.dispersion == doctest::Approx(0.35));
  CHECK(m.tail_fraction == doctest::Approx(0.2));
}

TEST_CASE("distinguish needs fifty trials per variant") {
  std::vector<TrialResult> trials;
  for (uint64_t i = 0; i < 49; i++)
    trials.push_back(synthetic_trial(Variant::WithHidden, i, 100.0));
  for (uint64_t i = 0; i < 60; i++)
    trials.push_back(synthetic_trial(Variant::WithoutHidden, i, 50.0));
  CHECK(code_of([&] { (void)distinguish(trials); }) == Errc::TooFewTrials);
  CHECK(code_of([&] { (void)distinguish(trials, 1.5); }) == Errc::BadConfig);
}

TEST_CASE("distinguish separates well separated classes") {
  std::vector<TrialResult> trials;
  for (uint64_t i = 0; i < 60; i++) {
    trials.push_back(synthetic_trial(Variant::WithHidden, i, 100.0));
    trials.push_back(synthetic_trial(Variant::WithoutHidden, i, 50.0));
  }
  const DistinguisherReport rep = distinguish(trials);
  CHECK(rep.trials_with == 60);
  CHECK(rep.trials_without == 60);
  CHECK(rep.train_per_class == 30);
  CHECK(rep.test_total == 60);
  CHECK(rep.accuracy == doctest::Approx(1.0));
  CHECK(rep.advantage == doctest::Approx(0.5));
  for (size_t fi = 0; fi < FeatureVector::kCount; fi++) {
    CHECK(rep.feature_pvalues[fi] < 1e-6);
    CHECK(rep.greater_means_hidden[fi]);
  }
  // Deterministic: the same trials give byte-identical reports.
  CHECK(distinguish(trials).to_csv() == rep.to_csv());
  CHECK(rep.to_csv().find("accuracy,1\n") != std::string::npos);
}

TEST_CASE("distinguish finds nothing in identical distributions") {
  std::vector<TrialResult> trials;
  for (uint64_t i = 0; i < 100; i++) {
    trials.push_back(synthetic_trial(Variant::WithHidden, i * 2 + 1, 80.0));
    trials.push_back(synthetic_trial(Variant::WithoutHidden, i * 3 + 2, 80.0));
  }
  const DistinguisherReport rep = distinguish(trials);
  CHECK(rep.advantage <= 0.15);
  for (size_t fi = 0; fi < FeatureVector::kCount; fi++)
    CHECK(rep.feature_pvalues[fi] > 0.01);
}

TEST_CASE("randomness battery on formatted flash") {
  const FtlConfig cfg = test_cfg(21);
  PdeFtl ftl = PdeFtl::format(FlashArray(cfg.geometry), kDecoyPw, kTruePw, cfg);
  const FlashSnapshot snap = ftl.take_snapshot();

  const Region regions[] = {{64, 256}, {512, 256}, {1500, 100}};
  const BatteryReport rep = randomness_battery(snap, regions, 0.01);
  REQUIRE(rep.regions.size() == 3);
  CHECK(rep.aggregate_entropy > 7.9);
  for (const RegionStats& r : rep.regions) {
    CHECK(r.programmed_pages > 0);
    CHECK(r.entropy > 7.8);
  }
  CHECK(rep.regions_failed <= 1);  // fixed seed, so this is deterministic
  CHECK(rep.to_csv().find("region,first_page") == 0);
  CHECK(rep.to_csv().find("aggregate,") != std::string::npos);

  // A blank chip has nothing programmed anywhere.
  const FlashSnapshot blank = FlashSnapshot::capture(FlashArray(cfg.geometry));
  const Region one[] = {{0, 32}};
  CHECK(code_of([&] { (void)randomness_battery(blank, one); }) == Errc::EmptyRegion);

  const Region oob[] = {{2000, 100}};
  CHECK(code_of([&] { (void)randomness_battery(snap, oob); }) == Errc::OutOfRange);
  CHECK(code_of([&] { (void)randomness_battery(snap, regions, 0.0); }) ==
        Errc::BadConfig);
}

TEST_CASE("experiments are deterministic across thread counts") {
  ExperimentConfig cfg;
  cfg.ftl = test_cfg(31);
  cfg.scenario.intervals = 2;
  cfg.scenario.public_writes_per_interval = 12;
  cfg.scenario.hidden_writes_per_interval = 5;
  cfg.scenario.public_lba_span = 48;
  cfg.scenario.hidden_lba_span = 20;
  cfg.trials = 50;
  cfg.threads = 1;
  cfg.master_seed = 77;
  cfg.decoy_password = kDecoyPw;
  cfg.hidden_password = kTruePw;

  const ExperimentResult serial = run_experiment(cfg);
  cfg.threads = 4;
  const ExperimentResult parallel = run_experiment(cfg);

  CHECK(serial.trials.size() == 100);
  CHECK(serial.trials_csv() == parallel.trials_csv());
  CHECK(serial.report.to_csv() == parallel.report.to_csv());

  // Trial-major layout with the hidden arm first.
  CHECK(serial.trials[0].label == Variant::WithHidden);
  CHECK(serial.trials[1].label == Variant::WithoutHidden);
  CHECK(serial.trials[0].trial_index == 0);
  CHECK(serial.trials[99].trial_index == 49);
  for (const TrialResult& t : serial.trials)
    CHECK(t.intervals.size() == cfg.scenario.intervals);

  ExperimentConfig bad = cfg;
  bad.decoy_password.clear();
  CHECK(code_of([&] { (void)run_experiment(bad); }) == Errc::EmptyPassword);
  bad = cfg;
  bad.trials = 0;
  CHECK(code_of([&] { (void)run_experiment(bad); }) == Errc::BadConfig);
}
