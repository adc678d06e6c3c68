#include "adversary.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "rng.hpp"
#include "stats.hpp"

namespace pdeftl {

namespace {

std::ostringstream csv_stream() {
  std::ostringstream out;
  out << std::setprecision(17);
  return out;
}

}  // namespace

double FeatureVector::operator[](size_t i) const {
  switch (i) {
    case 0: return changed_pages;
    case 1: return changed_blocks;
    case 2: return dispersion;
    default: return tail_fraction;
  }
}

const char* FeatureVector::name(size_t i) {
  switch (i) {
    case 0: return "changed_pages";
    case 1: return "changed_blocks";
    case 2: return "dispersion";
    default: return "tail_fraction";
  }
}

FeatureVector extract_features(const DiffReport& diff, const FlashGeometry& geom) {
  FeatureVector f;
  f.changed_pages = double(diff.changes.size());
  for (uint32_t c : diff.per_block_counts)
    if (c > 0) f.changed_blocks += 1.0;
  const uint32_t tail_start = uint32_t(kTailRegionFrac * geom.num_blocks);
  double tail = 0.0;
  for (const PageDiff& d : diff.changes)
    if (d.addr.block >= tail_start) tail += 1.0;
  if (f.changed_pages > 0.0) {
    f.dispersion = f.changed_blocks / f.changed_pages;
    f.tail_fraction = tail / f.changed_pages;
  }
  return f;
}

FeatureVector TrialResult::mean() const {
  FeatureVector m;
  if (intervals.empty()) return m;
  for (const FeatureVector& f : intervals) {
    m.changed_pages += f.changed_pages;
    m.changed_blocks += f.changed_blocks;
    m.dispersion += f.dispersion;
    m.tail_fraction += f.tail_fraction;
  }
  const double n = double(intervals.size());
  m.changed_pages /= n;
  m.changed_blocks /= n;
  m.dispersion /= n;
  m.tail_fraction /= n;
  return m;
}

std::string DistinguisherReport::to_csv() const {
  auto out = csv_stream();
  out << "key,value\n";
  out << "trials_with," << trials_with << '\n';
  out << "trials_without," << trials_without << '\n';
  out << "train_per_class," << train_per_class << '\n';
  out << "test_total," << test_total << '\n';
  out << "test_correct," << test_correct << '\n';
  out << "accuracy," << accuracy << '\n';
  out << "advantage," << advantage << '\n';
  for (size_t i = 0; i < FeatureVector::kCount; i++) {
    out << "p_" << FeatureVector::name(i) << ',' << feature_pvalues[i] << '\n';
    out << "threshold_" << FeatureVector::name(i) << ',' << thresholds[i] << '\n';
    out << "direction_" << FeatureVector::name(i) << ','
        << (greater_means_hidden[i] ? "greater" : "less") << '\n';
  }
  return out.str();
}

std::string DistinguisherReport::to_text() const {
  auto out = csv_stream();
  out << std::setprecision(6);
  out << "trials: " << trials_with << " with / " << trials_without
      << " without, " << train_per_class << " per class trained\n";
  out << "held-out accuracy: " << accuracy << " over " << test_total
      << " trials (advantage " << advantage << ")\n";
  for (size_t i = 0; i < FeatureVector::kCount; i++) {
    out << "  " << FeatureVector::name(i) << ": p=" << feature_pvalues[i]
        << " threshold=" << thresholds[i]
        << (greater_means_hidden[i] ? " (greater" : " (less")
        << " means hidden)\n";
  }
  return out.str();
}

namespace {

struct Split {
  std::vector<const TrialResult*> train;
  std::vector<const TrialResult*> test;
};

/// Front-of-class split in input order: deterministic for a fixed trial
/// vector no matter how many threads produced it.
Split stratified_split(const std::vector<TrialResult>& trials, double train_fraction,
                       size_t* train_per_class) {
  std::vector<const TrialResult*> with, without;
  for (const TrialResult& t : trials)
    (t.label == Variant::WithHidden ? with : without).push_back(&t);

  const size_t n = std::min(with.size(), without.size());
  size_t train_n = size_t(double(n) * train_fraction);
  train_n = std::clamp<size_t>(train_n, 1, n - 1);
  *train_per_class = train_n;

  Split s;
  for (auto* cls : {&with, &without}) {
    for (size_t i = 0; i < cls->size(); i++)
      (i < train_n ? s.train : s.test).push_back((*cls)[i]);
  }
  return s;
}

struct FeatureRule {
  double threshold = 0.0;
  bool greater_means_hidden = true;
};

/// Best single threshold for one feature on the training set, scanning
/// midpoints between adjacent sorted values in both directions.
FeatureRule train_threshold(const std::vector<const TrialResult*>& train,
                            const std::vector<FeatureVector>& means, size_t fi) {
  std::vector<double> values;
  values.reserve(train.size());
  for (size_t i = 0; i < train.size(); i++) values.push_back(means[i][fi]);
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  std::vector<double> candidates;
  candidates.push_back(sorted.front() - 1.0);
  for (size_t i = 0; i + 1 < sorted.size(); i++)
    candidates.push_back(0.5 * (sorted[i] + sorted[i + 1]));

  FeatureRule best;
  size_t best_correct = 0;
  for (double thr : candidates) {
    for (bool greater : {true, false}) {
      size_t correct = 0;
      for (size_t i = 0; i < train.size(); i++) {
        const bool says_hidden = (values[i] > thr) == greater;
        const bool is_hidden = train[i]->label == Variant::WithHidden;
        if (says_hidden == is_hidden) correct++;
      }
      if (correct > best_correct) {
        best_correct = correct;
        best = {thr, greater};
      }
    }
  }
  return best;
}

}  // namespace

DistinguisherReport distinguish(const std::vector<TrialResult>& trials,
                                double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(Errc::BadConfig, "train_fraction must lie strictly between 0 and 1");

  DistinguisherReport rep;
  for (const TrialResult& t : trials)
    (t.label == Variant::WithHidden ? rep.trials_with : rep.trials_without)++;
  if (rep.trials_with < 50 || rep.trials_without < 50)
    fail(Errc::TooFewTrials,
         "need at least 50 trials per variant, have " +
             std::to_string(rep.trials_with) + "/" +
             std::to_string(rep.trials_without));

  Split split = stratified_split(trials, train_fraction, &rep.train_per_class);

  std::vector<FeatureVector> train_means, test_means;
  train_means.reserve(split.train.size());
  for (const TrialResult* t : split.train) train_means.push_back(t->mean());
  test_means.reserve(split.test.size());
  for (const TrialResult* t : split.test) test_means.push_back(t->mean());

  std::array<FeatureRule, FeatureVector::kCount> rules;
  for (size_t fi = 0; fi < FeatureVector::kCount; fi++) {
    rules[fi] = train_threshold(split.train, train_means, fi);
    rep.thresholds[fi] = rules[fi].threshold;
    rep.greater_means_hidden[fi] = rules[fi].greater_means_hidden;
  }

  rep.test_total = split.test.size();
  for (size_t i = 0; i < split.test.size(); i++) {
    size_t votes = 0;
    for (size_t fi = 0; fi < FeatureVector::kCount; fi++) {
      if ((test_means[i][fi] > rules[fi].threshold) == rules[fi].greater_means_hidden)
        votes++;
    }
    // Strict majority says hidden; a tie stays with the null.
    const Variant said =
        2 * votes > FeatureVector::kCount ? Variant::WithHidden : Variant::WithoutHidden;
    if (said == split.test[i]->label) rep.test_correct++;
  }
  rep.accuracy =
      rep.test_total == 0 ? 0.0 : double(rep.test_correct) / double(rep.test_total);
  rep.advantage = std::fabs(rep.accuracy - 0.5);

  for (size_t fi = 0; fi < FeatureVector::kCount; fi++) {
    std::vector<double> a, b;
    for (const TrialResult& t : trials) {
      const double v = t.mean()[fi];
      (t.label == Variant::WithHidden ? a : b).push_back(v);
    }
    rep.feature_pvalues[fi] = stats::mann_whitney_pvalue(a, b);
  }
  return rep;
}

std::string BatteryReport::to_csv() const {
  auto out = csv_stream();
  out << "region,first_page,page_count,programmed_pages,entropy,chi_square_p,"
         "serial_p,pass\n";
  for (size_t i = 0; i < regions.size(); i++) {
    const RegionStats& r = regions[i];
    out << i << ',' << r.region.first_page << ',' << r.region.page_count << ','
        << r.programmed_pages << ',' << r.entropy << ',' << r.chi_square_p << ','
        << r.serial_p << ',' << (r.pass ? 1 : 0) << '\n';
  }
  out << "aggregate,,,," << aggregate_entropy << ",,," << (all_pass ? 1 : 0) << '\n';
  return out.str();
}

BatteryReport randomness_battery(const FlashSnapshot& snap,
                                 std::span<const Region> regions, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    fail(Errc::BadConfig, "alpha must lie strictly between 0 and 1");
  const uint64_t total = snap.geometry().total_pages();

  BatteryReport rep;
  rep.alpha = alpha;
  Bytes aggregate;
  for (const Region& region : regions) {
    if (region.page_count == 0 || region.first_page + region.page_count > total)
      fail(Errc::OutOfRange, "region exceeds the snapshot page range");

    Bytes bytes;
    RegionStats rs;
    rs.region = region;
    for (uint64_t p = region.first_page; p < region.first_page + region.page_count;
         p++) {
      if (snap.page_state(p) != PageState::Programmed) continue;
      const auto data = snap.page_data(p);
      bytes.insert(bytes.end(), data.begin(), data.end());
      rs.programmed_pages++;
    }
    if (rs.programmed_pages == 0)
      fail(Errc::EmptyRegion,
           "region at page " + std::to_string(region.first_page) +
               " holds no programmed pages");

    rs.entropy = stats::byte_entropy(bytes);
    rs.chi_square_p = stats::chi_square_pvalue(stats::byte_chi_square(bytes), 255.0);
    rs.serial_p = stats::serial_correlation_pvalue(stats::serial_correlation(bytes), bytes.size());
    rs.pass = rs.chi_square_p >= alpha && rs.serial_p >= alpha;
    if (!rs.pass) rep.regions_failed++;
    aggregate.insert(aggregate.end(), bytes.begin(), bytes.end());
    rep.regions.push_back(rs);
  }
  rep.aggregate_entropy = aggregate.empty() ? 0.0 : stats::byte_entropy(aggregate);
  rep.all_pass = rep.regions_failed == 0;
  return rep;
}

std::string ExperimentResult::trials_csv() const {
  auto out = csv_stream();
  out << "trial,variant,interval";
  for (size_t fi = 0; fi < FeatureVector::kCount; fi++)
    out << ',' << FeatureVector::name(fi);
  out << '\n';
  for (const TrialResult& t : trials) {
    for (size_t k = 0; k < t.intervals.size(); k++) {
      out << t.trial_index << ',' << variant_name(t.label) << ',' << k;
      for (size_t fi = 0; fi < FeatureVector::kCount; fi++)
        out << ',' << t.intervals[k][fi];
      out << '\n';
    }
  }
  return out.str();
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::string ftl_text;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string stripped = line;
    const size_t hash = stripped.find('#');
    if (hash != std::string::npos) stripped.erase(hash);
    const size_t start = stripped.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      fail(Errc::BadConfig,
           "experiment line " + std::to_string(lineno) + ": expected key=value");
    std::string key = stripped.substr(start, eq - start);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = stripped.substr(eq + 1);
    const size_t vstart = value.find_first_not_of(" \t");
    const size_t vend = value.find_last_not_of(" \t\r");
    value = vstart == std::string::npos ? "" : value.substr(vstart, vend - vstart + 1);

    auto as_u64 = [&]() -> uint64_t {
      try {
        return std::stoull(value);
      } catch (...) {
        fail(Errc::BadConfig, "experiment key '" + key + "': bad integer '" + value + "'");
      }
    };
    auto as_double = [&]() -> double {
      try {
        return std::stod(value);
      } catch (...) {
        fail(Errc::BadConfig, "experiment key '" + key + "': bad number '" + value + "'");
      }
    };

    if (key == "trials") cfg.trials = uint32_t(as_u64());
    else if (key == "threads") cfg.threads = uint32_t(as_u64());
    else if (key == "experiment_seed") cfg.master_seed = as_u64();
    else if (key == "train_fraction") cfg.train_fraction = as_double();
    else if (key == "null_experiment") cfg.null_experiment = as_u64() != 0;
    else if (key == "scenario_intervals") cfg.scenario.intervals = uint32_t(as_u64());
    else if (key == "scenario_public_writes")
      cfg.scenario.public_writes_per_interval = uint32_t(as_u64());
    else if (key == "scenario_public_writes_jitter")
      cfg.scenario.public_writes_jitter = as_double();
    else if (key == "scenario_hidden_writes")
      cfg.scenario.hidden_writes_per_interval = uint32_t(as_u64());
    else if (key == "scenario_hidden_period")
      cfg.scenario.hidden_session_period = uint32_t(as_u64());
    else if (key == "scenario_public_span")
      cfg.scenario.public_lba_span = uint32_t(as_u64());
    else if (key == "scenario_hidden_span")
      cfg.scenario.hidden_lba_span = uint32_t(as_u64());
    else if (key == "scenario_ticks") cfg.scenario.ticks_per_interval = uint32_t(as_u64());
    else if (key == "scenario_idle_ticks")
      cfg.scenario.idle_ticks_per_hidden_write = uint32_t(as_u64());
    else ftl_text += stripped.substr(start) + '\n';
  }
  cfg.ftl = FtlConfig::parse_text(ftl_text);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::IoError, "cannot open experiment config: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_experiment_config(buf.str());
}

namespace {

TrialResult run_one_arm(const ExperimentConfig& cfg, const Scenario& scenario,
                        Variant label, uint64_t ftl_seed, uint64_t trial_index) {
  FtlConfig ftl_cfg = cfg.ftl;
  ftl_cfg.master_seed = ftl_seed;
  const RunResult run =
      run_scenario(ftl_cfg, scenario, cfg.decoy_password, cfg.hidden_password);

  TrialResult trial;
  trial.label = label;
  trial.trial_index = trial_index;
  // Round-trip every snapshot through its byte serialization: the features
  // must be functions of the stored images, nothing else.
  std::vector<FlashSnapshot> images;
  images.reserve(run.snapshots.size());
  for (const auto& [name, snap] : run.snapshots) {
    const Bytes raw = snap.serialize();
    images.push_back(FlashSnapshot::parse(raw));
  }
  for (size_t i = 0; i + 1 < images.size(); i++) {
    const DiffReport diff = diff_snapshots(images[i], images[i + 1]);
    trial.intervals.push_back(extract_features(diff, images[i].geometry()));
  }
  return trial;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.trials == 0) fail(Errc::BadConfig, "trials must be positive");
  if (cfg.decoy_password.empty() || cfg.hidden_password.empty())
    fail(Errc::EmptyPassword, "experiment needs both passwords");

  // Seeds are drawn sequentially up front so worker scheduling cannot
  // reorder them.
  std::vector<uint64_t> scenario_seed(cfg.trials);
  std::vector<uint64_t> ftl_seed_with(cfg.trials);
  std::vector<uint64_t> ftl_seed_without(cfg.trials);
  Rng s = Rng::substream(cfg.master_seed, "experiment-scenario");
  Rng fw = Rng::substream(cfg.master_seed, "experiment-ftl-with");
  Rng fo = Rng::substream(cfg.master_seed, "experiment-ftl-without");
  for (uint32_t i = 0; i < cfg.trials; i++) {
    scenario_seed[i] = s.next();
    ftl_seed_with[i] = fw.next();
    ftl_seed_without[i] = fo.next();
  }

  ExperimentResult result;
  result.trials.resize(size_t(cfg.trials) * 2);

  std::atomic<uint32_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      const uint32_t i = next.fetch_add(1);
      if (i >= cfg.trials) return;
      try {
        const Scenario paired = build_scenario(cfg.scenario, scenario_seed[i]);
        const Scenario without =
            paired.without_hidden(cfg.scenario.idle_ticks_per_hidden_write);
        const Scenario& with_arm = cfg.null_experiment ? without : paired;
        result.trials[size_t(i) * 2] =
            run_one_arm(cfg, with_arm, Variant::WithHidden, ftl_seed_with[i], i);
        result.trials[size_t(i) * 2 + 1] = run_one_arm(
            cfg, without, Variant::WithoutHidden, ftl_seed_without[i], i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  uint32_t n_threads = cfg.threads ? cfg.threads : std::thread::hardware_concurrency();
  n_threads = std::clamp<uint32_t>(n_threads, 1, cfg.trials);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (uint32_t t = 0; t < n_threads; t++) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);

  result.report = distinguish(result.trials, cfg.train_fraction);
  return result;
}

}  // namespace pdeftl
