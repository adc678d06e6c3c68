#include "config.hpp"

#include <fstream>
#include <sstream>

namespace pdeftl {

void FtlConfig::validate() const {
  geometry.validate();
  if (dummy_mean < 0) fail(Errc::BadConfig, "dummy_mean must be >= 0");
  if (gc_free_low <= 0 || gc_free_low >= 1) fail(Errc::BadConfig, "gc_free_low must be in (0,1)");
  if (load_high <= 0 || load_high >= 1) fail(Errc::BadConfig, "load_high must be in (0,1)");
  if (gc_reclaim_fraction <= 0 || gc_reclaim_fraction > 1)
    fail(Errc::BadConfig, "gc_reclaim_fraction must be in (0,1]");
  if (map_slots == 0) fail(Errc::BadConfig, "map_slots must be positive");
  if (public_capacity_frac <= 0 || hidden_capacity_frac < 0 ||
      public_capacity_frac + hidden_capacity_frac >= 1.0)
    fail(Errc::BadConfig, "capacity fractions must leave over-provisioning headroom");
  if (hidden_gc_target <= 0 || hidden_gc_target >= load_high)
    fail(Errc::BadConfig, "hidden_gc_target must be in (0, load_high)");
  if (idle_dummy_count < 0) fail(Errc::BadConfig, "idle_dummy_count must be >= 0");
}

std::string FtlConfig::to_text() const {
  std::ostringstream out;
  out << "num_blocks=" << geometry.num_blocks << '\n'
      << "pages_per_block=" << geometry.pages_per_block << '\n'
      << "page_size=" << geometry.page_size << '\n'
      << "oob_size=" << geometry.oob_size << '\n'
      << "pe_cycle_limit=" << geometry.pe_cycle_limit << '\n'
      << "strategy=" << strategy_name(strategy) << '\n'
      << "dummy_mean=" << dummy_mean << '\n'
      << "idle_threshold=" << idle_threshold << '\n'
      << "idle_dummy_count=" << idle_dummy_count << '\n'
      << "gc_free_low=" << gc_free_low << '\n'
      << "load_high=" << load_high << '\n'
      << "map_slots=" << map_slots << '\n'
      << "master_seed=" << master_seed << '\n'
      << "gc_reclaim_fraction=" << gc_reclaim_fraction << '\n'
      << "public_capacity_frac=" << public_capacity_frac << '\n'
      << "hidden_capacity_frac=" << hidden_capacity_frac << '\n'
      << "hidden_gc_target=" << hidden_gc_target << '\n'
      << "kdf_iters=" << kdf_iters << '\n'
      << "snapshot_sidecar=" << (snapshot_sidecar ? 1 : 0) << '\n';
  return out.str();
}

FtlConfig FtlConfig::parse_text(const std::string& text) {
  FtlConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
      line.pop_back();
    size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      fail(Errc::BadConfig, "config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = line.substr(start, eq - start);
    while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
    std::string value = line.substr(eq + 1);
    const size_t vstart = value.find_first_not_of(" \t");
    value = vstart == std::string::npos ? "" : value.substr(vstart);

    auto as_u64 = [&]() -> uint64_t {
      try {
        return std::stoull(value);
      } catch (...) {
        fail(Errc::BadConfig, "config key '" + key + "': bad integer '" + value + "'");
      }
    };
    auto as_double = [&]() -> double {
      try {
        return std::stod(value);
      } catch (...) {
        fail(Errc::BadConfig, "config key '" + key + "': bad number '" + value + "'");
      }
    };

    if (key == "num_blocks") cfg.geometry.num_blocks = uint32_t(as_u64());
    else if (key == "pages_per_block") cfg.geometry.pages_per_block = uint32_t(as_u64());
    else if (key == "page_size") cfg.geometry.page_size = uint32_t(as_u64());
    else if (key == "oob_size") cfg.geometry.oob_size = uint32_t(as_u64());
    else if (key == "pe_cycle_limit") cfg.geometry.pe_cycle_limit = uint32_t(as_u64());
    else if (key == "strategy") {
      if (value == "dummy_random") cfg.strategy = Strategy::DummyRandom;
      else if (value == "hidden_volume_baseline") cfg.strategy = Strategy::HiddenVolumeBaseline;
      else fail(Errc::BadConfig, "unknown strategy '" + value + "'");
    } else if (key == "dummy_mean") cfg.dummy_mean = as_double();
    else if (key == "idle_threshold") cfg.idle_threshold = uint32_t(as_u64());
    else if (key == "idle_dummy_count") cfg.idle_dummy_count = as_double();
    else if (key == "gc_free_low") cfg.gc_free_low = as_double();
    else if (key == "load_high") cfg.load_high = as_double();
    else if (key == "map_slots") cfg.map_slots = uint32_t(as_u64());
    else if (key == "master_seed") cfg.master_seed = as_u64();
    else if (key == "gc_reclaim_fraction") cfg.gc_reclaim_fraction = as_double();
    else if (key == "public_capacity_frac") cfg.public_capacity_frac = as_double();
    else if (key == "hidden_capacity_frac") cfg.hidden_capacity_frac = as_double();
    else if (key == "hidden_gc_target") cfg.hidden_gc_target = as_double();
    else if (key == "kdf_iters") cfg.kdf_iters = uint32_t(as_u64());
    else if (key == "snapshot_sidecar") cfg.snapshot_sidecar = as_u64() != 0;
    else fail(Errc::BadConfig, "unknown config key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

FtlConfig FtlConfig::load_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) fail(Errc::IoError, "cannot open config: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_text(buf.str());
}

const char* strategy_name(Strategy s) {
  return s == Strategy::DummyRandom ? "dummy_random" : "hidden_volume_baseline";
}

}  // namespace pdeftl
