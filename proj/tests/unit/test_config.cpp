#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "pdeftl/config.hpp"

using namespace pdeftl;

TEST_CASE("defaults validate") {
  FtlConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.geometry.num_blocks == 256);
  CHECK(cfg.strategy == Strategy::DummyRandom);
}

TEST_CASE("text round trip preserves every field") {
  FtlConfig cfg;
  cfg.geometry = {64, 32, 512, 64, 5000};
  cfg.strategy = Strategy::HiddenVolumeBaseline;
  cfg.dummy_mean = 3.5;
  cfg.idle_threshold = 7;
  cfg.idle_dummy_count = 1.25;
  cfg.gc_free_low = 0.2;
  cfg.load_high = 0.85;
  cfg.map_slots = 4;
  cfg.master_seed = 987654321;
  cfg.gc_reclaim_fraction = 0.25;
  cfg.public_capacity_frac = 0.6;
  cfg.hidden_capacity_frac = 0.25;
  cfg.hidden_gc_target = 0.4;
  cfg.kdf_iters = 2000;
  cfg.snapshot_sidecar = false;

  const FtlConfig back = FtlConfig::parse_text(cfg.to_text());
  CHECK(back.geometry == cfg.geometry);
  CHECK(back.strategy == cfg.strategy);
  CHECK(back.dummy_mean == cfg.dummy_mean);
  CHECK(back.idle_threshold == cfg.idle_threshold);
  CHECK(back.idle_dummy_count == cfg.idle_dummy_count);
  CHECK(back.gc_free_low == cfg.gc_free_low);
  CHECK(back.load_high == cfg.load_high);
  CHECK(back.map_slots == cfg.map_slots);
  CHECK(back.master_seed == cfg.master_seed);
  CHECK(back.gc_reclaim_fraction == cfg.gc_reclaim_fraction);
  CHECK(back.public_capacity_frac == cfg.public_capacity_frac);
  CHECK(back.hidden_capacity_frac == cfg.hidden_capacity_frac);
  CHECK(back.hidden_gc_target == cfg.hidden_gc_target);
  CHECK(back.kdf_iters == cfg.kdf_iters);
  CHECK(back.snapshot_sidecar == cfg.snapshot_sidecar);
}

TEST_CASE("parse accepts comments and whitespace") {
  const FtlConfig cfg = FtlConfig::parse_text(
      "# device\n"
      "  master_seed = 42   # trailing comment\n"
      "\n"
      "strategy=hidden_volume_baseline\r\n");
  CHECK(cfg.master_seed == 42);
  CHECK(cfg.strategy == Strategy::HiddenVolumeBaseline);
}

TEST_CASE("parse rejects malformed input") {
  CHECK_THROWS_AS((void)FtlConfig::parse_text("not a config"), Error);
  CHECK_THROWS_AS((void)FtlConfig::parse_text("unknown_key=1"), Error);
  CHECK_THROWS_AS((void)FtlConfig::parse_text("master_seed=banana"), Error);
  CHECK_THROWS_AS((void)FtlConfig::parse_text("strategy=telepathy"), Error);
  CHECK_THROWS_AS((void)FtlConfig::parse_text("dummy_mean=-1"), Error);
  CHECK_THROWS_AS((void)FtlConfig::parse_text("gc_free_low=0"), Error);
  CHECK_THROWS_AS((void)FtlConfig::parse_text("load_high=1.0"), Error);
  CHECK_THROWS_AS((void)FtlConfig::parse_text("map_slots=0"), Error);
  CHECK_THROWS_AS(
      (void)FtlConfig::parse_text("public_capacity_frac=0.8\nhidden_capacity_frac=0.3"), Error);
  CHECK_THROWS_AS((void)FtlConfig::parse_text("hidden_gc_target=0.95"), Error);
}

TEST_CASE("load_file") {
  const std::string path = "/tmp/pdeftl_test_cfg.txt";
  {
    std::ofstream f(path);
    f << "master_seed=777\nmap_slots=3\n";
  }
  const FtlConfig cfg = FtlConfig::load_file(path);
  CHECK(cfg.master_seed == 777);
  CHECK(cfg.map_slots == 3);
  std::remove(path.c_str());
  CHECK_THROWS_AS((void)FtlConfig::load_file("/nonexistent/nope.cfg"), Error);
}
