#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "pdeftl/ftl.hpp"

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

PdeFtl fresh(uint64_t seed = 1, Strategy strategy = Strategy::DummyRandom) {
  const FtlConfig cfg = test_cfg(seed, strategy);
  return PdeFtl::format(FlashArray(cfg.geometry), kDecoyPw, kTruePw, cfg);
}

Bytes sector(uint32_t lba, uint32_t round, uint32_t page_size = 512) {
  Bytes b(page_size);
  for (size_t i = 0; i < b.size(); i++) b[i] = uint8_t(lba * 31 + round * 7 + i);
  return b;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::Ok;
}

}  // namespace

TEST_CASE("format preconditions") {
  const FtlConfig cfg = test_cfg();
  CHECK(code_of([&] {
          (void)PdeFtl::format(FlashArray(cfg.geometry), kDecoyPw, kDecoyPw, cfg);
        }) == Errc::SamePassword);

  FlashArray used(cfg.geometry);
  used.program_page({5, 0}, Bytes(512, 1), Bytes(64, 2));
  CHECK(code_of([&] { (void)PdeFtl::format(std::move(used), kDecoyPw, kTruePw, cfg); }) ==
        Errc::PageNotErased);

  FtlConfig small = cfg;
  small.geometry.num_blocks = 16;  // 2 + 2*4 reserved leaves too little
  CHECK(code_of([&] {
          (void)PdeFtl::format(FlashArray(small.geometry), kDecoyPw, kTruePw, small);
        }) == Errc::GeometryTooSmall);
}

TEST_CASE("format yields a locked, fully programmed device") {
  PdeFtl ftl = fresh();
  CHECK(ftl.mode() == Mode::Locked);
  CHECK_FALSE(ftl.crash_pending());
  CHECK(ftl.public_capacity() > 0);
  CHECK(ftl.hidden_capacity() > 0);

  // Outside the superblock region every page is programmed except the
  // commit-slot head pages the first commit has not consumed yet.
  const auto& flash = ftl.flash();
  const uint32_t ppb = flash.geometry().pages_per_block;
  uint64_t erased_outside = 0;
  for (uint32_t b = 2; b < flash.geometry().num_blocks; b++)
    for (uint32_t p = 0; p < ppb; p++)
      if (flash.page_state({b, p}) == PageState::Erased) erased_outside++;
  const uint64_t slot_heads = 2ull * 4;  // map_slots per volume, two volumes
  CHECK(erased_outside == slot_heads - 2);
}

TEST_CASE("locked device rejects data operations") {
  PdeFtl ftl = fresh();
  CHECK(code_of([&] { ftl.write_sector(0, sector(0, 0)); }) == Errc::WrongMode);
  CHECK(code_of([&] { ftl.hidden_write_sector(0, sector(0, 0)); }) == Errc::WrongMode);
  CHECK(code_of([&] { (void)ftl.read_sector(0); }) == Errc::WrongMode);
  CHECK(code_of([&] { ftl.dummy_write(1); }) == Errc::WrongMode);
  CHECK(code_of([&] { ftl.commit_shutdown(); }) == Errc::WrongMode);
  CHECK(code_of([&] { (void)ftl.gc_public(); }) == Errc::WrongMode);
}

TEST_CASE("failed unlock performs zero flash writes") {
  PdeFtl ftl = fresh();
  const uint64_t programs = ftl.flash().programs_total();
  const uint64_t erases = ftl.flash().erases_total();

  CHECK(code_of([&] { ftl.unlock("wrong-password"); }) == Errc::NoMatch);
  CHECK(code_of([&] { ftl.unlock_hidden(kDecoyPw, "wrong-hidden"); }) == Errc::NoMatch);
  CHECK(code_of([&] { ftl.unlock_hidden("wrong-decoy", kTruePw); }) == Errc::NoMatch);
  CHECK(code_of([&] { ftl.recover("wrong", std::nullopt); }) == Errc::NoMatch);

  CHECK(ftl.flash().programs_total() == programs);
  CHECK(ftl.flash().erases_total() == erases);
  CHECK(ftl.mode() == Mode::Locked);
}

TEST_CASE("public write, read, overwrite, bounds") {
  PdeFtl ftl = fresh();
  ftl.unlock(kDecoyPw);
  CHECK(ftl.mode() == Mode::Public);
  CHECK(code_of([&] { ftl.unlock(kDecoyPw); }) == Errc::WrongMode);

  ftl.write_sector(3, sector(3, 0));
  ftl.write_sector(700, sector(700, 0));
  CHECK(ftl.read_sector(3) == sector(3, 0));
  CHECK(ftl.read_sector(700) == sector(700, 0));

  ftl.write_sector(3, sector(3, 1));
  CHECK(ftl.read_sector(3) == sector(3, 1));

  CHECK(ftl.read_sector(4) == Bytes(512, 0));  // never written

  CHECK(code_of([&] { ftl.write_sector(ftl.public_capacity(), sector(0, 0)); }) ==
        Errc::OutOfRange);
  CHECK(code_of([&] { (void)ftl.read_sector(ftl.public_capacity()); }) == Errc::OutOfRange);
  CHECK(code_of([&] { ftl.write_sector(0, Bytes(511, 0)); }) == Errc::LengthMismatch);
  CHECK(code_of([&] { ftl.hidden_write_sector(0, sector(0, 0)); }) == Errc::WrongMode);
}

TEST_CASE("data persists across commit and relock") {
  PdeFtl ftl = fresh();
  ftl.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < 40; lba++) ftl.write_sector(lba, sector(lba, 0));
  ftl.commit_shutdown();
  CHECK(ftl.mode() == Mode::Locked);

  ftl.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < 40; lba++) CHECK(ftl.read_sector(lba) == sector(lba, 0));
  CHECK(ftl.metrics().unlock_count == 2);
  ftl.commit_shutdown();
}

TEST_CASE("hidden volume round trip and mode isolation") {
  PdeFtl ftl = fresh();
  ftl.unlock_hidden(kDecoyPw, kTruePw);
  CHECK(ftl.mode() == Mode::Hidden);

  for (uint32_t lba = 0; lba < 20; lba++) ftl.hidden_write_sector(lba, sector(lba, 9));
  for (uint32_t lba = 0; lba < 20; lba++) CHECK(ftl.read_sector(lba) == sector(lba, 9));
  CHECK(code_of([&] { ftl.write_sector(0, sector(0, 0)); }) == Errc::WrongMode);
  CHECK(code_of([&] { ftl.hidden_write_sector(ftl.hidden_capacity(), sector(0, 0)); }) ==
        Errc::OutOfRange);
  ftl.commit_shutdown();

  // the public session neither sees hidden data nor may touch it
  ftl.unlock(kDecoyPw);
  CHECK(ftl.read_sector(0) == Bytes(512, 0));
  CHECK(code_of([&] { ftl.hidden_write_sector(0, sector(0, 0)); }) == Errc::WrongMode);
  for (uint32_t lba = 0; lba < 30; lba++) ftl.write_sector(lba, sector(lba, 1));
  ftl.commit_shutdown();

  // hidden data survives the public session
  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < 20; lba++) CHECK(ftl.read_sector(lba) == sector(lba, 9));
  ftl.commit_shutdown();

  // and the public view is unchanged by the hidden session
  ftl.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < 30; lba++) CHECK(ftl.read_sector(lba) == sector(lba, 1));
  ftl.commit_shutdown();
}

TEST_CASE("crash requires recovery and recovery finds newest versions") {
  PdeFtl ftl = fresh();
  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < 10; lba++) ftl.hidden_write_sector(lba, sector(lba, 0));
  ftl.commit_shutdown();

  ftl.unlock(kDecoyPw);
  ftl.write_sector(5, sector(5, 0));
  ftl.commit_shutdown();

  // uncommitted overwrite, then power loss
  ftl.unlock(kDecoyPw);
  ftl.write_sector(5, sector(5, 1));
  ftl.write_sector(6, sector(6, 1));
  ftl.crash();
  CHECK(ftl.mode() == Mode::Locked);
  CHECK(ftl.crash_pending());

  CHECK(code_of([&] { ftl.unlock(kDecoyPw); }) == Errc::RecoveryRequired);
  CHECK(code_of([&] { ftl.unlock_hidden(kDecoyPw, kTruePw); }) == Errc::RecoveryRequired);

  ftl.recover(kDecoyPw, std::string(kTruePw));
  CHECK_FALSE(ftl.crash_pending());
  CHECK(ftl.mode() == Mode::Locked);

  ftl.unlock_hidden(kDecoyPw, kTruePw);
  CHECK(ftl.read_sector(5) == sector(5, 0));  // hidden lba 5, untouched
  ftl.commit_shutdown();

  ftl.unlock(kDecoyPw);
  CHECK(ftl.read_sector(5) == sector(5, 1));  // newest public write recovered
  CHECK(ftl.read_sector(6) == sector(6, 1));
  ftl.commit_shutdown();
}

TEST_CASE("decoy-only recovery keeps the public volume usable") {
  PdeFtl ftl = fresh();
  ftl.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < 25; lba++) ftl.write_sector(lba, sector(lba, 0));
  ftl.commit_shutdown();

  ftl.unlock(kDecoyPw);
  ftl.write_sector(1, sector(1, 1));
  ftl.crash();

  ftl.recover(kDecoyPw, std::nullopt);
  ftl.unlock(kDecoyPw);
  CHECK(ftl.read_sector(1) == sector(1, 1));
  for (uint32_t lba = 2; lba < 25; lba++) CHECK(ftl.read_sector(lba) == sector(lba, 0));
  ftl.commit_shutdown();
}

TEST_CASE("recover works on a clean device too") {
  PdeFtl ftl = fresh();
  ftl.unlock(kDecoyPw);
  ftl.write_sector(0, sector(0, 0));
  ftl.commit_shutdown();
  ftl.recover(kDecoyPw, std::string(kTruePw));
  ftl.unlock(kDecoyPw);
  CHECK(ftl.read_sector(0) == sector(0, 0));
  ftl.commit_shutdown();
}

TEST_CASE("dummy ledger matches ground truth within and across sessions") {
  PdeFtl ftl = fresh(7);
  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < 30; lba++) ftl.hidden_write_sector(lba, sector(lba, 0));
  ftl.dummy_write(50);
  ftl.tick(25);  // crosses the idle threshold at least twice

  const uint64_t total = ftl.flash().geometry().total_pages();
  auto check_identity = [&] {
    for (uint64_t p = 0; p < total; p++) {
      const bool ledger = ftl.inspect_dummy_ledger(p);
      const bool truth = ftl.inspect_kind(p) == PageKind::Dummy;
      REQUIRE(ledger == truth);
    }
  };
  check_identity();
  CHECK(ftl.metrics().pages_dummy >= 50);
  ftl.commit_shutdown();

  // reconstruction at the next hidden unlock reproduces the same ledger
  ftl.unlock_hidden(kDecoyPw, kTruePw);
  check_identity();
  ftl.commit_shutdown();
}

TEST_CASE("every flash program is attributed in the metrics ledger") {
  PdeFtl ftl = fresh(3);
  auto balanced = [&] {
    const FtlMetrics& m = ftl.metrics();
    const uint64_t attributed = m.pages_format_fill + m.pages_superblock +
                                m.pages_map_commit + m.pages_public_data +
                                m.pages_hidden_data + m.pages_dummy +
                                m.pages_reloc_public + m.pages_reloc_hidden;
    return attributed == ftl.flash().programs_total();
  };
  CHECK(balanced());

  ftl.unlock(kDecoyPw);
  for (uint32_t i = 0; i < 200; i++) ftl.write_sector(i % 90, sector(i % 90, i));
  ftl.tick(30);
  CHECK(balanced());
  ftl.commit_shutdown();
  CHECK(balanced());

  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t i = 0; i < 60; i++) ftl.hidden_write_sector(i % 40, sector(i, i));
  ftl.dummy_write(20);
  ftl.tick(30);
  CHECK(balanced());
  ftl.commit_shutdown();
  CHECK(balanced());
}

TEST_CASE("dummy overhead tracks the configured mean") {
  PdeFtl ftl = fresh(11);
  ftl.unlock(kDecoyPw);
  const uint32_t writes = 400;
  for (uint32_t i = 0; i < writes; i++) ftl.write_sector(i % 200, sector(i, i));
  const double overhead = ftl.metrics().dummy_overhead();
  // mean 2.0, sd of the mean = sqrt(2*3/400) ~ 0.12; generous 5 sigma
  CHECK(overhead > 1.4);
  CHECK(overhead < 2.6);
  ftl.commit_shutdown();
}

TEST_CASE("shadow oracle: translation matches a reference map over a mixed workload") {
  PdeFtl ftl = fresh(17);
  Rng rng(171717);
  std::map<uint32_t, Bytes> reference;
  const uint32_t lba_space = 300;

  ftl.unlock(kDecoyPw);
  uint32_t round = 0;
  for (uint32_t op = 0; op < 2500; op++) {
    const uint64_t what = rng.below(100);
    const uint32_t lba = uint32_t(rng.below(lba_space));
    if (what < 55) {
      const Bytes data = sector(lba, round++);
      ftl.write_sector(lba, data);
      reference[lba] = data;
    } else if (what < 90) {
      const Bytes got = ftl.read_sector(lba);
      auto it = reference.find(lba);
      const Bytes want = it == reference.end() ? Bytes(512, 0) : it->second;
      REQUIRE(got == want);
    } else if (what < 97) {
      ftl.tick(1);
    } else {
      ftl.commit_shutdown();
      ftl.unlock(kDecoyPw);
    }
  }
  for (const auto& [lba, want] : reference) REQUIRE(ftl.read_sector(lba) == want);
  ftl.commit_shutdown();

  ftl.unlock(kDecoyPw);
  for (const auto& [lba, want] : reference) REQUIRE(ftl.read_sector(lba) == want);
  ftl.commit_shutdown();
}

TEST_CASE("same seed reproduces identical flash images, different seed diverges") {
  auto run = [](uint64_t seed) {
    PdeFtl ftl = fresh(seed);
    ftl.unlock(kDecoyPw);
    for (uint32_t i = 0; i < 120; i++) ftl.write_sector(i % 60, sector(i, i));
    ftl.tick(15);
    ftl.commit_shutdown();
    return ftl.take_snapshot().serialize();
  };
  const Bytes a = run(5);
  const Bytes b = run(5);
  const Bytes c = run(6);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("placement draws replay exactly from the placement substream") {
  const uint64_t seed = 23;
  PdeFtl ftl = fresh(seed);

  struct Draw {
    std::vector<uint64_t> members;
    uint64_t chosen;
  };
  std::vector<Draw> draws;
  ftl.set_placement_observer([&](const std::vector<uint32_t>&, uint64_t chosen) {
    draws.push_back({ftl.inspect_pool(), chosen});
  });

  ftl.unlock(kDecoyPw);
  for (uint32_t i = 0; i < 80; i++) ftl.write_sector(i, sector(i, 0));
  ftl.set_placement_observer(nullptr);

  // format consumed no placement draws (it fills positionally), so the
  // session's draw k_i is the i-th below() of the placement substream
  Rng replica = Rng::substream(seed, "placement");
  REQUIRE(draws.size() >= 80);
  for (const Draw& d : draws) {
    REQUIRE(!d.members.empty());
    const uint64_t k = replica.below(d.members.size());
    REQUIRE(d.members[k] == d.chosen);
  }
  ftl.commit_shutdown();
}

TEST_CASE("idle ticks emit dummy bursts in public mode") {
  PdeFtl ftl = fresh(29);
  ftl.unlock(kDecoyPw);
  ftl.write_sector(0, sector(0, 0));
  const uint64_t before = ftl.metrics().pages_dummy;
  ftl.tick(100);  // threshold 10 -> 10 idle bursts
  CHECK(ftl.metrics().idle_bursts == 10);
  CHECK(ftl.metrics().pages_dummy > before);
  ftl.commit_shutdown();
}

TEST_CASE("hidden-mode idle gc reclaims dummies") {
  PdeFtl ftl = fresh(31);
  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t i = 0; i < 200; i++) ftl.hidden_write_sector(i % 150, sector(i, i));
  ftl.dummy_write(800);
  CHECK(ftl.load_factor() > ftl.config().hidden_gc_target);
  ftl.tick(ftl.config().idle_threshold);
  CHECK(ftl.metrics().dummy_pages_reclaimed > 0);
  CHECK(ftl.load_factor() <= ftl.config().hidden_gc_target + 0.05);
  // reads still good after relocation churn
  for (uint32_t lba = 0; lba < 150; lba++) {
    const Bytes got = ftl.read_sector(lba);
    CHECK(got.size() == 512);
  }
  ftl.commit_shutdown();

  ftl.unlock_hidden(kDecoyPw, kTruePw);
  CHECK(ftl.read_sector(149) == sector(149, 149));
  ftl.commit_shutdown();
}

TEST_CASE("public high-load reclamation frees dummy candidates and tracks expected hidden loss") {
  PdeFtl ftl = fresh(37);
  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < 60; lba++) ftl.hidden_write_sector(lba, sector(lba, 2));
  ftl.commit_shutdown();

  // Sustained public churn keeps occupancy at the watermark, so maintenance
  // has to run reclaim passes; hidden pages are candidates like any other
  // unrecognized used page.
  ftl.unlock(kDecoyPw);
  for (uint32_t i = 0; i < 600; i++)
    ftl.write_sector(i % ftl.public_capacity(), sector(i, i));
  CHECK(ftl.metrics().dummy_pages_reclaimed > 0);
  CHECK(ftl.metrics().expected_hidden_loss > 0.0);
  // each page can be lost at most once, data plus a few map pages
  CHECK(ftl.metrics().hidden_risk_pages <= 60 + 10);
  const ReclaimReport rep = ftl.gc_public();
  CHECK(rep.blocks_erased + rep.pages_freed + rep.pages_relocated_public >= 0);
  ftl.commit_shutdown();
}

TEST_CASE("slot cycling across many commits keeps volumes healthy") {
  PdeFtl ftl = fresh(41);
  for (uint32_t round = 0; round < 10; round++) {
    ftl.unlock_hidden(kDecoyPw, kTruePw);
    ftl.hidden_write_sector(round, sector(round, round));
    ftl.commit_shutdown();
  }
  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t round = 0; round < 10; round++)
    CHECK(ftl.read_sector(round) == sector(round, round));
  CHECK(ftl.inspect_commit_seq() >= 11);
  ftl.commit_shutdown();
}

TEST_CASE("version counter is monotonic across sessions and recovery") {
  PdeFtl ftl = fresh(43);
  ftl.unlock(kDecoyPw);
  ftl.write_sector(0, sector(0, 0));
  const uint64_t v1 = ftl.inspect_version_counter();
  ftl.commit_shutdown();

  ftl.unlock(kDecoyPw);
  CHECK(ftl.inspect_version_counter() >= v1);
  ftl.write_sector(0, sector(0, 1));
  ftl.crash();
  ftl.recover(kDecoyPw, std::nullopt);

  ftl.unlock(kDecoyPw);
  CHECK(ftl.inspect_version_counter() > v1);
  CHECK(ftl.read_sector(0) == sector(0, 1));
  ftl.commit_shutdown();
}

TEST_CASE("snapshot restore and adopt continue a device image") {
  PdeFtl ftl = fresh(47);
  ftl.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < 15; lba++) ftl.write_sector(lba, sector(lba, 0));
  ftl.commit_shutdown();

  const FlashSnapshot snap = ftl.take_snapshot();
  PdeFtl twin = PdeFtl::adopt(snap.restore(), test_cfg(47));
  CHECK(twin.mode() == Mode::Locked);
  twin.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < 15; lba++) CHECK(twin.read_sector(lba) == sector(lba, 0));
  twin.commit_shutdown();

  FlashArray blank(test_cfg().geometry);
  CHECK(code_of([&] { (void)PdeFtl::adopt(std::move(blank), test_cfg()); }) ==
        Errc::NoValidSuperblock);
}

TEST_CASE("adopt flags a dirty image as crash pending") {
  PdeFtl ftl = fresh(53);
  ftl.unlock(kDecoyPw);
  ftl.write_sector(0, sector(0, 0));
  ftl.crash();
  PdeFtl twin = PdeFtl::adopt(ftl.take_snapshot().restore(), test_cfg(53));
  CHECK(twin.crash_pending());
  CHECK(code_of([&] { twin.unlock(kDecoyPw); }) == Errc::RecoveryRequired);
  twin.recover(kDecoyPw, std::nullopt);
  CHECK_FALSE(twin.crash_pending());
}

TEST_CASE("baseline strategy separates head and tail regions") {
  PdeFtl ftl = fresh(59, Strategy::HiddenVolumeBaseline);
  const uint32_t ppb = ftl.flash().geometry().pages_per_block;
  const uint32_t tail_floor = uint32_t(0.70 * 64);

  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < 25; lba++) ftl.hidden_write_sector(lba, sector(lba, 0));
  CHECK(ftl.metrics().pages_dummy == 0);
  ftl.dummy_write(10);  // no-op under the baseline
  CHECK(ftl.metrics().pages_dummy == 0);

  for (const auto& e : ftl.inspect_hidden_map()) {
    if (!e.mapped()) continue;
    CHECK(e.ppa / ppb >= tail_floor);
  }
  ftl.commit_shutdown();

  ftl.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < 25; lba++) ftl.write_sector(lba, sector(lba, 1));
  uint32_t max_public_block = 0;
  for (const auto& e : ftl.inspect_public_map()) {
    if (!e.mapped()) continue;
    max_public_block = std::max(max_public_block, e.ppa / ppb);
  }
  CHECK(max_public_block < tail_floor);
  ftl.commit_shutdown();

  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < 25; lba++) CHECK(ftl.read_sector(lba) == sector(lba, 0));
  ftl.commit_shutdown();
}

TEST_CASE("baseline public churn destroys hidden data it cannot see") {
  // Size the volumes so public allocation must erase into the tail band the
  // hidden data occupies: head blocks alone cannot hold the public volume.
  FtlConfig cfg = test_cfg(61, Strategy::HiddenVolumeBaseline);
  cfg.public_capacity_frac = 0.78;
  cfg.hidden_capacity_frac = 0.20;
  PdeFtl ftl = PdeFtl::format(FlashArray(cfg.geometry), kDecoyPw, kTruePw, cfg);

  ftl.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < ftl.hidden_capacity(); lba++)
    ftl.hidden_write_sector(lba, sector(lba, 0));
  ftl.commit_shutdown();

  ftl.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < ftl.public_capacity(); lba++)
    ftl.write_sector(lba, sector(lba, 1));
  CHECK(ftl.metrics().baseline_hidden_overwrites > 0);
  ftl.commit_shutdown();

  // the dummy-random strategy protects hidden pages from the same churn
  PdeFtl safe = fresh(61, Strategy::DummyRandom);
  safe.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < 40; lba++) safe.hidden_write_sector(lba, sector(lba, 0));
  safe.commit_shutdown();
  safe.unlock(kDecoyPw);
  // A workload light enough that erase and compaction always keep up never
  // triggers reclamation, so hidden pages stay untouched.
  for (uint32_t i = 0; i < 300; i++) safe.write_sector(i % 200, sector(i, i));
  CHECK(safe.metrics().hidden_risk_pages == 0);
  CHECK(safe.metrics().baseline_hidden_overwrites == 0);
  safe.commit_shutdown();
  safe.unlock_hidden(kDecoyPw, kTruePw);
  for (uint32_t lba = 0; lba < 40; lba++) CHECK(safe.read_sector(lba) == sector(lba, 0));
  safe.commit_shutdown();
}

TEST_CASE("diagnostics never leak password material") {
  PdeFtl ftl = fresh(67);
  ftl.unlock(kDecoyPw);
  ftl.write_sector(0, sector(0, 0));
  ftl.tick(12);
  const std::string metrics = ftl.metrics_text();
  const std::string events = ftl.events_csv();
  for (const std::string needle : {"decoy-passphrase", "true-passphrase"}) {
    CHECK(metrics.find(needle) == std::string::npos);
    CHECK(events.find(needle) == std::string::npos);
  }
  CHECK(metrics.find("logical_public_writes=1") != std::string::npos);
  CHECK(events.find("seq,tick,mode,op") == 0);
  ftl.commit_shutdown();
}

TEST_CASE("device full surfaces cleanly") {
  // Dummies alone cannot exhaust the device (they are reclaimable), but
  // live data in both volumes together exceeds the usable area. Light cover
  // traffic keeps the public fill below any reclamation pressure.
  FtlConfig cfg = test_cfg(71);
  cfg.public_capacity_frac = 0.70;
  cfg.hidden_capacity_frac = 0.28;
  cfg.dummy_mean = 0.1;
  PdeFtl ftl = PdeFtl::format(FlashArray(cfg.geometry), kDecoyPw, kTruePw, cfg);

  ftl.unlock(kDecoyPw);
  for (uint32_t lba = 0; lba < ftl.public_capacity(); lba++)
    ftl.write_sector(lba, sector(lba, 1));
  CHECK(ftl.metrics().hidden_risk_pages == 0);
  ftl.commit_shutdown();

  ftl.unlock_hidden(kDecoyPw, kTruePw);
  const auto fill_hidden = [&] {
    for (uint32_t lba = 0; lba < ftl.hidden_capacity(); lba++)
      ftl.hidden_write_sector(lba, sector(lba, 2));
  };
  CHECK(code_of(fill_hidden) == Errc::DeviceFull);
  // the session remains usable for reads and holds its data
  CHECK(ftl.read_sector(0) == sector(0, 2));
  ftl.commit_shutdown();
}
