#include <doctest.h>

#include <functional>

#include "pdeftl/scenario.hpp"

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

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("trace text round trip") {
  const std::string text =
      "SESSION public\n"
      "W 3 deadbeef\n"
      "W 4 12345\n"
      "TICK 7\n"
      "IDLE\n"
      "SHUTDOWN\n"
      "SESSION hidden\n"
      "HW 1 0abc\n"
      "SHUTDOWN\n"
      "SNAPSHOT s0\n"
      "CRASH\n"  // unreachable at run time from Locked, but parseable
      "RECOVER both\n"
      "RECOVER decoy\n";
  const Scenario sc = Scenario::parse_text(text);
  REQUIRE(sc.steps.size() == 13);
  CHECK(sc.steps[0].op == TraceOp::SessionPublic);
  CHECK(sc.steps[1].op == TraceOp::Write);
  CHECK(sc.steps[1].lba == 3);
  CHECK(sc.steps[1].data == Bytes{0xde, 0xad, 0xbe, 0xef});
  CHECK(sc.steps[2].data.empty());
  CHECK(sc.steps[2].arg == 12345);
  CHECK(sc.steps[3].arg == 7);
  CHECK(sc.steps[7].op == TraceOp::HiddenWrite);
  CHECK(sc.steps[7].data == Bytes{0x0a, 0xbc});
  CHECK(sc.steps[9].name == "s0");
  CHECK(sc.steps[11].recover_both);
  CHECK_FALSE(sc.steps[12].recover_both);

  // to_text is a faithful inverse modulo comments and blank lines.
  const Scenario again = Scenario::parse_text(sc.to_text());
  CHECK(again.to_text() == sc.to_text());
  REQUIRE(again.steps.size() == sc.steps.size());
  for (size_t i = 0; i < sc.steps.size(); i++) {
    CHECK(again.steps[i].op == sc.steps[i].op);
    CHECK(again.steps[i].lba == sc.steps[i].lba);
    CHECK(again.steps[i].arg == sc.steps[i].arg);
    CHECK(again.steps[i].data == sc.steps[i].data);
    CHECK(again.steps[i].name == sc.steps[i].name);
    CHECK(again.steps[i].recover_both == sc.steps[i].recover_both);
  }
}

TEST_CASE("trace parse errors carry line numbers") {
  CHECK(code_of([] { (void)Scenario::parse_text("BOGUS\n"); }) == Errc::TraceError);
  CHECK(error_text([] { (void)Scenario::parse_text("\n\nW 1\n"); }).find("line 3") !=
        std::string::npos);
  CHECK(code_of([] { (void)Scenario::parse_text("SESSION nobody\n"); }) ==
        Errc::TraceError);
  CHECK(code_of([] { (void)Scenario::parse_text("W x 12\n"); }) == Errc::TraceError);
  CHECK(code_of([] { (void)Scenario::parse_text("SNAPSHOT\n"); }) == Errc::TraceError);
  CHECK(code_of([] { (void)Scenario::parse_text("RECOVER all\n"); }) ==
        Errc::TraceError);
  CHECK(code_of([] { (void)Scenario::parse_text("IDLE now\n"); }) == Errc::TraceError);
  // Odd-length hex is not a payload and not a number.
  CHECK(code_of([] { (void)Scenario::parse_text("W 1 abc\n"); }) == Errc::TraceError);
  // Comments and blank lines are fine.
  CHECK(code_of([] {
          (void)Scenario::parse_text("# header\n\nSESSION public  # open\n");
        }) == Errc::Ok);
}

TEST_CASE("generated scenarios are deterministic and well formed") {
  ScenarioParams p;
  const Scenario a = build_scenario(p, 42);
  const Scenario b = build_scenario(p, 42);
  const Scenario c = build_scenario(p, 43);
  CHECK(a.to_text() == b.to_text());
  CHECK(a.to_text() != c.to_text());
  CHECK(a.has_hidden_ops());

  uint32_t snapshots = 0, writes = 0, hidden_writes = 0;
  for (const TraceStep& s : a.steps) {
    if (s.op == TraceOp::Snapshot) snapshots++;
    if (s.op == TraceOp::Write) writes++;
    if (s.op == TraceOp::HiddenWrite) hidden_writes++;
  }
  CHECK(snapshots == p.intervals + 1);
  CHECK(writes == p.intervals * p.public_writes_per_interval);
  CHECK(hidden_writes == p.intervals * p.hidden_writes_per_interval);

  // Round trip through text preserves the generated trace.
  CHECK(Scenario::parse_text(a.to_text()).to_text() == a.to_text());
}

TEST_CASE("without_hidden keeps the public sub-trace and snapshot schedule") {
  ScenarioParams p;
  const Scenario with = build_scenario(p, 7);
  const Scenario without = with.without_hidden(p.idle_ticks_per_hidden_write);
  CHECK_FALSE(without.has_hidden_ops());
  REQUIRE(without.steps.size() == with.steps.size());

  uint64_t filler_ticks = 0;
  for (size_t i = 0; i < with.steps.size(); i++) {
    const TraceStep& w = with.steps[i];
    const TraceStep& o = without.steps[i];
    if (w.op == TraceOp::SessionHidden) {
      CHECK(o.op == TraceOp::SessionPublic);
    } else if (w.op == TraceOp::HiddenWrite) {
      CHECK(o.op == TraceOp::Tick);
      filler_ticks += o.arg;
    } else {
      CHECK(o.op == w.op);
      CHECK(o.lba == w.lba);
      CHECK(o.arg == w.arg);
      CHECK(o.data == w.data);
      CHECK(o.name == w.name);
    }
  }
  CHECK(filler_ticks == uint64_t(p.intervals) * p.hidden_writes_per_interval *
                            p.idle_ticks_per_hidden_write);
}

TEST_CASE("run_scenario is deterministic and snapshots at the right points") {
  const FtlConfig cfg = test_cfg(5);
  ScenarioParams p;
  p.intervals = 2;
  p.public_writes_per_interval = 20;
  p.hidden_writes_per_interval = 8;
  p.public_lba_span = 60;
  p.hidden_lba_span = 30;
  const Scenario sc = build_scenario(p, 11);

  const RunResult r1 = run_scenario(cfg, sc, kDecoyPw, kTruePw);
  const RunResult r2 = run_scenario(cfg, sc, kDecoyPw, kTruePw);
  REQUIRE(r1.snapshots.size() == p.intervals + 1);
  CHECK(r1.snapshots[0].first == "s0");
  CHECK(r1.snapshots[2].first == "s2");
  for (size_t i = 0; i < r1.snapshots.size(); i++) {
    CHECK(r1.snapshots[i].second.serialize() == r2.snapshots[i].second.serialize());
  }
  CHECK(r1.metrics.logical_public_writes ==
        uint64_t(p.intervals) * p.public_writes_per_interval);
  CHECK(r1.metrics.logical_hidden_writes ==
        uint64_t(p.intervals) * p.hidden_writes_per_interval);
  CHECK(r1.events_csv == r2.events_csv);

  // A different FTL seed changes placement, hence the snapshot bytes.
  const RunResult r3 = run_scenario(test_cfg(6), sc, kDecoyPw, kTruePw);
  CHECK(r1.snapshots[1].second.serialize() != r3.snapshots[1].second.serialize());
}

TEST_CASE("run_scenario enforces trace order") {
  const FtlConfig cfg = test_cfg();
  auto run_text = [&](const std::string& text) {
    return code_of([&] {
      (void)run_scenario(cfg, Scenario::parse_text(text), kDecoyPw, kTruePw);
    });
  };
  CHECK(run_text("W 0 1\n") == Errc::TraceError);
  CHECK(run_text("SESSION public\nHW 0 1\n") == Errc::TraceError);
  CHECK(run_text("SESSION hidden\nW 0 1\n") == Errc::TraceError);
  CHECK(run_text("SESSION public\nSESSION hidden\n") == Errc::TraceError);
  CHECK(run_text("TICK 1\n") == Errc::TraceError);
  CHECK(run_text("SHUTDOWN\n") == Errc::TraceError);
  CHECK(run_text("SESSION public\nSNAPSHOT s\n") == Errc::TraceError);
  CHECK(run_text("CRASH\n") == Errc::TraceError);
  CHECK(run_text("SESSION public\nRECOVER decoy\n") == Errc::TraceError);
  CHECK(run_text("SESSION public\nSHUTDOWN\nSNAPSHOT s\n") == Errc::Ok);
}

TEST_CASE("run_scenario crash and recover round trip") {
  const FtlConfig cfg = test_cfg(9);
  const std::string text =
      "SESSION public\n"
      "W 0 100\n"
      "W 1 101\n"
      "SHUTDOWN\n"
      "SESSION hidden\n"
      "HW 0 200\n"
      "CRASH\n"
      "RECOVER both\n"
      "SNAPSHOT after\n";
  const RunResult r = run_scenario(cfg, Scenario::parse_text(text), kDecoyPw, kTruePw);
  REQUIRE(r.snapshots.size() == 1);
  CHECK(r.metrics.recover_count == 1);

  // Decoy-only recovery of the same trace also reaches a locked snapshot.
  const std::string decoy_text =
      "SESSION public\n"
      "W 0 100\n"
      "CRASH\n"
      "RECOVER decoy\n"
      "SNAPSHOT after\n";
  const RunResult d =
      run_scenario(cfg, Scenario::parse_text(decoy_text), kDecoyPw, kTruePw);
  CHECK(d.snapshots.size() == 1);
}

TEST_CASE("explicit payloads are honored and padded") {
  const FtlConfig cfg = test_cfg(3);
  // Short hex payload pads with zeros to the page size; the same trace with
  // the same payload replays to identical snapshots.
  const std::string text =
      "SESSION public\n"
      "W 5 deadbeef\n"
      "SHUTDOWN\n"
      "SNAPSHOT s\n";
  const RunResult a = run_scenario(cfg, Scenario::parse_text(text), kDecoyPw, kTruePw);
  const RunResult b = run_scenario(cfg, Scenario::parse_text(text), kDecoyPw, kTruePw);
  CHECK(a.snapshots[0].second.serialize() == b.snapshots[0].second.serialize());
}
