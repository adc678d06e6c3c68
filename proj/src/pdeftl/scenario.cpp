#include "scenario.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "rng.hpp"

namespace pdeftl {

namespace {

[[noreturn]] void trace_fail(int lineno, const std::string& what) {
  fail(Errc::TraceError,
       "trace line " + std::to_string(lineno) + ": " + what);
}

bool is_hex_payload(const std::string& tok) {
  if (tok.size() < 2 || tok.size() % 2 != 0) return false;
  bool any_alpha = false;
  for (char c : tok) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) return false;
    if (!std::isdigit(static_cast<unsigned char>(c))) any_alpha = true;
  }
  // Digits-only tokens are content seeds; hex payloads need a letter.
  return any_alpha;
}

Bytes parse_hex(const std::string& tok) {
  Bytes out(tok.size() / 2);
  auto nib = [](char c) -> uint8_t {
    if (c >= '0' && c <= '9') return uint8_t(c - '0');
    if (c >= 'a' && c <= 'f') return uint8_t(c - 'a' + 10);
    return uint8_t(c - 'A' + 10);
  };
  for (size_t i = 0; i < out.size(); i++)
    out[i] = uint8_t(nib(tok[2 * i]) << 4 | nib(tok[2 * i + 1]));
  return out;
}

std::string hex_of(const Bytes& data) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (uint8_t b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

Bytes seeded_content(uint64_t seed, uint32_t page_size) {
  Rng rng = Rng::substream(seed, "trace-content");
  return rng.bytes(page_size);
}

}  // namespace

const char* variant_name(Variant v) {
  return v == Variant::WithHidden ? "with_hidden" : "without_hidden";
}

std::string Scenario::to_text() const {
  std::ostringstream out;
  for (const TraceStep& s : steps) {
    switch (s.op) {
      case TraceOp::SessionPublic: out << "SESSION public\n"; break;
      case TraceOp::SessionHidden: out << "SESSION hidden\n"; break;
      case TraceOp::Write:
      case TraceOp::HiddenWrite:
        out << (s.op == TraceOp::Write ? "W " : "HW ") << s.lba << ' ';
        if (!s.data.empty()) out << hex_of(s.data);
        else out << s.arg;
        out << '\n';
        break;
      case TraceOp::Tick: out << "TICK " << s.arg << '\n'; break;
      case TraceOp::Idle: out << "IDLE\n"; break;
      case TraceOp::Shutdown: out << "SHUTDOWN\n"; break;
      case TraceOp::Snapshot: out << "SNAPSHOT " << s.name << '\n'; break;
      case TraceOp::Crash: out << "CRASH\n"; break;
      case TraceOp::Recover:
        out << "RECOVER " << (s.recover_both ? "both" : "decoy") << '\n';
        break;
    }
  }
  return out.str();
}

Scenario Scenario::parse_text(const std::string& text) {
  Scenario sc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string op;
    if (!(ls >> op)) continue;

    TraceStep step;
    std::string a, b;
    if (op == "SESSION") {
      if (!(ls >> a)) trace_fail(lineno, "SESSION needs public|hidden");
      if (a == "public") step.op = TraceOp::SessionPublic;
      else if (a == "hidden") step.op = TraceOp::SessionHidden;
      else trace_fail(lineno, "unknown session kind '" + a + "'");
    } else if (op == "W" || op == "HW") {
      step.op = op == "W" ? TraceOp::Write : TraceOp::HiddenWrite;
      if (!(ls >> a >> b)) trace_fail(lineno, op + " needs <lba> <hexdata|seed>");
      try {
        step.lba = uint32_t(std::stoul(a));
      } catch (...) {
        trace_fail(lineno, "bad lba '" + a + "'");
      }
      if (is_hex_payload(b)) {
        step.data = parse_hex(b);
      } else {
        try {
          step.arg = std::stoull(b);
        } catch (...) {
          trace_fail(lineno, "payload is neither hex nor a seed: '" + b + "'");
        }
      }
    } else if (op == "TICK") {
      step.op = TraceOp::Tick;
      if (!(ls >> a)) trace_fail(lineno, "TICK needs a count");
      try {
        step.arg = std::stoull(a);
      } catch (...) {
        trace_fail(lineno, "bad tick count '" + a + "'");
      }
    } else if (op == "IDLE") {
      step.op = TraceOp::Idle;
    } else if (op == "SHUTDOWN") {
      step.op = TraceOp::Shutdown;
    } else if (op == "SNAPSHOT") {
      step.op = TraceOp::Snapshot;
      if (!(ls >> step.name)) trace_fail(lineno, "SNAPSHOT needs a name");
    } else if (op == "CRASH") {
      step.op = TraceOp::Crash;
    } else if (op == "RECOVER") {
      step.op = TraceOp::Recover;
      if (!(ls >> a)) trace_fail(lineno, "RECOVER needs decoy|both");
      if (a == "both") step.recover_both = true;
      else if (a == "decoy") step.recover_both = false;
      else trace_fail(lineno, "unknown recover keys '" + a + "'");
    } else {
      trace_fail(lineno, "unknown op '" + op + "'");
    }
    std::string extra;
    if (ls >> extra) trace_fail(lineno, "trailing token '" + extra + "'");
    sc.steps.push_back(std::move(step));
  }
  return sc;
}

Scenario Scenario::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str());
}

bool Scenario::has_hidden_ops() const {
  for (const TraceStep& s : steps)
    if (s.op == TraceOp::SessionHidden || s.op == TraceOp::HiddenWrite)
      return true;
  return false;
}

Scenario Scenario::without_hidden(uint32_t ticks_per_hidden_write) const {
  Scenario out;
  out.steps.reserve(steps.size());
  for (const TraceStep& s : steps) {
    if (s.op == TraceOp::SessionHidden) {
      TraceStep t;
      t.op = TraceOp::SessionPublic;
      out.steps.push_back(t);
    } else if (s.op == TraceOp::HiddenWrite) {
      TraceStep t;
      t.op = TraceOp::Tick;
      t.arg = ticks_per_hidden_write;
      out.steps.push_back(t);
    } else {
      out.steps.push_back(s);
    }
  }
  return out;
}

Scenario build_scenario(const ScenarioParams& p, uint64_t seed) {
  Rng lbas = Rng::substream(seed, "scenario-lba");
  Rng seeds = Rng::substream(seed, "scenario-content");

  Scenario sc;
  auto snapshot = [&](uint32_t i) {
    TraceStep s;
    s.op = TraceOp::Snapshot;
    s.name = "s" + std::to_string(i);
    sc.steps.push_back(s);
  };
  auto push = [&](TraceOp op) {
    TraceStep s;
    s.op = op;
    sc.steps.push_back(s);
  };

  snapshot(0);
  const uint32_t period = std::max<uint32_t>(1, p.hidden_session_period);
  for (uint32_t i = 0; i < p.intervals; i++) {
    // Hidden work leads and public traffic closes the interval, so the last
    // maintenance before each snapshot is the same public write path in
    // every variant of the trace.
    if (p.hidden_writes_per_interval > 0 && i % period == period - 1) {
      push(TraceOp::SessionHidden);
      for (uint32_t w = 0; w < p.hidden_writes_per_interval; w++) {
        TraceStep s;
        s.op = TraceOp::HiddenWrite;
        s.lba = uint32_t(lbas.below(std::max<uint32_t>(1, p.hidden_lba_span)));
        s.arg = seeds.next();
        sc.steps.push_back(s);
      }
      push(TraceOp::Shutdown);
    }

    push(TraceOp::SessionPublic);
    uint32_t n = p.public_writes_per_interval;
    if (p.public_writes_jitter > 0.0) {
      const double j = std::min(p.public_writes_jitter, 1.0);
      const double lo = double(n) * (1.0 - j);
      const uint64_t width = uint64_t(double(n) * 2.0 * j) + 1;
      n = uint32_t(lo) + uint32_t(lbas.below(width));
    }
    const uint32_t tick_every =
        p.ticks_per_interval > 0 ? std::max<uint32_t>(1, n / p.ticks_per_interval) : 0;
    for (uint32_t w = 0; w < n; w++) {
      TraceStep s;
      s.op = TraceOp::Write;
      s.lba = uint32_t(lbas.below(std::max<uint32_t>(1, p.public_lba_span)));
      s.arg = seeds.next();
      sc.steps.push_back(s);
      if (tick_every > 0 && (w + 1) % tick_every == 0) {
        TraceStep t;
        t.op = TraceOp::Tick;
        t.arg = 1;
        sc.steps.push_back(t);
      }
    }
    push(TraceOp::Shutdown);
    snapshot(i + 1);
  }
  return sc;
}

void replay_trace(
    PdeFtl& ftl, const Scenario& scenario, const std::string& decoy_password,
    const std::string& hidden_password,
    const std::function<void(const std::string&, const FlashSnapshot&)>& on_snapshot) {
  const FtlConfig& cfg = ftl.config();

  enum class S { Locked, Public, Hidden } state = S::Locked;
  int stepno = 0;
  auto step_fail = [&stepno](const std::string& what) {
    fail(Errc::TraceError, "step " + std::to_string(stepno) + ": " + what);
  };
  for (const TraceStep& step : scenario.steps) {
    ++stepno;
    switch (step.op) {
      case TraceOp::SessionPublic:
        if (state != S::Locked) step_fail("SESSION while a session is open");
        ftl.unlock(decoy_password);
        state = S::Public;
        break;
      case TraceOp::SessionHidden:
        if (state != S::Locked) step_fail("SESSION while a session is open");
        ftl.unlock_hidden(decoy_password, hidden_password);
        state = S::Hidden;
        break;
      case TraceOp::Write: {
        if (state != S::Public) step_fail("W outside a public session");
        Bytes data = step.data;
        if (data.empty()) data = seeded_content(step.arg, cfg.geometry.page_size);
        data.resize(cfg.geometry.page_size, 0);
        ftl.write_sector(step.lba, data);
        break;
      }
      case TraceOp::HiddenWrite: {
        if (state != S::Hidden) step_fail("HW outside a hidden session");
        Bytes data = step.data;
        if (data.empty()) data = seeded_content(step.arg, cfg.geometry.page_size);
        data.resize(cfg.geometry.page_size, 0);
        ftl.hidden_write_sector(step.lba, data);
        break;
      }
      case TraceOp::Tick:
        if (state == S::Locked) step_fail("TICK while locked");
        ftl.tick(step.arg);
        break;
      case TraceOp::Idle:
        if (state == S::Locked) step_fail("IDLE while locked");
        ftl.tick(cfg.idle_threshold);
        break;
      case TraceOp::Shutdown:
        if (state == S::Locked) step_fail("SHUTDOWN while locked");
        ftl.commit_shutdown();
        state = S::Locked;
        break;
      case TraceOp::Snapshot:
        if (state != S::Locked)
          step_fail("SNAPSHOT requires a locked device");
        if (on_snapshot) on_snapshot(step.name, ftl.take_snapshot());
        break;
      case TraceOp::Crash:
        if (state == S::Locked) step_fail("CRASH while locked");
        ftl.crash();
        state = S::Locked;
        break;
      case TraceOp::Recover:
        if (state != S::Locked) step_fail("RECOVER requires a locked device");
        ftl.recover(decoy_password,
                    step.recover_both ? std::optional<std::string>(hidden_password)
                                      : std::nullopt);
        break;
    }
  }
}

RunResult run_scenario(const FtlConfig& cfg, const Scenario& scenario,
                       const std::string& decoy_password,
                       const std::string& hidden_password) {
  PdeFtl ftl =
      PdeFtl::format(FlashArray(cfg.geometry), decoy_password, hidden_password, cfg);
  RunResult result;
  replay_trace(ftl, scenario, decoy_password, hidden_password,
               [&result](const std::string& name, const FlashSnapshot& snap) {
                 result.snapshots.emplace_back(name, snap);
               });
  result.metrics = ftl.metrics();
  result.events_csv = ftl.events_csv();
  return result;
}

}  // namespace pdeftl
