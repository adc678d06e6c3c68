#include "pdeftl.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pdeftl/adversary.hpp"
#include "pdeftl/scenario.hpp"

using namespace pdeftl;

struct pdeftl_device {
  PdeFtl ftl;
  explicit pdeftl_device(PdeFtl f) : ftl(std::move(f)) {}
};

namespace {

thread_local std::string tls_error;

int set_error(int status, const std::string& message) {
  tls_error = message;
  return status;
}

/// Errc values map to C status codes by ordinal; the header pins the order.
int status_of(Errc e) { return int(e); }

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    tls_error.clear();
    return PDEFTL_OK;
  } catch (const Error& e) {
    return set_error(status_of(e.code()), e.what());
  } catch (const std::exception& e) {
    return set_error(PDEFTL_E_INTERNAL, e.what());
  } catch (...) {
    return set_error(PDEFTL_E_INTERNAL, "unknown failure");
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

FtlConfig config_from(const char* config_text) {
  if (!config_text || !*config_text) {
    FtlConfig cfg;
    cfg.validate();
    return cfg;
  }
  return FtlConfig::parse_text(config_text);
}

FlashSnapshot load_image(const char* path) {
  FlashSnapshot snap = FlashSnapshot::load(path);
  if (!snap.has_sidecar())
    fail(Errc::BadSnapshot, "device image lacks the wear sidecar");
  return snap;
}

std::string safe_snapshot_name(const std::string& name) {
  if (name.empty()) fail(Errc::TraceError, "snapshot name is empty");
  for (char c : name) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok)
      fail(Errc::TraceError, "snapshot name '" + name + "' has unsafe characters");
  }
  if (name.front() == '.') fail(Errc::TraceError, "snapshot name starts with '.'");
  return name;
}

}  // namespace

extern "C" {

const char* pdeftl_status_name(int status) {
  if (status == PDEFTL_E_INVALID_ARGUMENT) return "invalid_argument";
  if (status == PDEFTL_E_INTERNAL) return "internal";
  if (status >= 0 && status <= int(Errc::BadSnapshot)) return errc_name(Errc(status));
  return "unknown";
}

const char* pdeftl_last_error_message(void) { return tls_error.c_str(); }

void pdeftl_string_free(char* s) { std::free(s); }

int pdeftl_format_image(const char* image_path, const char* config_text,
                        const char* decoy_password, const char* hidden_password) {
  if (!image_path || !decoy_password || !hidden_password)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const FtlConfig cfg = config_from(config_text);
    PdeFtl ftl =
        PdeFtl::format(FlashArray(cfg.geometry), decoy_password, hidden_password, cfg);
    FlashSnapshot::capture(ftl.flash(), true).save(image_path);
  });
}

int pdeftl_open(const char* image_path, const char* config_text,
                pdeftl_device** out_device) {
  if (!image_path || !out_device)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  *out_device = nullptr;
  return guarded([&] {
    const FtlConfig cfg = config_from(config_text);
    PdeFtl ftl = PdeFtl::adopt(load_image(image_path).restore(), cfg);
    *out_device = new pdeftl_device(std::move(ftl));
  });
}

int pdeftl_save(pdeftl_device* device, const char* image_path) {
  if (!device || !image_path)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    if (device->ftl.mode() != Mode::Locked)
      fail(Errc::WrongMode, "saving an image requires a locked device");
    FlashSnapshot::capture(device->ftl.flash(), true).save(image_path);
  });
}

void pdeftl_close(pdeftl_device* device) { delete device; }

int pdeftl_unlock(pdeftl_device* device, const char* decoy_password) {
  if (!device || !decoy_password)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] { device->ftl.unlock(decoy_password); });
}

int pdeftl_unlock_hidden(pdeftl_device* device, const char* decoy_password,
                         const char* hidden_password) {
  if (!device || !decoy_password || !hidden_password)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] { device->ftl.unlock_hidden(decoy_password, hidden_password); });
}

int pdeftl_commit_shutdown(pdeftl_device* device) {
  if (!device) return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] { device->ftl.commit_shutdown(); });
}

int pdeftl_crash(pdeftl_device* device) {
  if (!device) return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] { device->ftl.crash(); });
}

int pdeftl_recover(pdeftl_device* device, const char* decoy_password,
                   const char* hidden_password) {
  if (!device || !decoy_password)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    device->ftl.recover(decoy_password,
                        hidden_password
                            ? std::optional<std::string>(hidden_password)
                            : std::nullopt);
  });
}

int pdeftl_write_sector(pdeftl_device* device, uint32_t lba, const uint8_t* data,
                        uint32_t data_len) {
  if (!device || !data) return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] { device->ftl.write_sector(lba, {data, data_len}); });
}

int pdeftl_hidden_write_sector(pdeftl_device* device, uint32_t lba,
                               const uint8_t* data, uint32_t data_len) {
  if (!device || !data) return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] { device->ftl.hidden_write_sector(lba, {data, data_len}); });
}

int pdeftl_read_sector(pdeftl_device* device, uint32_t lba, uint8_t* out,
                       uint32_t out_len) {
  if (!device || !out) return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    const Bytes data = device->ftl.read_sector(lba);
    if (data.size() != out_len)
      fail(Errc::LengthMismatch,
           "buffer holds " + std::to_string(out_len) + " bytes, page needs " +
               std::to_string(data.size()));
    std::memcpy(out, data.data(), data.size());
  });
}

int pdeftl_tick(pdeftl_device* device, uint32_t n) {
  if (!device) return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] { device->ftl.tick(n); });
}

int pdeftl_metrics_text(pdeftl_device* device, char** out_text) {
  if (!device || !out_text)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  *out_text = nullptr;
  return guarded([&] { *out_text = dup_string(device->ftl.metrics_text()); });
}

int pdeftl_save_snapshot(pdeftl_device* device, const char* snapshot_path) {
  if (!device || !snapshot_path)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  return guarded([&] { device->ftl.take_snapshot().save(snapshot_path); });
}

int pdeftl_replay_trace(pdeftl_device* device, const char* trace_text,
                        const char* decoy_password, const char* hidden_password,
                        const char* snapshot_dir, char** out_metrics_text) {
  if (!device || !trace_text || !decoy_password)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  if (out_metrics_text) *out_metrics_text = nullptr;
  return guarded([&] {
    const Scenario scenario = Scenario::parse_text(trace_text);
    const std::filesystem::path dir =
        (snapshot_dir && *snapshot_dir) ? snapshot_dir : ".";
    replay_trace(device->ftl, scenario, decoy_password,
                 hidden_password ? hidden_password : "",
                 [&dir](const std::string& name, const FlashSnapshot& snap) {
                   snap.save((dir / (safe_snapshot_name(name) + ".snap")).string());
                 });
    if (out_metrics_text) *out_metrics_text = dup_string(device->ftl.metrics_text());
  });
}

const char* pdeftl_trace_format(void) {
  return "SESSION public|hidden\n"
         "W <lba> <hexdata|seed>\n"
         "HW <lba> <hexdata|seed>\n"
         "TICK <n>\n"
         "IDLE\n"
         "SHUTDOWN\n"
         "SNAPSHOT <name>\n"
         "CRASH\n"
         "RECOVER decoy|both\n";
}

int pdeftl_diff_snapshots(const char* path_a, const char* path_b, char** out_csv,
                          uint64_t* out_changed_pages) {
  if (!path_a || !path_b || !out_csv)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  *out_csv = nullptr;
  return guarded([&] {
    const FlashSnapshot a = FlashSnapshot::load(path_a);
    const FlashSnapshot b = FlashSnapshot::load(path_b);
    const DiffReport rep = diff_snapshots(a, b);
    *out_csv = dup_string(rep.to_csv());
    if (out_changed_pages) *out_changed_pages = rep.changes.size();
  });
}

int pdeftl_run_experiment(const char* config_text, const char* decoy_password,
                          const char* hidden_password, char** out_report_csv,
                          char** out_trials_csv) {
  if (!config_text || !decoy_password || !hidden_password || !out_report_csv)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  *out_report_csv = nullptr;
  if (out_trials_csv) *out_trials_csv = nullptr;
  return guarded([&] {
    ExperimentConfig cfg = parse_experiment_config(config_text);
    cfg.decoy_password = decoy_password;
    cfg.hidden_password = hidden_password;
    const ExperimentResult result = run_experiment(cfg);
    *out_report_csv = dup_string(result.report.to_csv());
    if (out_trials_csv) *out_trials_csv = dup_string(result.trials_csv());
  });
}

int pdeftl_randomness_battery(const char* snapshot_path, const char* regions_text,
                              double alpha, char** out_csv, int* out_all_pass) {
  if (!snapshot_path || !out_csv)
    return set_error(PDEFTL_E_INVALID_ARGUMENT, "null argument");
  *out_csv = nullptr;
  return guarded([&] {
    const FlashSnapshot snap = FlashSnapshot::load(snapshot_path);
    std::vector<Region> regions;
    if (regions_text && *regions_text) {
      std::istringstream in(regions_text);
      std::string line;
      int lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        Region r;
        if (!(ls >> r.first_page)) continue;  // blank line
        if (!(ls >> r.page_count))
          fail(Errc::BadConfig,
               "region line " + std::to_string(lineno) + ": expected two integers");
        regions.push_back(r);
      }
    }
    if (regions.empty()) regions.push_back({0, snap.geometry().total_pages()});
    const BatteryReport rep = randomness_battery(snap, regions, alpha);
    *out_csv = dup_string(rep.to_csv());
    if (out_all_pass) *out_all_pass = rep.all_pass ? 1 : 0;
  });
}

}  // extern "C"
