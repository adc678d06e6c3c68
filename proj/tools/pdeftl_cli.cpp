#include <unistd.h>

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <vector>
#include <sstream>
#include <string>

#include "pdeftl.h"

#if defined(__unix__) || defined(__APPLE__)
#include <termios.h>
#endif

namespace {

namespace fs = std::filesystem;

struct CliError {
  int status;
  std::string message;
};

[[noreturn]] void die(int status, const std::string& message) {
  throw CliError{status ? status : 1, message};
}

[[noreturn]] void die_api(int status) {
  die(status, std::string(pdeftl_status_name(status)) + ": " +
                  pdeftl_last_error_message());
}

void check(int status) {
  if (status != PDEFTL_OK) die_api(status);
}

/// Owned C string from the library.
struct LibString {
  char* ptr = nullptr;
  ~LibString() { pdeftl_string_free(ptr); }
  std::string str() const { return ptr ? ptr : ""; }
};

struct DeviceHandle {
  pdeftl_device* dev = nullptr;
  ~DeviceHandle() { pdeftl_close(dev); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(int(PDEFTL_E_IO_ERROR), "cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text))
    die(int(PDEFTL_E_IO_ERROR), "cannot write file: " + path);
}

/// Prompt on the controlling terminal with echo disabled. Only used when the
/// environment variable is absent and stdin is a terminal; passwords are
/// never accepted on the command line.
std::string prompt_password(const std::string& label) {
#if defined(__unix__) || defined(__APPLE__)
  if (!isatty(fileno(stdin)))
    die(int(PDEFTL_E_EMPTY_PASSWORD),
        "no terminal to prompt on; set the " + label + " environment variable");
  std::cerr << label << ": " << std::flush;
  termios old_state{};
  tcgetattr(fileno(stdin), &old_state);
  termios quiet = old_state;
  quiet.c_lflag &= ~tcflag_t(ECHO);
  tcsetattr(fileno(stdin), TCSANOW, &quiet);
  std::string pw;
  std::getline(std::cin, pw);
  tcsetattr(fileno(stdin), TCSANOW, &old_state);
  std::cerr << '\n';
  return pw;
#else
  die(int(PDEFTL_E_EMPTY_PASSWORD),
      "set the " + label + " environment variable");
#endif
}

std::string password_from(const char* env_name, bool required) {
  const char* value = std::getenv(env_name);
  if (value && *value) return value;
  if (!required) return "";
  return prompt_password(env_name);
}

std::string decoy_password() { return password_from("PDEFTL_DECOY_PW", true); }
std::string hidden_password(bool required) {
  return password_from("PDEFTL_HIDDEN_PW", required);
}

/// Config file text plus an optional seed override appended last, so the
/// override wins over any seed in the file.
std::string config_text(const std::string& config_path, const std::string& seed_key,
                        const std::string& seed_value) {
  std::string text = config_path.empty() ? "" : read_file(config_path);
  if (!seed_value.empty()) {
    if (!text.empty() && text.back() != '\n') text += '\n';
    text += seed_key + "=" + seed_value + "\n";
  }
  return text;
}

/// key=value or key,value lines, padded into aligned columns.
void print_pairs(const std::string& text, char sep, bool pretty) {
  if (!pretty) {
    std::cout << text;
    return;
  }
  std::istringstream in(text);
  std::string line;
  size_t width = 0;
  std::vector<std::pair<std::string, std::string>> rows;
  while (std::getline(in, line)) {
    const size_t pos = line.find(sep);
    if (pos == std::string::npos) continue;
    rows.emplace_back(line.substr(0, pos), line.substr(pos + 1));
    width = std::max(width, pos);
  }
  for (const auto& [key, value] : rows)
    std::cout << key << std::string(width - key.size() + 2, ' ') << value << '\n';
}

std::string metrics_sidecar(const std::string& image) { return image + ".metrics"; }

int cmd_format(const std::string& image, const std::string& config,
               const std::string& seed) {
  const std::string decoy = decoy_password();
  const std::string hidden = hidden_password(true);
  check(pdeftl_format_image(image.c_str(),
                            config_text(config, "master_seed", seed).c_str(),
                            decoy.c_str(), hidden.c_str()));
  return 0;
}

int cmd_run(const std::string& trace_path, const std::string& image,
            const std::string& config, const std::string& seed,
            const std::string& snapshot_dir, bool pretty) {
  const std::string trace = read_file(trace_path);
  const std::string decoy = decoy_password();
  const std::string hidden = hidden_password(false);

  if (!snapshot_dir.empty()) fs::create_directories(snapshot_dir);
  DeviceHandle h;
  check(pdeftl_open(image.c_str(), config_text(config, "master_seed", seed).c_str(),
                    &h.dev));
  LibString metrics;
  check(pdeftl_replay_trace(h.dev, trace.c_str(), decoy.c_str(),
                            hidden.empty() ? nullptr : hidden.c_str(),
                            snapshot_dir.empty() ? nullptr : snapshot_dir.c_str(),
                            &metrics.ptr));
  check(pdeftl_save(h.dev, image.c_str()));
  write_file(metrics_sidecar(image), metrics.str());
  print_pairs(metrics.str(), '=', pretty);
  return 0;
}

int cmd_snapshot(const std::string& out_path, const std::string& image,
                 const std::string& config) {
  DeviceHandle h;
  check(pdeftl_open(image.c_str(), config_text(config, "", "").c_str(), &h.dev));
  check(pdeftl_save_snapshot(h.dev, out_path.c_str()));
  return 0;
}

int cmd_diff(const std::string& a, const std::string& b, bool pretty) {
  LibString csv;
  uint64_t changed = 0;
  check(pdeftl_diff_snapshots(a.c_str(), b.c_str(), &csv.ptr, &changed));
  if (pretty) {
    std::cout << changed << " pages differ\n";
  } else {
    std::cout << csv.str();
  }
  return 0;
}

int cmd_experiment(const std::string& config_path, const std::string& seed,
                   const std::string& trials_out, bool pretty) {
  const std::string decoy = decoy_password();
  const std::string hidden = hidden_password(true);
  const std::string cfg = config_text(config_path, "experiment_seed", seed);
  LibString report, trials;
  check(pdeftl_run_experiment(cfg.c_str(), decoy.c_str(), hidden.c_str(),
                              &report.ptr, trials_out.empty() ? nullptr : &trials.ptr));
  if (!trials_out.empty()) write_file(trials_out, trials.str());
  print_pairs(report.str(), ',', pretty);
  return 0;
}

int cmd_metrics(const std::string& image, bool pretty) {
  const std::string path = metrics_sidecar(image);
  std::ifstream in(path, std::ios::binary);
  if (!in)
    die(int(PDEFTL_E_IO_ERROR),
        "no recorded metrics at " + path + "; run a trace first");
  std::ostringstream buf;
  buf << in.rdbuf();
  print_pairs(buf.str(), '=', pretty);
  return 0;
}

int cmd_recover(const std::string& image, const std::string& config,
                const std::string& seed, bool both, bool pretty) {
  const std::string decoy = decoy_password();
  const std::string hidden = both ? hidden_password(true) : "";
  DeviceHandle h;
  check(pdeftl_open(image.c_str(), config_text(config, "master_seed", seed).c_str(),
                    &h.dev));
  check(pdeftl_recover(h.dev, decoy.c_str(), both ? hidden.c_str() : nullptr));
  check(pdeftl_save(h.dev, image.c_str()));
  LibString metrics;
  check(pdeftl_metrics_text(h.dev, &metrics.ptr));
  write_file(metrics_sidecar(image), metrics.str());
  print_pairs("recovered=" + std::string(both ? "both" : "decoy") + "\n", '=', pretty);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plausibly-deniable FTL simulator"};
  app.require_subcommand(1);

  std::string image, config, seed, snapshot_dir, trials_out;
  bool pretty = false;
  app.add_option("--image", image, "device image file");
  app.add_option("--config", config, "key=value config file");
  app.add_option("--seed", seed, "override the master seed")
      ->check(CLI::Number);
  app.add_flag("--pretty", pretty, "human-readable output");

  auto* format = app.add_subcommand("format", "create a formatted device image");

  auto* run = app.add_subcommand("run", "replay a trace file against the image");
  std::string trace_path;
  run->add_option("scenario", trace_path, "trace file")->required();
  run->add_option("--snapshot-dir", snapshot_dir, "directory for SNAPSHOT files");

  auto* snapshot = app.add_subcommand("snapshot", "capture the image to a snapshot");
  std::string snap_out;
  snapshot->add_option("out", snap_out, "output snapshot file")->required();

  auto* diff = app.add_subcommand("diff", "compare two snapshot files");
  std::string diff_a, diff_b;
  diff->add_option("a", diff_a, "first snapshot")->required();
  diff->add_option("b", diff_b, "second snapshot")->required();

  auto* experiment = app.add_subcommand("experiment", "run a distinguisher experiment");
  std::string exp_config;
  experiment->add_option("config", exp_config, "experiment config file")->required();
  experiment->add_option("--trials-out", trials_out, "write per-trial features CSV");

  auto* metrics = app.add_subcommand("metrics", "print metrics from the last run");

  auto* recover = app.add_subcommand("recover", "rebuild mappings after a crash");
  bool recover_both = false;
  recover->add_flag("--both", recover_both, "recover the hidden volume too");

  CLI11_PARSE(app, argc, argv);

  auto need_image = [&] {
    if (image.empty()) die(int(PDEFTL_E_INVALID_ARGUMENT), "--image is required");
  };

  try {
    if (format->parsed()) {
      need_image();
      return cmd_format(image, config, seed);
    }
    if (run->parsed()) {
      need_image();
      return cmd_run(trace_path, image, config, seed, snapshot_dir, pretty);
    }
    if (snapshot->parsed()) {
      need_image();
      return cmd_snapshot(snap_out, image, config);
    }
    if (diff->parsed()) return cmd_diff(diff_a, diff_b, pretty);
    if (experiment->parsed()) return cmd_experiment(exp_config, seed, trials_out, pretty);
    if (metrics->parsed()) {
      need_image();
      return cmd_metrics(image, pretty);
    }
    if (recover->parsed()) {
      need_image();
      return cmd_recover(image, config, seed, recover_both, pretty);
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << '\n';
    return e.status;
  }
  return 0;
}
