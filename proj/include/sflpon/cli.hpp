#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "sflpon/config.hpp"
#include "sflpon/orchestrator.hpp"
#include "sflpon/reporting.hpp"

// Command implementations behind tools/sflpon. Kept in the library so tests
// can drive them in-process. Exit codes: 0 ok, 1 runtime failure, 2 bad
// configuration. Diagnostics go to `log`; data only goes to files.

namespace sflpon::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitConfig = 2;

inline constexpr const char* kOutDirEnv = "SFLPON_OUT_DIR";

// Flag values override the config file; unset flags leave it untouched.
struct Options {
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<Mode> mode;
  std::optional<int> clients;
  std::optional<int> rounds;
  std::optional<int> workers;
};

inline std::filesystem::path resolve_out_dir(const Options& opts) {
  if (opts.out_dir) return *opts.out_dir;
  if (const char* env = std::getenv(kOutDirEnv); env != nullptr && *env != '\0') return env;
  return "out";
}

/// Loads the config file (or defaults) and applies flag overrides. Returns
/// nullopt after logging when the configuration is unusable.
inline std::optional<ExperimentConfig> resolve_config(const Options& opts, std::ostream& log) {
  try {
    ExperimentConfig cfg;
    if (opts.config_path) {
      if (!std::filesystem::exists(*opts.config_path)) {
        log << "error: config file not found: " << *opts.config_path << "\n";
        return std::nullopt;
      }
      cfg = load_config(*opts.config_path);
    }
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.mode) cfg.mode = *opts.mode;
    if (opts.clients) cfg.n_selected = *opts.clients;
    if (opts.rounds) cfg.n_rounds = *opts.rounds;
    if (opts.workers) cfg.workers = *opts.workers;
    cfg.validate();
    return cfg;
  } catch (const Error& e) {
    log << "error: invalid configuration: " << e.what() << "\n";
    return std::nullopt;
  }
}

template <typename Body>
int guarded(std::ostream& log, Body&& body) {
  try {
    body();
    return kExitOk;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

/// Writes records.csv and summary.json.
inline int cmd_run(const Options& opts, std::ostream& log) {
  const auto cfg = resolve_config(opts, log);
  if (!cfg) return kExitConfig;
  const auto out = resolve_out_dir(opts);
  return guarded(log, [&] {
    log << "running " << cfg->n_rounds << " " << to_string(cfg->mode) << " rounds, N=" << cfg->n_selected << "\n";
    const auto report = make_report(*cfg, run_experiment(*cfg));
    write_csv(report.records, out / "records.csv");
    write_json_summary(report, out / "summary.json", "records.csv");
    log << "final accuracy " << format_number(report.summary.final_accuracy) << ", mean involved "
        << format_number(report.summary.mean_involved) << "\n";
  });
}

/// Writes records_classical.csv, records_sfl.csv and comparison.json.
inline int cmd_compare(const Options& opts, std::ostream& log) {
  const auto cfg = resolve_config(opts, log);
  if (!cfg) return kExitConfig;
  const auto out = resolve_out_dir(opts);
  return guarded(log, [&] {
    log << "comparing modes over " << cfg->n_rounds << " rounds, N=" << cfg->n_selected << "\n";
    const auto cmp = compare_modes(*cfg);
    write_csv(cmp.classical, out / "records_classical.csv");
    write_csv(cmp.sfl, out / "records_sfl.csv");
    write_file_atomic(out / "comparison.json",
                      comparison_json_text(*cfg, cmp, "records_classical.csv", "records_sfl.csv"));
    log << "mean saving " << format_number(cmp.summary.mean_saving) << ", mean involved gap "
        << format_number(cmp.summary.mean_involved_gap) << "\n";
  });
}

/// Runs compare_modes for each N and writes one aggregate sweep.csv.
inline int cmd_sweep(const Options& opts, const std::vector<int>& n_values, std::ostream& log) {
  const auto base = resolve_config(opts, log);
  if (!base) return kExitConfig;
  if (n_values.empty()) {
    log << "error: invalid configuration: sweep needs at least one N value\n";
    return kExitConfig;
  }
  std::vector<ExperimentConfig> configs;
  for (int n : n_values) {
    ExperimentConfig cfg = *base;
    cfg.n_selected = n;
    try {
      cfg.validate();
    } catch (const Error& e) {
      log << "error: invalid configuration: N=" << n << ": " << e.what() << "\n";
      return kExitConfig;
    }
    configs.push_back(cfg);
  }
  const auto out = resolve_out_dir(opts);
  return guarded(log, [&] {
    std::vector<SweepRow> rows;
    for (const auto& cfg : configs) {
      log << "sweep N=" << cfg.n_selected << "\n";
      const auto cmp = compare_modes(cfg);
      for (const auto* records : {&cmp.classical, &cmp.sfl}) {
        const auto s = summarize(*records);
        rows.push_back(SweepRow{cfg.n_selected, records->front().mode, s.mean_upstream_bits, s.mean_involved,
                                s.final_accuracy});
      }
    }
    write_file_atomic(out / "sweep.csv", sweep_to_csv(rows));
  });
}

}  // namespace sflpon::cli
