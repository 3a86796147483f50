#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "sflpon/config.hpp"
#include "sflpon/orchestrator.hpp"

// On-disk outputs. Files contain no timestamps or host details, and numbers
// are rendered with a fixed format, so identical runs give identical bytes.

namespace sflpon {

inline constexpr const char* kRecordsCsvHeader =
    "round,mode,n_selected,n_involved,upstream_bits,saving_fraction,accuracy,"
    "t_total_min_s,t_total_mean_s,t_total_max_s";

inline constexpr const char* kSweepCsvHeader = "N,mode,mean_upstream_bits,mean_involved,final_accuracy";

/// 9 significant digits, shortest form ("%.9g").
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// Writes via a sibling temp file and a rename so readers never see a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline std::string records_to_csv(const std::vector<RoundRecord>& records) {
  std::string out = kRecordsCsvHeader;
  out += '\n';
  for (const auto& r : records) {
    out += std::to_string(r.round) + ',' + to_string(r.mode) + ',' + std::to_string(r.n_selected) + ',' +
           std::to_string(r.n_involved) + ',' + format_number(r.upstream_bits) + ',' +
           format_number(r.saving_fraction) + ',' + format_number(r.accuracy) + ',' +
           format_number(r.t_total_min_s) + ',' + format_number(r.t_total_mean_s) + ',' +
           format_number(r.t_total_max_s) + '\n';
  }
  return out;
}

inline void write_csv(const std::vector<RoundRecord>& records, const std::filesystem::path& path) {
  write_file_atomic(path, records_to_csv(records));
}

/// Parses a records CSV. Fields absent from the file (round duration,
/// k_total) come back zeroed.
inline std::vector<RoundRecord> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kRecordsCsvHeader) {
    throw Error(ErrorCode::IoError, path.string() + ": missing or unexpected header");
  }
  std::vector<RoundRecord> out;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    if (cells.size() != 10) {
      throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) + ": expected 10 columns");
    }
    const auto mode = parse_mode(cells[1]);
    if (!mode) throw Error(ErrorCode::IoError, path.string() + ":" + std::to_string(line_no) + ": bad mode");
    RoundRecord r;
    r.round = std::stoi(cells[0]);
    r.mode = *mode;
    r.n_selected = std::stoi(cells[2]);
    r.n_involved = std::stoi(cells[3]);
    r.upstream_bits = std::stod(cells[4]);
    r.saving_fraction = std::stod(cells[5]);
    r.accuracy = std::stod(cells[6]);
    r.t_total_min_s = std::stod(cells[7]);
    r.t_total_mean_s = std::stod(cells[8]);
    r.t_total_max_s = std::stod(cells[9]);
    out.push_back(r);
  }
  return out;
}

struct ReportSummary {
  double mean_involved = 0.0;
  int min_involved = 0;
  int max_involved = 0;
  double mean_upstream_bits = 0.0;
  double final_accuracy = 0.0;
  double best_accuracy = 0.0;
  double total_simulated_time_s = 0.0;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<RoundRecord> records;
  ReportSummary summary;
};

inline ReportSummary summarize(const std::vector<RoundRecord>& records) {
  ReportSummary s;
  if (records.empty()) return s;
  s.min_involved = std::numeric_limits<int>::max();
  double involved = 0.0;
  double bits = 0.0;
  for (const auto& r : records) {
    involved += r.n_involved;
    bits += r.upstream_bits;
    s.min_involved = std::min(s.min_involved, r.n_involved);
    s.max_involved = std::max(s.max_involved, r.n_involved);
    s.best_accuracy = std::max(s.best_accuracy, r.accuracy);
    s.total_simulated_time_s += r.round_duration_s;
  }
  const auto n = static_cast<double>(records.size());
  s.mean_involved = involved / n;
  s.mean_upstream_bits = bits / n;
  s.final_accuracy = records.back().accuracy;
  return s;
}

inline ExperimentReport make_report(const ExperimentConfig& cfg, std::vector<RoundRecord> records) {
  ExperimentReport report{cfg, std::move(records), {}};
  report.summary = summarize(report.records);
  return report;
}

inline ordered_json to_json(const ReportSummary& s) {
  ordered_json j;
  j["mean_involved"] = s.mean_involved;
  j["min_involved"] = s.min_involved;
  j["max_involved"] = s.max_involved;
  j["mean_upstream_bits"] = s.mean_upstream_bits;
  j["final_accuracy"] = s.final_accuracy;
  j["best_accuracy"] = s.best_accuracy;
  j["total_simulated_time_s"] = s.total_simulated_time_s;
  return j;
}

inline std::string summary_json_text(const ExperimentReport& report, const std::string& records_path) {
  ordered_json j;
  j["config"] = to_json(report.config);
  j["records_path"] = records_path;
  j["summary"] = to_json(report.summary);
  return j.dump(2) + "\n";
}

/// records_path is stored as given (callers pass a name relative to the
/// summary's directory to keep outputs relocatable).
inline void write_json_summary(const ExperimentReport& report, const std::filesystem::path& path,
                               const std::string& records_path) {
  write_file_atomic(path, summary_json_text(report, records_path));
}

inline std::string comparison_json_text(const ExperimentConfig& cfg, const Comparison& cmp,
                                        const std::string& classical_path, const std::string& sfl_path) {
  ordered_json j;
  j["config"] = to_json(cfg);
  j["classical_records_path"] = classical_path;
  j["sfl_records_path"] = sfl_path;
  ordered_json summary;
  summary["mean_saving"] = cmp.summary.mean_saving;
  summary["mean_involved_gap"] = cmp.summary.mean_involved_gap;
  summary["final_accuracy_gap"] = cmp.summary.final_accuracy_gap;
  summary["classical"] = to_json(summarize(cmp.classical));
  summary["sfl"] = to_json(summarize(cmp.sfl));
  j["summary"] = summary;
  j["saving_per_round"] = cmp.saving_per_round;
  return j.dump(2) + "\n";
}

struct SweepRow {
  int n_selected = 0;
  Mode mode = Mode::Sfl;
  double mean_upstream_bits = 0.0;
  double mean_involved = 0.0;
  double final_accuracy = 0.0;
};

inline std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = kSweepCsvHeader;
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.n_selected) + ',' + to_string(r.mode) + ',' + format_number(r.mean_upstream_bits) + ',' +
           format_number(r.mean_involved) + ',' + format_number(r.final_accuracy) + '\n';
  }
  return out;
}

}  // namespace sflpon
