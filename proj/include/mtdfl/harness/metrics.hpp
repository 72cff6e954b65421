// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mtdfl {

/// One FL iteration of one episode. Timing fields are round aggregates:
/// t_local is the straggler's training time, t_agg the aggregation time, and
/// t_down, t_inf, t_int are means over participants.
struct MetricsRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::string phase;  // "train" or "eval"
  std::size_t episode = 0;
  std::size_t iteration = 0;
  std::string mode;
  std::string attack;
  double accuracy = 0.0;
  double test_loss = 0.0;
  std::vector<std::size_t> participants;
  std::vector<double> t_int_per_participant;
  double t_local = 0.0;
  double t_agg = 0.0;
  double t_down = 0.0;
  double t_inf = 0.0;
  double t_int = 0.0;
  std::size_t malicious = 0;
  double excluded_malicious_ratio = 1.0;
  std::size_t poisoned_uploads = 0;
  std::size_t violations = 0;           // executed devices with p >= C_H
  std::size_t proposed_violations = 0;  // same check on the agent's proposal
  double exploit_prob = 0.0;
  double reward = 0.0;
  double cumulative_reward = 0.0;

  std::string to_json() const;
  static MetricsRecord from_json(const std::string& line);
};

struct CurvePoint {
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  double cumulative_reward = 0.0;
};

/// Mean and population standard deviation over runs for one (mode, iteration).
struct SummaryRow {
  std::string mode;
  std::size_t iteration = 0;
  std::size_t runs = 0;
  double accuracy_mean = 0.0, accuracy_std = 0.0;
  double excluded_mean = 0.0, excluded_std = 0.0;
  double t_int_mean = 0.0, t_int_std = 0.0;
  double participants_mean = 0.0;
  double violations_total = 0.0;
};

/// Groups eval-phase records by (mode, iteration); each run contributes the
/// mean over its eval episodes.
std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records);

void write_jsonl(const std::filesystem::path& path, const std::vector<MetricsRecord>& records);
std::vector<MetricsRecord> read_jsonl(const std::filesystem::path& path);
void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);
void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

/// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& v);

}  // namespace mtdfl
