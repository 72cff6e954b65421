// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include "mtdfl/harness/config.hpp"
#include "mtdfl/harness/metrics.hpp"

namespace mtdfl {

enum class Phase : std::uint64_t { Train = 0, Eval = 1 };

/// Everything one seed shares across defense modes.
struct RunContext {
  const ScenarioConfig* cfg = nullptr;
  std::uint64_t seed = 0;
  DeviceShard test;
  DeviceShard train_pool;  // empty unless flows come from CSV
  std::shared_ptr<const Predictor> predictor;
  StateScales scales;
  std::vector<BaseStation> stations;
  ChannelParams channel;
  ComputeCosts costs;
};

/// Learner state carried across MTD-FL episodes of one seed.
struct AgentState {
  PolicySet policies;
  RewardNormalizer normalizer;
};

struct EpisodeOptions {
  DefenseMode mode;
  Phase phase = Phase::Eval;
  std::size_t episode = 0;
  double exploit_prob = 1.0;
  bool learn = false;
};

struct EpisodeResult {
  std::vector<MetricsRecord> records;
  double cumulative_reward = 0.0;
  std::size_t violations = 0;
  CompromisePlan plan;
};

/// Builds the predictor named by the config. Recurrent kinds load the
/// configured checkpoint or train on synthetic (or CSV) traffic.
std::shared_ptr<const Predictor> make_predictor(const ScenarioConfig& cfg, std::uint64_t seed);

RunContext make_run_context(const ScenarioConfig& cfg, std::uint64_t seed, bool need_predictor);

AgentState make_agent(const ScenarioConfig& cfg, std::uint64_t seed);

/// Runs one episode of `cfg.iterations` FL rounds. `agent` is required for
/// MTD-FL and ignored otherwise; `persistent` carries the global model across
/// episodes when resets are disabled.
EpisodeResult run_episode(const RunContext& ctx, const EpisodeOptions& opt, AgentState* agent,
                          ModelParams* persistent = nullptr);

struct ExperimentResult {
  std::vector<MetricsRecord> records;
  std::vector<CurvePoint> curve;
  std::vector<SummaryRow> summary;
};

/// For each seed: MTD-FL trains its agent over `episodes` and then every mode
/// runs `eval_episodes` greedy evaluation episodes on identical scenarios.
ExperimentResult run_experiment(const ScenarioConfig& cfg, std::ostream* progress = nullptr);

/// Writes config.json, metrics.jsonl, summary.csv, training_curve.csv and plots/.
void write_experiment(const std::filesystem::path& dir, const ScenarioConfig& cfg, const ExperimentResult& result);

/// Default output root: $MTDFL_OUT, else ./runs.
std::filesystem::path default_output_root();

/// Reads a run directory and writes plots/*.svg with matching plots/*.csv.
/// Returns the files written; an empty run yields no files and a warning.
std::vector<std::filesystem::path> emit_plots(const std::filesystem::path& run_dir);

}  // namespace mtdfl
