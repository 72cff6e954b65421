// SPDX-License-Identifier: Apache-2.0
#include <cstdlib>
#include <fstream>
#include <ostream>

#include "mtdfl/error.hpp"
#include "mtdfl/harness/experiment.hpp"

namespace mtdfl {

ExperimentResult run_experiment(const ScenarioConfig& cfg, std::ostream* progress) {
  validate(cfg);
  bool need_predictor = false;
  for (const DefenseMode& m : cfg.modes) need_predictor |= m.kind == DefenseKind::MtdFl;

  AgentConfig schedule = cfg.agent;
  schedule.episodes = cfg.episodes;

  ExperimentResult out;
  for (std::size_t r = 0; r < cfg.runs; ++r) {
    const std::uint64_t seed = cfg.seed + r;
    const RunContext ctx = make_run_context(cfg, seed, need_predictor);
    for (const DefenseMode& mode : cfg.modes) {
      std::optional<AgentState> agent;
      ModelParams persistent;
      if (mode.kind == DefenseKind::MtdFl) {
        agent = make_agent(cfg, seed);
        for (std::size_t e = 0; e < cfg.episodes; ++e) {
          EpisodeOptions opt{mode, Phase::Train, e, epsilon_at(e, schedule), true};
          EpisodeResult res = run_episode(ctx, opt, &*agent, &persistent);
          out.curve.push_back({seed, e, res.cumulative_reward});
          for (auto& rec : res.records) out.records.push_back(std::move(rec));
          if (progress && (e + 1) % 50 == 0)
            *progress << "seed " << seed << " " << mode.name() << " episode " << e + 1 << "/" << cfg.episodes
                      << " reward " << res.cumulative_reward << "\n";
        }
      }
      for (std::size_t e = 0; e < cfg.eval_episodes; ++e) {
        EpisodeOptions opt{mode, Phase::Eval, e, cfg.eval_exploit, false};
        EpisodeResult res = run_episode(ctx, opt, agent ? &*agent : nullptr, &persistent);
        for (auto& rec : res.records) out.records.push_back(std::move(rec));
      }
      if (progress) *progress << "seed " << seed << " " << mode.name() << " done\n";
    }
  }
  out.summary = summarize(out.records);
  return out;
}

void write_experiment(const std::filesystem::path& dir, const ScenarioConfig& cfg, const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  {
    std::ofstream os(dir / "config.json", std::ios::binary);
    if (!os) throw IoError("cannot write config.json in '" + dir.string() + "'");
    os << config_to_json(cfg) << '\n';
  }
  write_jsonl(dir / "metrics.jsonl", result.records);
  write_summary_csv(dir / "summary.csv", result.summary);
  write_curve_csv(dir / "training_curve.csv", result.curve);
  emit_plots(dir);
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("MTDFL_OUT"); env && *env) return env;
  return "runs";
}

}  // namespace mtdfl
