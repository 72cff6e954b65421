// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "mtdfl/error.hpp"
#include "mtdfl/harness/data.hpp"
#include "mtdfl/harness/experiment.hpp"

using namespace mtdfl;

namespace {

ScenarioConfig config_from(const std::string& path) { return path.empty() ? reference_scenario() : load_config(path); }

struct AnticipatorData {
  WindowedDataset train, test;
};

AnticipatorData anticipator_data(const std::string& source, const ScenarioConfig& cfg, std::uint64_t seed) {
  const AnticipatorConfig& a = cfg.anticipator;
  AnticipatorData d;
  if (source == "synthetic") {
    Rng r1 = make_stream(seed, {stream::kAnticipator, 10});
    Rng r2 = make_stream(seed, {stream::kAnticipator, 11});
    d.train = windows_of(gen_synthetic_traffic(a.train_benign, a.train_flows, a.features, a.snr, a.window, r1), a.window);
    d.test = windows_of(gen_synthetic_traffic(a.test_benign, a.test_flows, a.features, a.snr, a.window, r2), a.window);
    return d;
  }
  // A CSV trace is split by device: even device ids train, odd ids test.
  std::vector<EventSequence> train, test;
  for (auto& s : load_events_csv(source)) (s.device % 2 == 0 ? train : test).push_back(std::move(s));
  d.train = windows_of(train, a.window);
  d.test = windows_of(test, a.window);
  return d;
}

tk::CellKind arch_of(const std::string& s) { return tk::cell_kind_from_string(s); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moving-target-defense federated learning simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, run_id;
  std::vector<std::string> modes;
  std::int64_t seed = -1, episodes = -1, runs = -1, eval_episodes = -1;
  auto* sim = app.add_subcommand("simulate", "Run an experiment and write metrics and plots");
  sim->add_option("--config", config_path, "JSON scenario (default: reference scenario)");
  sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--mode", modes, "Defense modes: FL, FL-Attack, RND-MTD(k), MTD-FL, or all");
  sim->add_option("--episodes", episodes, "Training episodes for MTD-FL");
  sim->add_option("--eval-episodes", eval_episodes, "Evaluation episodes per mode");
  sim->add_option("--runs", runs, "Independent seeds");
  sim->add_option("--out", out_dir, "Output root (default: $MTDFL_OUT or ./runs)");
  sim->add_option("--run-id", run_id, "Run directory name");

  std::string data = "synthetic", arch = "gru", ckpt_out;
  std::int64_t hidden = -1, a_seed = 1;
  auto* ta = app.add_subcommand("train-anticipator", "Train a recurrent anticipator and save a checkpoint");
  ta->add_option("--data", data, "'synthetic' or an events CSV");
  ta->add_option("--arch", arch, "gru or lstm");
  ta->add_option("--hidden", hidden, "Hidden units");
  ta->add_option("--config", config_path, "JSON scenario for window and feature settings");
  ta->add_option("--seed", a_seed, "Seed");
  ta->add_option("--out", ckpt_out, "Checkpoint path")->required();

  std::string grid_out;
  auto* ea = app.add_subcommand("eval-anticipator", "Accuracy grid over architectures and hidden sizes");
  ea->add_option("--data", data, "'synthetic' or an events CSV");
  ea->add_option("--config", config_path, "JSON scenario for window and feature settings");
  ea->add_option("--seed", a_seed, "Seed");
  ea->add_option("--out", grid_out, "CSV path (default: stdout)");

  std::string run_dir;
  auto* pl = app.add_subcommand("plot", "Regenerate plots for a run directory");
  pl->add_option("--run", run_dir, "Run directory")->required();

  auto* vc = app.add_subcommand("validate-config", "Check a JSON scenario and print the resolved config");
  vc->add_option("--config", config_path, "JSON scenario")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      ScenarioConfig cfg = config_from(config_path);
      if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
      if (episodes >= 0) cfg.episodes = static_cast<std::size_t>(episodes);
      if (eval_episodes >= 0) cfg.eval_episodes = static_cast<std::size_t>(eval_episodes);
      if (runs >= 0) cfg.runs = static_cast<std::size_t>(runs);
      if (!run_id.empty()) cfg.run_id = run_id;
      if (!modes.empty() && !(modes.size() == 1 && modes[0] == "all")) {
        cfg.modes.clear();
        for (const auto& m : modes) cfg.modes.push_back(DefenseMode::parse(m));
      }
      validate(cfg);
      const std::filesystem::path root = out_dir.empty() ? default_output_root() : std::filesystem::path(out_dir);
      const ExperimentResult res = run_experiment(cfg, &std::cerr);
      const auto dir = root / cfg.run_id;
      write_experiment(dir, cfg, res);
      std::cout << "wrote " << dir.string() << "\n";
      for (const auto& r : res.summary)
        if (r.iteration == cfg.iterations)
          std::cout << r.mode << ": accuracy " << r.accuracy_mean << " excluded " << r.excluded_mean << " t_int "
                    << r.t_int_mean << "\n";
    } else if (*ta) {
      ScenarioConfig cfg = config_from(config_path);
      AnticipatorData d = anticipator_data(data, cfg, static_cast<std::uint64_t>(a_seed));
      AnticipatorTrainConfig tc = cfg.anticipator.train;
      tc.arch = arch_of(arch);
      if (hidden > 0) tc.hidden = hidden;
      tc.seed = static_cast<std::uint64_t>(a_seed);
      TrainedAnticipator t = train_anticipator(d.train, tc);
      if (t.degenerate) std::cerr << "warning: training data holds a single class\n";
      tk::save_model(ckpt_out, "anticipator", t.predictor->net());
      const AnticipatorScore s = evaluate_anticipator(*t.predictor, d.test);
      std::cout << "train_accuracy " << t.train_accuracy << " test_accuracy " << s.accuracy << " fp " << s.fp_rate
                << " fn " << s.fn_rate << "\nwrote " << ckpt_out << "\n";
    } else if (*ea) {
      ScenarioConfig cfg = config_from(config_path);
      AnticipatorData d = anticipator_data(data, cfg, static_cast<std::uint64_t>(a_seed));
      std::ofstream file;
      if (!grid_out.empty()) {
        file.open(grid_out, std::ios::binary);
        if (!file) throw IoError("cannot write '" + grid_out + "'");
      }
      std::ostream& os = grid_out.empty() ? std::cout : file;
      os << "model,hidden,accuracy,fp,fn\n";
      for (const char* a : {"gru", "lstm"})
        for (Eigen::Index h : {5, 8, 11, 16}) {
          AnticipatorTrainConfig tc = cfg.anticipator.train;
          tc.arch = arch_of(a);
          tc.hidden = h;
          tc.seed = static_cast<std::uint64_t>(a_seed);
          TrainedAnticipator t = train_anticipator(d.train, tc);
          const AnticipatorScore s = evaluate_anticipator(*t.predictor, d.test);
          os << a << ',' << h << ',' << s.accuracy << ',' << s.fp_rate << ',' << s.fn_rate << '\n';
        }
    } else if (*pl) {
      for (const auto& p : emit_plots(run_dir)) std::cout << "wrote " << p.string() << "\n";
    } else if (*vc) {
      const ScenarioConfig cfg = load_config(config_path);
      validate(cfg);
      std::cout << config_to_json(cfg) << "\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
