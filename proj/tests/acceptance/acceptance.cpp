// SPDX-License-Identifier: Apache-2.0
// Acceptance suite: prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "mtdfl/adversary.hpp"
#include "mtdfl/anticipator.hpp"
#include "mtdfl/flengine.hpp"
#include "mtdfl/harness/config.hpp"
#include "mtdfl/harness/experiment.hpp"
#include "mtdfl/harness/metrics.hpp"
#include "mtdfl/mtdagent.hpp"
#include "mtdfl/netmodel.hpp"
#include "mtdfl/tensorkit.hpp"
#include "mtdfl/timemodel.hpp"

using namespace mtdfl;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const std::string& id, const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS " : "FAIL ") << id << ' ' << name << ": " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool rel_close(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v[k++] = x;
  return v;
}

// ---- 1 ----------------------------------------------------------------------

Outcome timing_oracle() {
  ComputeCosts c;
  c.train_cycles_per_sample = 100.0;
  c.aggregate_cycles_per_unit = 10.0;
  c.inference_cycles = 1e4;
  c.local_epochs = 5;
  c.model_size = 1000.0;

  NetworkSnapshot s;
  s.positions.assign(2, Eigen::Vector2d::Zero());
  s.assignment = {0, 1};
  s.uplink = Eigen::MatrixXd::Zero(2, 2);
  s.uplink(0, 0) = s.uplink(1, 1) = 1e6;
  s.downlink = s.uplink;
  s.bs_cpu = Eigen::VectorXd::Constant(2, 1e9);
  s.dev_cpu = Eigen::VectorXd::Constant(2, 2e9);
  s.backhaul = Eigen::VectorXd::Constant(2, 1e7);

  const double pa = partial_agg_time(1e9, vec({1e6}), c);
  const double ta = total_agg_time(vec({pa, pa}), vec({1e7, 1e7}), {true, true}, c, 2e9);
  const double dl = download_time(1e7, 1e6, c);
  const TimingBreakdown t = recognition_time({0, 1}, s, {1000, 1000}, c, 2e9);
  Outcome o;
  o.pass = rel_close(pa, 1.01e-3) && rel_close(ta, 1.12e-3) && rel_close(dl, 1.1e-3) &&
           rel_close(t.recognition[0], 2.475e-3) && rel_close(t.recognition[1], 2.475e-3);
  o.detail = "T_pa=" + num(pa) + " T_ag=" + num(ta) + " T_down=" + num(dl) + " T_Int=" + num(t.recognition[0]);
  return o;
}

// ---- 2 ----------------------------------------------------------------------

Outcome channel_oracle() {
  const double r = link_rate(28e6, std::exp(1.0) - 1.0, 1.0, 1.0);
  Rng rng = make_stream(2024, {2});
  std::size_t monotone = 0;
  for (int k = 0; k < 1000; ++k) {
    ChannelParams p;
    p.path_loss_coeff = uniform(rng, 0.1, 10.0);
    p.path_loss_exponent = uniform(rng, 2.0, 5.0);
    const double pt = uniform(rng, 0.01, 3.0), b = uniform(rng, 1e6, 5e7), eta = uniform(rng, 1e-21, 1e-12);
    const double d1 = uniform(rng, 1.0, 400.0), d2 = d1 + uniform(rng, 0.5, 100.0);
    monotone += link_rate(b, pt, channel_gain(d1, p), eta) > link_rate(b, pt, channel_gain(d2, p), eta);
  }
  return {rel_close(r, 28e6) && monotone == 1000,
          "rate(SNR=e-1)=" + num(r) + ", monotone draws " + std::to_string(monotone) + "/1000"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome aggregation_equivalence() {
  Rng rng = make_stream(2024, {3});
  double worst = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(uniform_int(rng, 1, 20));
    const auto groups = uniform_int(rng, 1, 4);
    const Eigen::Index dim = uniform_int(rng, 1, 40);
    std::vector<WeightedModel> ups;
    std::vector<std::size_t> group;
    for (std::size_t k = 0; k < n; ++k) {
      ModelParams p;
      p.values = Eigen::VectorXd::NullaryExpr(dim, [&] { return normal(rng); });
      ups.push_back({p, uniform(rng, 1.0, 1e4)});
      group.push_back(static_cast<std::size_t>(uniform_int(rng, 0, groups - 1)));
    }
    // Flat weighted mean in extended precision as the reference.
    std::vector<long double> acc(static_cast<std::size_t>(dim), 0.0L);
    long double total = 0.0L;
    for (const auto& u : ups) {
      total += u.weight;
      for (Eigen::Index i = 0; i < dim; ++i) acc[static_cast<std::size_t>(i)] += u.weight * static_cast<long double>(u.params.values[i]);
    }
    const ModelParams h = aggregate_hierarchical(ups, group);
    for (Eigen::Index i = 0; i < dim; ++i)
      worst = std::max(worst, std::abs(h.values[i] - static_cast<double>(acc[static_cast<std::size_t>(i)] / total)));
  }
  return {worst <= 1e-12, "500 configurations, max abs deviation " + num(worst)};
}

// ---- 4 ----------------------------------------------------------------------

Outcome attack_closed_forms() {
  Rng rng = make_stream(2024, {4});
  AttackConfig c;
  c.kind = AttackKind::Attack1;
  c.lambda = 1.0;
  c.scale = -10.0;
  c.noise_std = 0.0;
  bool a1 = true;
  for (int k = 0; k < 200; ++k) {
    const Eigen::VectorXd g = Eigen::VectorXd::NullaryExpr(34, [&] { return normal(rng); });
    const Eigen::VectorXd once = craft_attack1(g, c, rng), twice = craft_attack1(g, c, rng);
    a1 = a1 && once == twice && once == Eigen::VectorXd(-10.0 * g);
  }
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto m = static_cast<std::size_t>(uniform_int(rng, 2, 12));
    std::vector<Eigen::VectorXd> models;
    for (std::size_t j = 0; j < m; ++j) models.push_back(Eigen::VectorXd::NullaryExpr(20, [&] { return normal(rng); }));
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(20);
    for (const auto& x : models) mean += x;
    mean /= static_cast<double>(m);
    worst = std::max(worst, (craft_attack2(models, 0.0) - mean).cwiseAbs().maxCoeff());
  }
  return {a1 && worst <= 1e-12, std::string("attack 1 bitwise ") + (a1 ? "yes" : "no") + ", attack 2 (z=0) max deviation " +
                                    num(worst)};
}

// ---- 6 ----------------------------------------------------------------------

template <typename Net>
double check_net(Net net, const tk::Mat<double>& x, const std::function<double(const tk::Mat<double>&)>& value,
                 const std::function<tk::Mat<double>(const tk::Mat<double>&)>& dvalue) {
  typename Net::Tape tape;
  const tk::Mat<double> out = net.forward(x, &tape);
  const tk::Vec<double> analytic = net.backward(tape, dvalue(out));
  auto loss = [&](const tk::Vec<double>& p) {
    Net n = net;
    n.set_params(p);
    return value(n.forward(x));
  };
  return tk::grad_check(net.params(), loss, analytic);
}

Outcome gradient_checks() {
  Rng rng = make_stream(2024, {6});
  auto randm = [&](Eigen::Index r, Eigen::Index c) {
    return tk::Mat<double>(tk::Mat<double>::NullaryExpr(r, c, [&] { return normal(rng); }));
  };
  Eigen::VectorXi y(12);
  for (Eigen::Index i = 0; i < 12; ++i) y[i] = static_cast<int>(uniform_int(rng, 0, 1));
  auto ce = [&](tk::LossKind k) {
    return std::pair{std::function<double(const tk::Mat<double>&)>([&, k](const tk::Mat<double>& p) {
                       return tk::loss_and_grad(k, p, y).value;
                     }),
                     std::function<tk::Mat<double>(const tk::Mat<double>&)>([&, k](const tk::Mat<double>& p) {
                       return tk::loss_and_grad(k, p, y).grad;
                     })};
  };

  tk::DenseNet<double> task(make_task_layers(16, {}));
  task.init_uniform(rng);
  const auto [fv, fd] = ce(tk::LossKind::CrossEntropy);
  const double e_task = check_net(task, randm(12, 16), fv, fd);

  tk::RecurrentClassifier<double> gru(tk::CellKind::Gru, 4, 8);
  gru.init_uniform(rng);
  const auto [gv, gd] = ce(tk::LossKind::Mse);
  const double e_gru = check_net(gru, randm(12, 10 * 4), gv, gd);

  AgentConfig ac;
  tk::DenseNet<double> policy(policy_layers(state_length(10, 2), ac));
  policy.init_uniform(rng);
  tk::Mat<double> target(1, 2);
  target << 0.4, -0.1;
  const double e_policy = check_net(
      policy, tk::Mat<double>(randm(1, state_length(10, 2)).cwiseAbs()),
      [&](const tk::Mat<double>& q) { return (q - target).squaredNorm(); },
      [&](const tk::Mat<double>& q) { return tk::Mat<double>(2.0 * (q - target)); });

  const double worst = std::max({e_task, e_gru, e_policy});
  return {worst <= 1e-4, "task " + num(e_task) + ", GRU " + num(e_gru) + ", policy " + num(e_policy)};
}

// ---- 7 ----------------------------------------------------------------------

Outcome windowing_oracle() {
  Rng rng = make_stream(2024, {7});
  std::size_t agree = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index window = uniform_int(rng, 1, 15);
    const Eigen::Index t = window + uniform_int(rng, 1, 60);
    const Eigen::Index width = uniform_int(rng, 1, 5);
    EventSequence log;
    log.features = Eigen::MatrixXd::NullaryExpr(t, width, [&] { return normal(rng); });
    for (Eigen::Index k = 0; k < t; ++k) log.labels.push_back(bernoulli(rng, 0.3));
    const WindowedDataset w = build_windows(log, window);

    bool ok = w.rows() == t - window && w.x.cols() == window * width;
    for (Eigen::Index r = 0; ok && r < t - window; ++r) {
      for (Eigen::Index s = 0; s < window; ++s)
        for (Eigen::Index f = 0; f < width; ++f) ok = ok && w.x(r, s * width + f) == log.features(r + s, f);
      ok = ok && w.y[r] == log.labels[static_cast<std::size_t>(r + window)];
    }
    agree += ok;
  }
  return {agree == 200, std::to_string(agree) + "/200 random (t, L) pairs match enumeration"};
}

// ---- 5, 8, 9 ----------------------------------------------------------------

constexpr std::size_t kSeeds = 10;
constexpr std::uint64_t kFirstSeed = 100;

ScenarioConfig reference(AnticipatorKind kind) {
  ScenarioConfig c = reference_scenario();
  c.seed = kFirstSeed;
  c.runs = kSeeds;
  c.anticipator.kind = kind;
  c.run_id = "acceptance";
  return c;
}

std::map<std::string, std::map<std::size_t, SummaryRow>> by_mode(const ExperimentResult& r) {
  std::map<std::string, std::map<std::size_t, SummaryRow>> out;
  for (const auto& row : r.summary) out[row.mode][row.iteration] = row;
  return out;
}

double mean_over_iterations(const std::map<std::size_t, SummaryRow>& rows, double SummaryRow::*field) {
  double s = 0.0;
  for (const auto& [it, r] : rows) s += r.*field;
  return rows.empty() ? 0.0 : s / static_cast<double>(rows.size());
}

Outcome constraint_soundness(const ExperimentResult& oracle, const ExperimentResult& noisy, std::size_t episodes) {
  std::size_t executed = 0, records = 0, proposed = 0;
  for (const auto* r : {&oracle, &noisy})
    for (const auto& m : r->records)
      if (m.mode == "MTD-FL") {
        executed += m.violations;
        proposed += m.proposed_violations;
        ++records;
      }
  return {executed == 0 && records > 0,
          std::to_string(episodes) + " training episodes x " + std::to_string(kSeeds) + " seeds x 2 anticipators, " +
              std::to_string(records) + " MTD-FL rounds, executed violations " + std::to_string(executed) +
              " (proposals masked: " + std::to_string(proposed) + ")"};
}

void trend_suite(const ExperimentResult& oracle, const ExperimentResult& noisy) {
  auto o = by_mode(oracle);
  auto n = by_mode(noisy);
  const auto& fl = o["FL"];
  const auto& fla = o["FL-Attack"];
  const auto& rnd = o["RND-MTD(2)"];
  const auto& mtd = o["MTD-FL"];
  const auto& mtdn = n["MTD-FL"];
  const std::size_t last = fl.rbegin()->first;
  const std::string at = " (" + std::to_string(kSeeds) + " seeds)";

  report("8a", "no-attack FL improves",
         {fl.at(last).accuracy_mean >= fl.at(1).accuracy_mean + 0.05,
          "iteration 1 " + num(fl.at(1).accuracy_mean) + " -> iteration " + std::to_string(last) + " " +
              num(fl.at(last).accuracy_mean) + at});

  report("8b", "undefended attack degrades",
         {fla.at(1).accuracy_mean <= fl.at(1).accuracy_mean - 0.20 &&
              fla.at(last).accuracy_mean <= fla.at(1).accuracy_mean,
          "iteration 1 " + num(fla.at(1).accuracy_mean) + " vs no-attack " + num(fl.at(1).accuracy_mean) +
              ", iteration " + std::to_string(last) + " " + num(fla.at(last).accuracy_mean) + at});

  double min_excl = 1.0;
  for (const auto& [it, r] : mtd) min_excl = std::min(min_excl, r.excluded_mean);
  report("8c", "MTD-FL with oracle",
         {min_excl == 1.0 && mtd.at(last).accuracy_mean >= fl.at(last).accuracy_mean - 0.05,
          "excluded ratio min " + num(min_excl) + ", final accuracy " + num(mtd.at(last).accuracy_mean) +
              " vs FL " + num(fl.at(last).accuracy_mean) + at});

  double min_noisy = 1.0;
  for (const auto& [it, r] : mtdn) min_noisy = std::min(min_noisy, r.excluded_mean);
  report("8d", "MTD-FL with noisy oracle (fp 0.24, fn 0.27)",
         {mean_over_iterations(mtdn, &SummaryRow::excluded_mean) >= 0.80,
          "excluded ratio mean " + num(mean_over_iterations(mtdn, &SummaryRow::excluded_mean)) + ", worst iteration " +
              num(min_noisy) + ", final accuracy " + num(mtdn.at(last).accuracy_mean) + at});

  const double t_mtd = mean_over_iterations(mtd, &SummaryRow::t_int_mean);
  const double t_fl = mean_over_iterations(fl, &SummaryRow::t_int_mean);
  report("8e", "recognition time ordering",
         {t_mtd <= t_fl, "MTD-FL " + num(t_mtd) + " s <= FL " + num(t_fl) + " s (noisy MTD-FL " +
                             num(mean_over_iterations(mtdn, &SummaryRow::t_int_mean)) + " s)"});

  const double a_rnd = mean_over_iterations(rnd, &SummaryRow::accuracy_mean);
  const double a_fla = mean_over_iterations(fla, &SummaryRow::accuracy_mean);
  const double a_mtd = mean_over_iterations(mtd, &SummaryRow::accuracy_mean);
  report("8f", "RND-MTD(2) between FL-Attack and MTD-FL",
         {a_fla <= a_rnd && a_rnd <= a_mtd,
          "mean accuracy FL-Attack " + num(a_fla) + " <= RND-MTD(2) " + num(a_rnd) + " <= MTD-FL " + num(a_mtd)});
}

Outcome learning_signal(const ExperimentResult& oracle, std::size_t episodes) {
  const std::size_t tenth = std::max<std::size_t>(1, episodes / 10);
  std::map<std::uint64_t, std::vector<double>> curves;
  for (const auto& p : oracle.curve) {
    auto& c = curves[p.seed];
    if (c.size() <= p.episode) c.resize(p.episode + 1);
    c[p.episode] = p.cumulative_reward;
  }
  bool ok = true;
  std::string detail;
  std::size_t checked = 0;
  for (const auto& [seed, c] : curves) {
    if (checked == 5) break;
    double first = 0.0, lastm = 0.0;
    for (std::size_t e = 0; e < tenth; ++e) first += c[e], lastm += c[c.size() - 1 - e];
    first /= static_cast<double>(tenth);
    lastm /= static_cast<double>(tenth);
    ok = ok && lastm >= first;
    detail += (checked ? ", " : "") + std::string("seed ") + std::to_string(seed) + " " + num(first) + " -> " + num(lastm);
    ++checked;
  }
  return {ok && checked == 5, detail};
}

// ---- 10 ---------------------------------------------------------------------

Outcome determinism() {
  ScenarioConfig c = reference_scenario();
  c.seed = 31;
  c.runs = 2;
  c.episodes = 20;
  c.eval_episodes = 2;
  c.anticipator.kind = AnticipatorKind::NoisyOracle;
  const auto dir = std::filesystem::temp_directory_path() / "mtdfl_acceptance_determinism";
  std::filesystem::create_directories(dir);
  write_jsonl(dir / "first.jsonl", run_experiment(c).records);
  write_jsonl(dir / "second.jsonl", run_experiment(c).records);
  auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  const std::string a = slurp(dir / "first.jsonl"), b = slurp(dir / "second.jsonl");
  std::filesystem::remove_all(dir);
  return {!a.empty() && a == b, std::to_string(a.size()) + " bytes, identical: " + (a == b ? "yes" : "no")};
}

}  // namespace

int main() {
  try {
    // The long experiments start first and run while the quick checks execute.
    const std::size_t episodes = reference(AnticipatorKind::Oracle).episodes;
    auto oracle_job = std::async(std::launch::async, [] { return run_experiment(reference(AnticipatorKind::Oracle)); });
    auto noisy_job =
        std::async(std::launch::async, [] { return run_experiment(reference(AnticipatorKind::NoisyOracle)); });

    report("1", "timing oracle", timing_oracle());
    report("2", "channel oracle", channel_oracle());
    report("3", "aggregation equivalence", aggregation_equivalence());
    report("4", "attack closed forms", attack_closed_forms());
    report("6", "gradient checks", gradient_checks());
    report("7", "windowing oracle", windowing_oracle());
    report("10", "determinism", determinism());

    const ExperimentResult oracle = oracle_job.get();
    const ExperimentResult noisy = noisy_job.get();
    report("5", "constraint soundness", constraint_soundness(oracle, noisy, episodes));
    trend_suite(oracle, noisy);
    report("9", "reward learning signal", learning_signal(oracle, episodes));
  } catch (const std::exception& e) {
    std::cout << "FAIL acceptance aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion line(s) failed" : "acceptance: all criteria passed")
            << std::endl;
  return failures ? 1 : 0;
}
