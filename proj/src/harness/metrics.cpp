// SPDX-License-Identifier: Apache-2.0
#include "mtdfl/harness/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <map>
#include <sstream>

#include "mtdfl/error.hpp"

namespace mtdfl {

using nlohmann::json;

std::string MetricsRecord::to_json() const {
  // ordered_json keeps the field order stable and readable.
  nlohmann::ordered_json j;
  j["run_id"] = run_id;
  j["seed"] = seed;
  j["phase"] = phase;
  j["episode"] = episode;
  j["iteration"] = iteration;
  j["mode"] = mode;
  j["attack"] = attack;
  j["accuracy"] = accuracy;
  j["test_loss"] = test_loss;
  j["participants"] = participants;
  j["t_int_per_participant"] = t_int_per_participant;
  j["t_local"] = t_local;
  j["t_agg"] = t_agg;
  j["t_down"] = t_down;
  j["t_inf"] = t_inf;
  j["t_int"] = t_int;
  j["malicious"] = malicious;
  j["excluded_malicious_ratio"] = excluded_malicious_ratio;
  j["poisoned_uploads"] = poisoned_uploads;
  j["violations"] = violations;
  j["proposed_violations"] = proposed_violations;
  j["exploit_prob"] = exploit_prob;
  j["reward"] = reward;
  j["cumulative_reward"] = cumulative_reward;
  return j.dump();
}

MetricsRecord MetricsRecord::from_json(const std::string& line) {
  MetricsRecord r;
  try {
    const json j = json::parse(line);
    r.run_id = j.at("run_id");
    r.seed = j.at("seed");
    r.phase = j.at("phase");
    r.episode = j.at("episode");
    r.iteration = j.at("iteration");
    r.mode = j.at("mode");
    r.attack = j.at("attack");
    r.accuracy = j.at("accuracy");
    r.test_loss = j.at("test_loss");
    r.participants = j.at("participants").get<std::vector<std::size_t>>();
    r.t_int_per_participant = j.at("t_int_per_participant").get<std::vector<double>>();
    r.t_local = j.at("t_local");
    r.t_agg = j.at("t_agg");
    r.t_down = j.at("t_down");
    r.t_inf = j.at("t_inf");
    r.t_int = j.at("t_int");
    r.malicious = j.at("malicious");
    r.excluded_malicious_ratio = j.at("excluded_malicious_ratio");
    r.poisoned_uploads = j.at("poisoned_uploads");
    r.violations = j.at("violations");
    r.proposed_violations = j.at("proposed_violations");
    r.exploit_prob = j.at("exploit_prob");
    r.reward = j.at("reward");
    r.cumulative_reward = j.at("cumulative_reward");
  } catch (const json::exception& e) {
    throw ParseError(std::string("metrics record: ") + e.what());
  }
  return r;
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size()))};
}

std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records) {
  struct Acc {
    double acc = 0, exc = 0, t = 0, part = 0, viol = 0;
    std::size_t n = 0;
  };
  // (mode order of first appearance, iteration) -> seed -> accumulated eval values
  std::vector<std::string> mode_order;
  std::map<std::pair<std::size_t, std::size_t>, std::map<std::uint64_t, Acc>> groups;
  for (const auto& r : records) {
    if (r.phase != "eval") continue;
    auto it = std::find(mode_order.begin(), mode_order.end(), r.mode);
    if (it == mode_order.end()) it = mode_order.insert(mode_order.end(), r.mode);
    const auto mi = static_cast<std::size_t>(it - mode_order.begin());
    Acc& a = groups[{mi, r.iteration}][r.seed];
    a.acc += r.accuracy;
    a.exc += r.excluded_malicious_ratio;
    a.t += r.t_int;
    a.part += static_cast<double>(r.participants.size());
    a.viol += static_cast<double>(r.violations);
    ++a.n;
  }
  std::vector<SummaryRow> out;
  for (const auto& [key, by_seed] : groups) {
    std::vector<double> acc, exc, t, part;
    double viol = 0.0;
    for (const auto& [seed, a] : by_seed) {
      const auto n = static_cast<double>(a.n);
      acc.push_back(a.acc / n);
      exc.push_back(a.exc / n);
      t.push_back(a.t / n);
      part.push_back(a.part / n);
      viol += a.viol;
    }
    SummaryRow row;
    row.mode = mode_order[key.first];
    row.iteration = key.second;
    row.runs = by_seed.size();
    std::tie(row.accuracy_mean, row.accuracy_std) = mean_std(acc);
    std::tie(row.excluded_mean, row.excluded_std) = mean_std(exc);
    std::tie(row.t_int_mean, row.t_int_std) = mean_std(t);
    row.participants_mean = mean_std(part).first;
    row.violations_total = viol;
    out.push_back(row);
  }
  return out;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<MetricsRecord>& records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  for (const auto& r : records) os << r.to_json() << '\n';
  if (!os) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<MetricsRecord> read_jsonl(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::vector<MetricsRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(MetricsRecord::from_json(line));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

void write_summary_csv(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "mode,iteration,runs,accuracy_mean,accuracy_std,excluded_mean,excluded_std,t_int_mean,t_int_std,"
        "participants_mean,violations_total\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.mode << ',' << r.iteration << ',' << r.runs << ',' << r.accuracy_mean << ',' << r.accuracy_std << ','
       << r.excluded_mean << ',' << r.excluded_std << ',' << r.t_int_mean << ',' << r.t_int_std << ','
       << r.participants_mean << ',' << r.violations_total << '\n';
}

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurvePoint>& curve) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  os << "seed,episode,cumulative_reward\n" << std::setprecision(17);
  for (const auto& p : curve) os << p.seed << ',' << p.episode << ',' << p.cumulative_reward << '\n';
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  std::vector<CurvePoint> out;
  std::string line;
  std::getline(is, line);
  std::size_t n = 1;
  while (std::getline(is, line)) {
    ++n;
    if (line.empty()) continue;
    std::stringstream ss(line);
    CurvePoint p;
    char c1 = 0, c2 = 0;
    if (!(ss >> p.seed >> c1 >> p.episode >> c2 >> p.cumulative_reward) || c1 != ',' || c2 != ',')
      throw ParseError(path.string() + ":" + std::to_string(n) + ": malformed curve row");
    out.push_back(p);
  }
  return out;
}

}  // namespace mtdfl
