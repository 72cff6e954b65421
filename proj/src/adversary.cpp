// SPDX-License-Identifier: Apache-2.0
#include "mtdfl/adversary.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <json.hpp>

#include "mtdfl/error.hpp"

namespace mtdfl {

AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "none") return AttackKind::None;
  if (s == "attack1") return AttackKind::Attack1;
  if (s == "attack2") return AttackKind::Attack2;
  throw ConfigError("unknown attack kind '" + s + "'");
}

std::string to_string(AttackKind k) {
  switch (k) {
    case AttackKind::None: return "none";
    case AttackKind::Attack1: return "attack1";
    case AttackKind::Attack2: return "attack2";
  }
  return "?";
}

bool CompromisePlan::is_compromised(std::size_t u) const {
  return std::find(compromised.begin(), compromised.end(), u) != compromised.end();
}

bool CompromisePlan::is_active(std::size_t u, std::size_t iteration) const {
  for (std::size_t k = 0; k < compromised.size(); ++k)
    if (compromised[k] == u) return iteration >= onset[k];
  return false;
}

std::vector<std::size_t> CompromisePlan::active_set(std::size_t iteration) const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < compromised.size(); ++k)
    if (iteration >= onset[k]) out.push_back(compromised[k]);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<bool>> CompromisePlan::activation_flags() const {
  std::vector<std::vector<bool>> flags(iterations, std::vector<bool>(devices, false));
  for (std::size_t t = 1; t <= iterations; ++t)
    for (std::size_t u : active_set(t)) flags[t - 1][u] = true;
  return flags;
}

std::string CompromisePlan::to_json() const {
  nlohmann::json j = {{"devices", devices}, {"iterations", iterations}, {"compromised", compromised},
                      {"onset", onset}, {"flags", activation_flags()}};
  return j.dump();
}

CompromisePlan CompromisePlan::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("compromise plan: ") + e.what());
  }
  CompromisePlan p;
  try {
    p.devices = j.at("devices").get<std::size_t>();
    p.iterations = j.at("iterations").get<std::size_t>();
    p.compromised = j.at("compromised").get<std::vector<std::size_t>>();
    p.onset = j.at("onset").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("compromise plan: ") + e.what());
  }
  if (p.onset.size() != p.compromised.size()) throw ParseError("compromise plan: onset/compromised length mismatch");
  for (std::size_t u : p.compromised)
    if (u >= p.devices) throw ParseError("compromise plan: device id out of range");
  return p;
}

CompromisePlan draw_compromise_plan(std::size_t devices, std::size_t iterations, const AttackConfig& cfg, Rng& rng) {
  if (cfg.min_compromised > cfg.max_compromised) throw ConfigError("min_compromised exceeds max_compromised");
  CompromisePlan plan;
  plan.devices = devices;
  plan.iterations = iterations;
  if (cfg.kind == AttackKind::None || devices == 0) return plan;
  const auto lo = static_cast<std::int64_t>(std::min(cfg.min_compromised, devices));
  const auto hi = static_cast<std::int64_t>(std::min(cfg.max_compromised, devices));
  const auto k = static_cast<std::size_t>(uniform_int(rng, lo, hi));
  std::vector<std::size_t> ids(devices);
  for (std::size_t u = 0; u < devices; ++u) ids[u] = u;
  for (std::size_t i = 0; i < k; ++i)
    std::swap(ids[i], ids[i + static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(devices - i - 1)))]);
  plan.compromised.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(k));
  for (std::size_t i = 0; i < k; ++i) {
    const bool first = (i == 0);
    plan.onset.push_back(cfg.onset == OnsetMode::AtStart || first || iterations <= 1
                             ? 1
                             : static_cast<std::size_t>(uniform_int(rng, 1, static_cast<std::int64_t>(iterations))));
  }
  return plan;
}

Eigen::VectorXd craft_attack1(const Eigen::VectorXd& global_estimate, const AttackConfig& cfg, Rng& rng) {
  if (!global_estimate.allFinite()) throw DomainError("attack 1 needs a finite global estimate");
  // global + lambda * (scale * global - global), folded into one coefficient.
  const double coef = 1.0 - cfg.lambda + cfg.lambda * cfg.scale;
  Eigen::VectorXd out = coef * global_estimate;
  if (cfg.noise_std > 0.0)
    for (Eigen::Index j = 0; j < out.size(); ++j) out[j] += cfg.noise_std * normal(rng);
  return out;
}

Eigen::VectorXd craft_attack2(const std::vector<Eigen::VectorXd>& models, double z, DeviationSign sign) {
  if (models.size() < 2) throw DegenerateStatisticsError("attack 2 needs at least two models");
  const Eigen::Index d = models.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& m : models) {
    if (m.size() != d) throw ShapeError("attack 2: model length mismatch");
    mean += m;
  }
  mean /= static_cast<double>(models.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(d);
  for (const auto& m : models) var += (m - mean).cwiseAbs2();
  const Eigen::VectorXd stdv = (var / static_cast<double>(models.size())).cwiseSqrt();
  if (sign == DeviationSign::Uniform) return mean - z * stdv;
  const Eigen::VectorXd s = mean.unaryExpr([](double v) { return v < 0.0 ? -1.0 : 1.0; });
  return mean - z * stdv.cwiseProduct(s);
}

double attack2_auto_z(std::size_t n, std::size_t m) {
  const double s = std::floor(static_cast<double>(n) / 2.0 + 1.0) - static_cast<double>(m);
  const double p = (static_cast<double>(n) - s) / static_cast<double>(n);
  if (!(p > 0.0 && p < 1.0)) throw DomainError("attack 2 auto z undefined for n=" + std::to_string(n) + ", m=" + std::to_string(m));
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

EventSequence inject_attack_traffic(EventSequence log, const EventSequence& flow, Eigen::Index window) {
  if (flow.size() != window + 1) throw ConfigError("attack flow must hold window + 1 events");
  if (!flow.labels.back()) throw ConfigError("attack flow must end with an attack-labelled event");
  log.append(flow);
  return log;
}

std::size_t poison_uploads(RoundResult& round, const CompromisePlan& plan, const AttackConfig& cfg,
                           std::size_t iteration, Rng& rng,
                           const std::vector<std::optional<Eigen::VectorXd>>& all_honest) {
  if (cfg.kind == AttackKind::None) return 0;
  std::vector<std::size_t> targets;
  for (std::size_t k = 0; k < round.participants.size(); ++k)
    if (plan.is_active(round.participants[k], iteration)) targets.push_back(k);
  round.poisoned.assign(round.participants.size(), false);
  if (targets.empty()) return 0;

  std::vector<Eigen::VectorXd> observed;
  if (cfg.estimate == EstimateSource::AllDevices && !all_honest.empty()) {
    for (const auto& m : all_honest)
      if (m) observed.push_back(*m);
  } else {
    for (const auto& u : round.uploads) observed.push_back(u.values);
  }

  Eigen::VectorXd attack2;
  if (cfg.kind == AttackKind::Attack2) {
    const double z = cfg.z_auto ? attack2_auto_z(round.participants.size(), targets.size()) : cfg.z;
    // A lone observed model has zero spread; the attacker then echoes it.
    attack2 = observed.size() >= 2 ? craft_attack2(observed, z, cfg.sign) : observed.front();
  }
  Eigen::VectorXd estimate = Eigen::VectorXd::Zero(observed.front().size());
  for (const auto& m : observed) estimate += m;
  estimate /= static_cast<double>(observed.size());

  for (std::size_t k : targets) {
    round.uploads[k].values = cfg.kind == AttackKind::Attack1 ? craft_attack1(estimate, cfg, rng) : attack2;
    round.poisoned[k] = true;
  }
  return targets.size();
}

}  // namespace mtdfl
