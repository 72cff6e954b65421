// SPDX-License-Identifier: Apache-2.0
#include "mtdfl/mtdagent.hpp"

#include <cmath>

#include "mtdfl/error.hpp"

namespace mtdfl {

Eigen::VectorXd build_state(const NetworkSnapshot& snapshot, const TopologyVector& topology,
                            const AnticipationProfile& profile, const StateScales& scales) {
  const auto n = static_cast<Eigen::Index>(snapshot.num_devices());
  const auto m = static_cast<Eigen::Index>(snapshot.num_stations());
  if (snapshot.uplink.rows() != n || snapshot.uplink.cols() != m || snapshot.dev_cpu.size() != n ||
      topology.size() != n || profile.p.size() != n)
    throw ShapeError("build_state: inconsistent device or station counts");
  if (!(scales.max_rate > 0.0) || !(scales.max_cpu > 0.0)) throw DomainError("state scales must be positive");
  Eigen::VectorXd s(state_length(n, m));
  Eigen::Index k = 0;
  for (Eigen::Index u = 0; u < n; ++u)
    for (Eigen::Index i = 0; i < m; ++i) s[k++] = snapshot.uplink(u, i) / scales.max_rate;
  s.segment(k, m) = snapshot.bs_cpu / scales.max_cpu;
  k += m;
  s.segment(k, n) = snapshot.dev_cpu / scales.max_cpu;
  k += n;
  s.segment(k, n) = topology.cast<double>().matrix();
  k += n;
  s.segment(k, n) = profile.p;
  return s;
}

TopologyVector enforce_confidence(const TopologyVector& proposed, const Eigen::VectorXd& profile, double c_h) {
  if (proposed.size() != profile.size()) throw ShapeError("enforce_confidence: length mismatch");
  TopologyVector out = proposed;
  for (Eigen::Index u = 0; u < out.size(); ++u)
    if (profile[u] >= c_h) out[u] = 0;
  return out;
}

bool violates_confidence(const TopologyVector& topology, const Eigen::VectorXd& profile, double c_h) {
  if (topology.size() != profile.size()) throw ShapeError("violates_confidence: length mismatch");
  for (Eigen::Index u = 0; u < topology.size(); ++u)
    if (topology[u] && profile[u] >= c_h) return true;
  return false;
}

std::vector<tk::LayerSpec> policy_layers(Eigen::Index state_dim, const AgentConfig& cfg) {
  return {{state_dim, cfg.hidden, cfg.hidden_activation},
          {cfg.hidden, 2, cfg.softmax_output ? tk::Activation::Softmax : tk::Activation::Identity}};
}

PolicySet::PolicySet(std::size_t devices, Eigen::Index state_dim, const AgentConfig& cfg, Rng& rng)
    : state_dim_(state_dim) {
  for (std::size_t u = 0; u < devices; ++u) {
    tk::DenseNet<double> net(policy_layers(state_dim, cfg));
    net.init_uniform(rng);
    nets_.push_back(std::move(net));
    opts_.emplace_back(cfg.optimizer, cfg.lr);
  }
}

Eigen::Vector2d PolicySet::q_values(std::size_t u, const Eigen::VectorXd& state) const {
  if (state.size() != state_dim_) throw ShapeError("policy input width mismatch");
  const tk::Mat<double> q = nets_.at(u).forward(state.transpose());
  return {q(0, 0), q(0, 1)};
}

TopologyVector select_topology(const PolicySet& policies, const Eigen::VectorXd& state, double exploit_prob, Rng& rng) {
  if (exploit_prob < 0.0 || exploit_prob > 1.0) throw DomainError("exploit probability must lie in [0, 1]");
  TopologyVector tp(static_cast<Eigen::Index>(policies.size()));
  for (std::size_t u = 0; u < policies.size(); ++u) {
    if (uniform01(rng) < exploit_prob) {
      const Eigen::Vector2d q = policies.q_values(u, state);
      tp[static_cast<Eigen::Index>(u)] = q[0] >= q[1] ? 1 : 0;
    } else {
      tp[static_cast<Eigen::Index>(u)] = bernoulli(rng, 0.5) ? 1 : 0;
    }
  }
  return tp;
}

double compute_reward(const Eigen::VectorXd& losses, const Eigen::VectorXd& times, const TopologyVector& topology,
                      const Eigen::VectorXd& profile, const AgentConfig& cfg) {
  if (losses.size() != times.size()) throw ShapeError("compute_reward: losses and times differ in length");
  if (violates_confidence(topology, profile, cfg.confidence)) return 0.0;
  const double denom = cfg.alpha * losses.sum() + cfg.beta * times.sum();
  if (denom < cfg.reward_floor) return cfg.reward_cap;
  return 1.0 / denom;
}

double bellman_target(const PolicySet& policies, std::size_t u, const Transition& t, const AgentConfig& cfg) {
  if (t.terminal) return t.reward;
  const Eigen::Vector2d q = policies.q_values(u, t.next_state);
  double best = std::max(q[0], q[1]);
  if (cfg.mask_next_state && t.next_profile.size() > static_cast<Eigen::Index>(u) &&
      t.next_profile[static_cast<Eigen::Index>(u)] >= cfg.confidence)
    best = q[1];
  return t.reward + cfg.gamma * best;
}

void bellman_update(PolicySet& policies, const Transition& t, const AgentConfig& cfg) {
  if (t.action.size() != static_cast<Eigen::Index>(policies.size())) throw ShapeError("transition action length mismatch");
  std::vector<double> targets(policies.size());
  // Targets come from the pre-update networks so device order does not matter.
  for (std::size_t u = 0; u < policies.size(); ++u) {
    targets[u] = bellman_target(policies, u, t, cfg);
    if (!std::isfinite(targets[u])) throw TrainingError("non-finite Bellman target");
  }
  for (std::size_t u = 0; u < policies.size(); ++u) {
    auto& net = policies.net(u);
    tk::DenseNet<double>::Tape tape;
    const tk::Mat<double> q = net.forward(t.state.transpose(), &tape);
    const Eigen::Index head = t.action[static_cast<Eigen::Index>(u)] ? 0 : 1;
    tk::Mat<double> d = tk::Mat<double>::Zero(1, 2);
    d(0, head) = 2.0 * (q(0, head) - targets[u]);
    policies.optimizer(u).step(net.params(), net.backward(tape, d));
  }
}

double epsilon_at(std::size_t episode, const AgentConfig& cfg) {
  if (cfg.episodes <= 1) return cfg.exploit_final;
  const double frac = std::min(1.0, static_cast<double>(episode) / static_cast<double>(cfg.episodes - 1));
  return cfg.exploit_start + frac * (cfg.exploit_final - cfg.exploit_start);
}

void RewardNormalizer::observe(const Eigen::VectorXd& losses, const Eigen::VectorXd& times) {
  if (losses.size()) max_loss = std::max(max_loss, losses.maxCoeff());
  if (times.size()) max_time = std::max(max_time, times.maxCoeff());
}

Eigen::VectorXd RewardNormalizer::loss(const Eigen::VectorXd& v) const {
  return max_loss > 0.0 ? Eigen::VectorXd(v / max_loss) : v;
}

Eigen::VectorXd RewardNormalizer::time(const Eigen::VectorXd& v) const {
  return max_time > 0.0 ? Eigen::VectorXd(v / max_time) : v;
}

}  // namespace mtdfl
