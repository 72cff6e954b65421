// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "mtdfl/anticipator.hpp"
#include "mtdfl/netmodel.hpp"
#include "mtdfl/random.hpp"
#include "mtdfl/tensorkit.hpp"

namespace mtdfl {

/// x_u per device: 1 participates, 0 abstains.
using TopologyVector = Eigen::Array<std::uint8_t, Eigen::Dynamic, 1>;

struct AgentConfig {
  double gamma = 0.1;
  double exploit_start = 0.1;
  double exploit_final = 0.98;
  std::size_t episodes = 400;
  double alpha = 1.0;
  double beta = 1.0;
  double confidence = 0.75;  // C_H
  double lr = 1e-3;
  tk::OptimizerKind optimizer = tk::OptimizerKind::Adam;
  Eigen::Index hidden = 16;
  tk::Activation hidden_activation = tk::Activation::Softmax;
  bool softmax_output = false;
  double reward_cap = 1e9;
  double reward_floor = 1e-9;
  bool force_participant = true;
  bool mask_next_state = false;
};

/// Divisors that map raw state blocks into [0, 1].
struct StateScales {
  double max_rate = 1.0;
  double max_cpu = 1.0;
};

inline Eigen::Index state_length(Eigen::Index n, Eigen::Index m) { return n * m + m + 3 * n; }

/// [rates (row-major N*M) | BS cpu | device cpu | topology | profile].
Eigen::VectorXd build_state(const NetworkSnapshot& snapshot, const TopologyVector& topology,
                            const AnticipationProfile& profile, const StateScales& scales);

/// Clears x_u wherever p_u >= C_H.
TopologyVector enforce_confidence(const TopologyVector& proposed, const Eigen::VectorXd& profile, double c_h);

/// True when some participant has p_u >= C_H.
bool violates_confidence(const TopologyVector& topology, const Eigen::VectorXd& profile, double c_h);

/// Head 0 is Q(participate), head 1 is Q(abstain).
class PolicySet {
 public:
  PolicySet() = default;
  PolicySet(std::size_t devices, Eigen::Index state_dim, const AgentConfig& cfg, Rng& rng);

  std::size_t size() const { return nets_.size(); }
  Eigen::Index state_dim() const { return state_dim_; }
  Eigen::Vector2d q_values(std::size_t u, const Eigen::VectorXd& state) const;
  tk::DenseNet<double>& net(std::size_t u) { return nets_.at(u); }
  const tk::DenseNet<double>& net(std::size_t u) const { return nets_.at(u); }
  tk::Optimizer<double>& optimizer(std::size_t u) { return opts_.at(u); }

 private:
  Eigen::Index state_dim_ = 0;
  std::vector<tk::DenseNet<double>> nets_;
  std::vector<tk::Optimizer<double>> opts_;
};

std::vector<tk::LayerSpec> policy_layers(Eigen::Index state_dim, const AgentConfig& cfg);

/// Exploits (argmax, ties to participate) with probability
/// `exploit_prob`, otherwise a fair coin, independently per device.
TopologyVector select_topology(const PolicySet& policies, const Eigen::VectorXd& state, double exploit_prob, Rng& rng);

/// 0 on a violation; otherwise 1 / sum(alpha * F_u + beta * T_u), capped when
/// the denominator falls below the floor.
double compute_reward(const Eigen::VectorXd& losses, const Eigen::VectorXd& times, const TopologyVector& topology,
                      const Eigen::VectorXd& profile, const AgentConfig& cfg);

struct Transition {
  Eigen::VectorXd state;
  TopologyVector action;
  double reward = 0.0;
  Eigen::VectorXd next_state;
  bool terminal = false;
  Eigen::VectorXd next_profile;  // used only when masking next-state actions
};

/// Bellman target of one device: r + gamma * max_a Q_u(s', a), or r if terminal.
double bellman_target(const PolicySet& policies, std::size_t u, const Transition& t, const AgentConfig& cfg);

/// One squared-error step per device on the head that was taken.
void bellman_update(PolicySet& policies, const Transition& t, const AgentConfig& cfg);

/// Linear from exploit_start at episode 0 to exploit_final at the last episode.
double epsilon_at(std::size_t episode, const AgentConfig& cfg);

/// Running maxima that rescale loss and time before they enter the reward.
struct RewardNormalizer {
  double max_loss = 0.0;
  double max_time = 0.0;

  void observe(const Eigen::VectorXd& losses, const Eigen::VectorXd& times);
  Eigen::VectorXd loss(const Eigen::VectorXd& v) const;
  Eigen::VectorXd time(const Eigen::VectorXd& v) const;
};

}  // namespace mtdfl
