// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mtdfl/anticipator.hpp"
#include "mtdfl/flengine.hpp"
#include "mtdfl/random.hpp"

namespace mtdfl {

enum class AttackKind { None, Attack1, Attack2 };
enum class EstimateSource { Participants, AllDevices };
enum class OnsetMode { Staggered, AtStart };
/// Uniform subtracts z*std everywhere; AgainstMean pushes each dimension away
/// from the sign of its mean.
enum class DeviationSign { Uniform, AgainstMean };

AttackKind attack_kind_from_string(const std::string& s);
std::string to_string(AttackKind k);

struct AttackConfig {
  AttackKind kind = AttackKind::Attack1;
  double lambda = 1.0;
  double scale = -10.0;
  double noise_std = 0.01;
  double z = 1.0;
  bool z_auto = false;
  DeviationSign sign = DeviationSign::Uniform;
  EstimateSource estimate = EstimateSource::Participants;
  std::size_t min_compromised = 2;
  std::size_t max_compromised = 4;
  OnsetMode onset = OnsetMode::Staggered;
};

/// Compromised devices of one episode with the iteration (1-based) at which
/// each one turns malicious. Devices stay malicious after their onset.
struct CompromisePlan {
  std::size_t devices = 0;
  std::size_t iterations = 0;
  std::vector<std::size_t> compromised;
  std::vector<std::size_t> onset;

  bool is_compromised(std::size_t u) const;
  bool is_active(std::size_t u, std::size_t iteration) const;
  std::vector<std::size_t> active_set(std::size_t iteration) const;
  /// flags[t-1][u] for iterations 1..T.
  std::vector<std::vector<bool>> activation_flags() const;

  std::string to_json() const;
  static CompromisePlan from_json(const std::string& text);
};

CompromisePlan draw_compromise_plan(std::size_t devices, std::size_t iterations, const AttackConfig& cfg, Rng& rng);

/// global + lambda * (scale * global - global) + N(0, noise_std^2).
Eigen::VectorXd craft_attack1(const Eigen::VectorXd& global_estimate, const AttackConfig& cfg, Rng& rng);

/// mean - z * std per dimension, population std over the given models.
Eigen::VectorXd craft_attack2(const std::vector<Eigen::VectorXd>& models, double z,
                              DeviationSign sign = DeviationSign::Uniform);

/// Supporter-count rule: s = floor(n/2 + 1) - m, z = Phi^-1((n - s) / n).
double attack2_auto_z(std::size_t n, std::size_t m);

/// Appends the attack flow to the log. The flow must hold window + 1 events
/// and end with an attack-labelled event.
EventSequence inject_attack_traffic(EventSequence log, const EventSequence& flow, Eigen::Index window = 10);

/// Replaces the uploads of active compromised participants with crafted
/// models. `all_honest` (indexed by device) feeds the all-devices estimate
/// and may be empty otherwise. Returns the number of replaced uploads.
std::size_t poison_uploads(RoundResult& round, const CompromisePlan& plan, const AttackConfig& cfg,
                           std::size_t iteration, Rng& rng,
                           const std::vector<std::optional<Eigen::VectorXd>>& all_honest = {});

}  // namespace mtdfl
