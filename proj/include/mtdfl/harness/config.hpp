// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtdfl/adversary.hpp"
#include "mtdfl/anticipator.hpp"
#include "mtdfl/flengine.hpp"
#include "mtdfl/mtdagent.hpp"
#include "mtdfl/netmodel.hpp"
#include "mtdfl/timemodel.hpp"

namespace mtdfl {

enum class DefenseKind { FL, FLAttack, RndMtd, MtdFl };

struct DefenseMode {
  DefenseKind kind = DefenseKind::MtdFl;
  std::size_t blocked = 0;  // RND-MTD(k)

  bool attacked() const { return kind != DefenseKind::FL; }
  std::string name() const;
  static DefenseMode parse(const std::string& s);
  friend bool operator==(const DefenseMode&, const DefenseMode&) = default;
};

enum class AnticipatorKind { Gru, Lstm, Oracle, NoisyOracle };

struct StationConfig {
  double x = 0.0, y = 0.0;
  double radius = 300.0;
  double cpu = 3e9;
  double bandwidth = 28e6;
  double backhaul = 1e9;
  double tx_power_dbm = 34.0;
};

struct NetworkConfig {
  GridWorld world;
  TurnProbabilities turns;
  std::size_t devices = 10;
  double speed = 12.5;
  double cpu_min = 1.9e9;
  double cpu_max = 2.4e9;
  double device_tx_dbm = 23.0;
  std::vector<StationConfig> stations;
  double path_loss_coeff = 1.0;
  double path_loss_exponent = 5.0;
  double noise_dbm = -174.0;
  LogBase log_base = LogBase::Natural;
  double min_distance = 1.0;
  double dt = 10.0;
  double cloud_cpu = 3.2e9;

  ChannelParams channel() const;
  std::vector<BaseStation> base_stations() const;
};

struct TimingConfig {
  double train_cycles_per_sample = 800.0;
  double aggregate_cycles_per_unit = 10.0;
  double inference_cycles = 1e4;
  AggregationMode aggregation = AggregationMode::EdgeOnly;
};

enum class LossSource { Local, Global };

struct FlConfig {
  Eigen::Index features = 16;
  std::vector<Eigen::Index> hidden;
  LocalTrainConfig local;
  Weighting weighting = Weighting::DataSize;
  std::size_t train_min = 2000;
  std::size_t train_max = 10000;
  std::size_t test_size = 2500;
  double separation = 1.5;
  double class_balance = 0.5;
  bool reset_per_episode = true;
  LossSource loss_source = LossSource::Local;
  std::string train_csv;
  std::string test_csv;
};

struct AnticipatorConfig {
  AnticipatorKind kind = AnticipatorKind::Oracle;
  AnticipatorTrainConfig train;
  Eigen::Index window = 10;
  Eigen::Index features = 16;  // event feature width
  double fp = 0.24;
  double fn = 0.27;
  double snr = 3.0;
  std::size_t benign_history = 20;
  std::size_t benign_per_iteration = 11;
  std::size_t train_benign = 3000;
  std::size_t train_flows = 300;
  std::size_t test_benign = 3000;
  std::size_t test_flows = 300;
  std::string events_csv;
  std::string checkpoint;
};

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::size_t runs = 1;
  std::size_t episodes = 400;
  std::size_t eval_episodes = 5;
  double eval_exploit = 1.0;
  std::size_t iterations = 5;
  std::vector<DefenseMode> modes;
  std::string run_id = "run";
  NetworkConfig network;
  TimingConfig timing;
  FlConfig fl;
  AttackConfig attack;
  AnticipatorConfig anticipator;
  AgentConfig agent;

  /// Parameter count of the task model, used as |w_g|.
  Eigen::Index model_size() const;
  ComputeCosts costs() const;
};

/// The reference scenario: 10 devices on a 4x4 grid, two BSs, Attack 1,
/// oracle anticipator, all four defense modes.
ScenarioConfig reference_scenario();

/// Parses a JSON config over the reference defaults. Unknown keys and a
/// missing seed are errors.
ScenarioConfig parse_config(const std::string& json_text);
ScenarioConfig load_config(const std::string& path);
std::string config_to_json(const ScenarioConfig& cfg);
void validate(const ScenarioConfig& cfg);

}  // namespace mtdfl
