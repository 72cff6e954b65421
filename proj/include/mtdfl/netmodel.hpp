// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "mtdfl/random.hpp"

namespace mtdfl {

/// Square Manhattan grid. Roads run along every multiple of cell_width in
/// both axes, from 0 to cells_per_side * cell_width inclusive.
struct GridWorld {
  int cells_per_side = 4;
  double cell_width = 100.0;

  double extent() const { return cells_per_side * cell_width; }
  bool on_grid(const Eigen::Vector2d& p) const;
  bool is_junction(const Eigen::Vector2d& p) const;
};

enum class Heading { North, South, East, West };
enum class Turn { Straight, Right, Left };

Eigen::Vector2d direction_of(Heading h);
Heading turned(Heading h, Turn t);
Heading reversed(Heading h);

struct TurnProbabilities {
  double straight = 0.5;
  double right = 0.25;
  double left = 0.25;
};

struct Device {
  std::size_t id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  Heading heading = Heading::East;
  double speed = 12.5;       // m/s
  double cpu_freq = 2e9;     // cycles/s
  double tx_power = 0.2;     // W
  std::size_t data_size = 0;
};

struct BaseStation {
  std::size_t id = 0;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double coverage_radius = 300.0;
  double cpu_freq = 3e9;
  double bandwidth = 28e6;
  double backhaul_rate = 1e9;
  double tx_power = 2.5;
};

enum class LogBase { Natural, Two };

struct ChannelParams {
  double path_loss_coeff = 1.0;
  double path_loss_exponent = 5.0;
  double noise_power = 3.981071705534973e-21;  // -174 dBm
  LogBase log_base = LogBase::Natural;
  double min_distance = 1.0;
};

/// Device index -> serving BS index, or empty when out of every coverage disc.
using Assignment = std::vector<std::optional<std::size_t>>;

struct NetworkSnapshot {
  std::size_t iteration = 0;
  std::vector<Eigen::Vector2d> positions;
  Assignment assignment;
  Eigen::MatrixXd uplink;    // N x M, device -> BS
  Eigen::MatrixXd downlink;  // N x M, BS -> device
  Eigen::VectorXd bs_cpu;
  Eigen::VectorXd dev_cpu;
  Eigen::VectorXd backhaul;

  std::size_t num_devices() const { return positions.size(); }
  std::size_t num_stations() const { return static_cast<std::size_t>(bs_cpu.size()); }
  bool covered(std::size_t u) const { return assignment.at(u).has_value(); }
};

double dbm_to_watts(double dbm);

Turn sample_turn(Rng& rng, const TurnProbabilities& p);

/// Advances each device by speed * dt along the road network. Junctions
/// resample the heading; a heading that would leave the world is reversed.
std::vector<Device> step_mobility(const GridWorld& world, std::vector<Device> devices, double dt,
                                  Rng& rng, const TurnProbabilities& turns = {});

/// Uniform position on a random road with a heading along that road.
Device place_on_grid(const GridWorld& world, Rng& rng, Device proto);

Assignment assign_coverage(const std::vector<Device>& devices,
                           const std::vector<BaseStation>& stations);

double channel_gain(double distance, const ChannelParams& params);

double link_rate(double bandwidth, double tx_power, double gain, double noise,
                 LogBase base = LogBase::Natural);

NetworkSnapshot build_snapshot(std::size_t iteration, const std::vector<Device>& devices,
                               const std::vector<BaseStation>& stations,
                               const ChannelParams& params);

}  // namespace mtdfl
