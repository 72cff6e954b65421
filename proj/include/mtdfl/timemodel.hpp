// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "mtdfl/netmodel.hpp"

namespace mtdfl {

struct ComputeCosts {
  double train_cycles_per_sample = 800.0;
  double aggregate_cycles_per_unit = 10.0;
  double inference_cycles = 1e4;
  int local_epochs = 5;
  double model_size = 34.0;  // parameter units in the exchanged model
};

/// EdgeOnly drops the backhaul and cloud terms; EdgeCloud keeps the full hierarchy.
enum class AggregationMode { EdgeOnly, EdgeCloud };

/// Per-round timing. Per-device vectors are aligned with `participants`.
struct TimingBreakdown {
  std::vector<std::size_t> participants;
  Eigen::VectorXd partial_agg;  // per BS, zero where inactive
  double total_agg = 0.0;
  Eigen::VectorXd local_train;
  Eigen::VectorXd download;
  Eigen::VectorXd inference;
  Eigen::VectorXd recognition;

  bool empty() const { return participants.empty(); }
};

/// Aggregation time at one BS given the uplink rates of the devices it serves.
double partial_agg_time(double bs_cpu, const Eigen::VectorXd& uplink_rates, const ComputeCosts& costs);

/// Max over active BSs of (partial + backhaul transfer) plus the cloud term scaled
/// by the number of active BSs.
double total_agg_time(const Eigen::VectorXd& per_bs, const Eigen::VectorXd& backhaul,
                      const std::vector<bool>& active, const ComputeCosts& costs, double cloud_cpu,
                      AggregationMode mode = AggregationMode::EdgeCloud);

double download_time(double cloud_to_bs_rate, double bs_to_device_rate, const ComputeCosts& costs,
                     AggregationMode mode = AggregationMode::EdgeCloud);

/// Synchronous-round timing: every participant waits for the slowest trainer.
TimingBreakdown recognition_time(const std::vector<std::size_t>& participants,
                                 const NetworkSnapshot& snapshot,
                                 const std::vector<std::size_t>& data_sizes,
                                 const ComputeCosts& costs, double cloud_cpu,
                                 AggregationMode mode = AggregationMode::EdgeCloud);

}  // namespace mtdfl
