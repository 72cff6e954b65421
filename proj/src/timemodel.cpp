// SPDX-License-Identifier: Apache-2.0
#include "mtdfl/timemodel.hpp"

#include <algorithm>

#include "mtdfl/error.hpp"

namespace mtdfl {

double partial_agg_time(double bs_cpu, const Eigen::VectorXd& uplink_rates, const ComputeCosts& costs) {
  if (uplink_rates.size() == 0) return 0.0;
  if ((uplink_rates.array() <= 0.0).any()) throw InfeasibleLinkError("participant uplink rate must be positive");
  const double w = costs.model_size;
  const double transfer = (w / uplink_rates.array()).maxCoeff();
  return transfer + static_cast<double>(uplink_rates.size()) * w * costs.aggregate_cycles_per_unit / bs_cpu;
}

double total_agg_time(const Eigen::VectorXd& per_bs, const Eigen::VectorXd& backhaul,
                      const std::vector<bool>& active, const ComputeCosts& costs, double cloud_cpu,
                      AggregationMode mode) {
  if (per_bs.size() != backhaul.size() || static_cast<std::size_t>(per_bs.size()) != active.size())
    throw ShapeError("total_agg_time: per-BS vectors are not aligned");
  const double w = costs.model_size;
  double slowest = 0.0;
  int m_active = 0;
  for (Eigen::Index i = 0; i < per_bs.size(); ++i) {
    if (!active[i]) continue;
    ++m_active;
    double t = per_bs[i];
    if (mode == AggregationMode::EdgeCloud) {
      if (!(backhaul[i] > 0.0)) throw InfeasibleLinkError("backhaul rate must be positive");
      t += w / backhaul[i];
    }
    slowest = std::max(slowest, t);
  }
  if (m_active == 0) return 0.0;
  if (mode == AggregationMode::EdgeOnly) return slowest;
  return slowest + m_active * w * costs.aggregate_cycles_per_unit / cloud_cpu;
}

double download_time(double cloud_to_bs_rate, double bs_to_device_rate, const ComputeCosts& costs,
                     AggregationMode mode) {
  const double w = costs.model_size;
  if (w == 0.0) return 0.0;
  if (!(bs_to_device_rate > 0.0)) throw InfeasibleLinkError("downlink rate must be positive");
  if (mode == AggregationMode::EdgeOnly) return w / bs_to_device_rate;
  if (!(cloud_to_bs_rate > 0.0)) throw InfeasibleLinkError("cloud-to-BS rate must be positive");
  return w / cloud_to_bs_rate + w / bs_to_device_rate;
}

TimingBreakdown recognition_time(const std::vector<std::size_t>& participants,
                                 const NetworkSnapshot& snapshot,
                                 const std::vector<std::size_t>& data_sizes,
                                 const ComputeCosts& costs, double cloud_cpu, AggregationMode mode) {
  const auto m = static_cast<Eigen::Index>(snapshot.num_stations());
  const auto k = static_cast<Eigen::Index>(participants.size());
  TimingBreakdown out;
  out.participants = participants;
  out.partial_agg = Eigen::VectorXd::Zero(m);
  out.local_train.resize(k);
  out.download.resize(k);
  out.inference.resize(k);
  out.recognition.resize(k);
  if (k == 0) return out;
  if (data_sizes.size() != snapshot.num_devices()) throw ShapeError("data_sizes must have one entry per device");

  std::vector<std::vector<double>> rates_at(m);
  for (Eigen::Index p = 0; p < k; ++p) {
    const std::size_t u = participants[p];
    if (u >= snapshot.num_devices()) throw ShapeError("participant index out of range");
    if (!snapshot.covered(u)) throw InfeasibleLinkError("participant " + std::to_string(u) + " is out of coverage");
    const auto i = static_cast<Eigen::Index>(*snapshot.assignment[u]);
    rates_at[i].push_back(snapshot.uplink(u, i));
    out.local_train[p] = costs.local_epochs * static_cast<double>(data_sizes[u]) *
                         costs.train_cycles_per_sample / snapshot.dev_cpu[u];
    out.inference[p] = costs.inference_cycles / snapshot.dev_cpu[u];
    out.download[p] = download_time(snapshot.backhaul[i], snapshot.downlink(u, i), costs, mode);
  }
  std::vector<bool> active(m, false);
  for (Eigen::Index i = 0; i < m; ++i) {
    active[i] = !rates_at[i].empty();
    const Eigen::Map<const Eigen::VectorXd> r(rates_at[i].data(), static_cast<Eigen::Index>(rates_at[i].size()));
    out.partial_agg[i] = partial_agg_time(snapshot.bs_cpu[i], r, costs);
  }
  out.total_agg = total_agg_time(out.partial_agg, snapshot.backhaul, active, costs, cloud_cpu, mode);
  const double straggler = out.local_train.maxCoeff();
  out.recognition = (straggler + out.total_agg) + out.download.array() + out.inference.array();
  return out;
}

}  // namespace mtdfl
