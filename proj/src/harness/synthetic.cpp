// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include "mtdfl/error.hpp"
#include "mtdfl/harness/data.hpp"

namespace mtdfl {

DeviceShard gen_synthetic_flows(std::size_t n, Eigen::Index features, double balance, double separation, Rng& rng) {
  if (features <= 0) throw DomainError("feature width must be positive");
  DeviceShard s;
  s.x.resize(static_cast<Eigen::Index>(n), features);
  s.y.resize(static_cast<Eigen::Index>(n));
  const double mu = separation / std::sqrt(static_cast<double>(features));
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(n); ++r) {
    s.y[r] = bernoulli(rng, balance) ? 1 : 0;
    const double shift = s.y[r] ? mu : -mu;
    for (Eigen::Index c = 0; c < features; ++c) s.x(r, c) = normal(rng) + shift;
  }
  return s;
}

std::vector<DeviceShard> split_among_devices(const DeviceShard& pool, std::size_t devices, Rng& rng) {
  std::vector<std::vector<Eigen::Index>> rows(devices);
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(pool.size()); ++r)
    rows[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(devices) - 1))].push_back(r);
  std::vector<DeviceShard> out(devices);
  for (std::size_t u = 0; u < devices; ++u) {
    out[u].device = u;
    out[u].x.resize(static_cast<Eigen::Index>(rows[u].size()), pool.x.cols());
    out[u].y.resize(static_cast<Eigen::Index>(rows[u].size()));
    for (std::size_t k = 0; k < rows[u].size(); ++k) {
      out[u].x.row(static_cast<Eigen::Index>(k)) = pool.x.row(rows[u][k]);
      out[u].y[static_cast<Eigen::Index>(k)] = pool.y[rows[u][k]];
    }
  }
  return out;
}

DeviceShard resample(const DeviceShard& pool, std::size_t n, Rng& rng) {
  if (pool.empty()) throw DomainError("cannot resample an empty pool");
  DeviceShard s;
  s.x.resize(static_cast<Eigen::Index>(n), pool.x.cols());
  s.y.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(n); ++r) {
    const auto k = static_cast<Eigen::Index>(uniform_int(rng, 0, static_cast<std::int64_t>(pool.size()) - 1));
    s.x.row(r) = pool.x.row(k);
    s.y[r] = pool.y[k];
  }
  return s;
}

EventSequence gen_benign_events(std::size_t count, Eigen::Index features, Rng& rng) {
  EventSequence e;
  e.features.resize(static_cast<Eigen::Index>(count), features);
  for (Eigen::Index r = 0; r < e.features.rows(); ++r)
    for (Eigen::Index c = 0; c < features; ++c) e.features(r, c) = normal(rng);
  e.labels.assign(count, 0);
  return e;
}

EventSequence gen_attack_flow(Eigen::Index features, double snr, Eigen::Index window, Rng& rng) {
  const Eigen::Index len = window + 1;
  EventSequence e = gen_benign_events(static_cast<std::size_t>(len), features, rng);
  const double unit = 1.0 / std::sqrt(static_cast<double>(features));
  for (Eigen::Index k = 0; k < len; ++k)
    e.features.row(k).array() += snr * static_cast<double>(k + 1) / static_cast<double>(len) * unit;
  e.labels.back() = 1;
  return e;
}

std::vector<EventSequence> gen_synthetic_traffic(std::size_t n_benign, std::size_t n_attack_flows,
                                                 Eigen::Index features, double snr, Eigen::Index window, Rng& rng) {
  std::vector<EventSequence> out;
  out.push_back(gen_benign_events(n_benign, features, rng));
  for (std::size_t k = 0; k < n_attack_flows; ++k) out.push_back(gen_attack_flow(features, snr, window, rng));
  return out;
}

WindowedDataset windows_of(const std::vector<EventSequence>& sequences, Eigen::Index window) {
  WindowedDataset all;
  for (const auto& s : sequences)
    if (s.size() > window) all.append(build_windows(s, window));
  return all;
}

WindowedDataset balanced_subset(const WindowedDataset& data, Rng& rng) {
  std::vector<Eigen::Index> pos, neg;
  for (Eigen::Index r = 0; r < data.rows(); ++r) (data.y[r] ? pos : neg).push_back(r);
  const std::size_t k = std::min(pos.size(), neg.size());
  auto pick = [&](std::vector<Eigen::Index>& v) {
    for (std::size_t i = 0; i < k; ++i)
      std::swap(v[i], v[i + static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(v.size() - i - 1)))]);
    v.resize(k);
  };
  pick(pos);
  pick(neg);
  WindowedDataset out;
  out.window = data.window;
  out.width = data.width;
  out.x.resize(static_cast<Eigen::Index>(2 * k), data.x.cols());
  out.y.resize(static_cast<Eigen::Index>(2 * k));
  for (std::size_t i = 0; i < k; ++i) {
    out.x.row(static_cast<Eigen::Index>(2 * i)) = data.x.row(pos[i]);
    out.y[static_cast<Eigen::Index>(2 * i)] = 1;
    out.x.row(static_cast<Eigen::Index>(2 * i + 1)) = data.x.row(neg[i]);
    out.y[static_cast<Eigen::Index>(2 * i + 1)] = 0;
  }
  return out;
}

}  // namespace mtdfl
