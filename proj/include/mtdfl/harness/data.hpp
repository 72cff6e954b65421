// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "mtdfl/anticipator.hpp"
#include "mtdfl/flengine.hpp"
#include "mtdfl/random.hpp"

namespace mtdfl {

// ---- synthetic generators --------------------------------------------------

/// Two Gaussian classes N(+-sep/sqrt(F) * 1, I); label 1 with probability `balance`.
DeviceShard gen_synthetic_flows(std::size_t n, Eigen::Index features, double balance, double separation, Rng& rng);

/// Assigns every sample to a uniformly drawn device.
std::vector<DeviceShard> split_among_devices(const DeviceShard& pool, std::size_t devices, Rng& rng);

/// Draws n rows with replacement from a loaded pool.
DeviceShard resample(const DeviceShard& pool, std::size_t n, Rng& rng);

/// Benign events ~ N(0, I).
EventSequence gen_benign_events(std::size_t count, Eigen::Index features, Rng& rng);

/// A flow of window + 1 events whose mean ramps toward snr * u (u the unit
/// diagonal); only the last event carries the attack label.
EventSequence gen_attack_flow(Eigen::Index features, double snr, Eigen::Index window, Rng& rng);

/// Element 0 is a benign log of n_benign events; each further element is one
/// attack flow.
std::vector<EventSequence> gen_synthetic_traffic(std::size_t n_benign, std::size_t n_attack_flows,
                                                 Eigen::Index features, double snr, Eigen::Index window, Rng& rng);

/// Windows of every sequence produced by gen_synthetic_traffic, concatenated.
WindowedDataset windows_of(const std::vector<EventSequence>& sequences, Eigen::Index window);

/// Equal numbers of attack and benign windows (the smaller class count).
WindowedDataset balanced_subset(const WindowedDataset& data, Rng& rng);

// ---- CSV traces --------------------------------------------------------------

/// Flows: numeric feature columns plus a mandatory `label` column.
DeviceShard load_flows_csv(const std::string& path);

/// Events: `device_id`, `timestamp`, features..., `label`; one sequence per
/// device ordered by timestamp.
std::vector<EventSequence> load_events_csv(const std::string& path);

}  // namespace mtdfl
