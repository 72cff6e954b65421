// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mtdfl {

/// Engine used for every stochastic component. The standard distributions are
/// implementation-defined, so sampling goes through the helpers below to keep
/// runs bit-identical across standard libraries.
using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

/// Derives an independent stream from a root seed and a path of labels,
/// e.g. make_stream(seed, {kData, episode, iteration}).
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Deterministic hash of a seed and a path; used for stateless draws.
std::uint64_t hash_path(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

/// Uniform in [0, 1) with 53 random bits.
double uniform01(Rng& rng);
double uniform01(std::uint64_t bits);
double uniform(Rng& rng, double lo, double hi);
/// Uniform integer in [lo, hi] inclusive.
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);
bool bernoulli(Rng& rng, double p);
/// Standard normal via Box-Muller.
double normal(Rng& rng);

/// Stream labels. Values are part of the determinism contract.
namespace stream {
inline constexpr std::uint64_t kMobility = 1;
inline constexpr std::uint64_t kData = 2;
inline constexpr std::uint64_t kAttack = 3;
inline constexpr std::uint64_t kTopology = 4;
inline constexpr std::uint64_t kLocalTrain = 5;
inline constexpr std::uint64_t kModelInit = 6;
inline constexpr std::uint64_t kTraffic = 7;
inline constexpr std::uint64_t kAnticipator = 8;
inline constexpr std::uint64_t kAgent = 9;
inline constexpr std::uint64_t kScenario = 10;
inline constexpr std::uint64_t kTestSet = 11;
inline constexpr std::uint64_t kPoison = 12;
}  // namespace stream

}  // namespace mtdfl
