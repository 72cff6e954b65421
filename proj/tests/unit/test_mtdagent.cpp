// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <limits>

#include "mtdfl/error.hpp"
#include "mtdfl/mtdagent.hpp"
#include "support.hpp"

using namespace mtdfl;
using mtdfl::test::rel_close;

namespace {

TopologyVector topo(std::initializer_list<int> bits) {
  TopologyVector t(static_cast<Eigen::Index>(bits.size()));
  Eigen::Index k = 0;
  for (int b : bits) t[k++] = static_cast<std::uint8_t>(b);
  return t;
}

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) out[k++] = x;
  return out;
}

NetworkSnapshot snapshot(std::size_t n, std::size_t m, double rate, double cpu) {
  NetworkSnapshot s;
  s.positions.assign(n, Eigen::Vector2d::Zero());
  s.assignment.assign(n, std::nullopt);
  s.uplink = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m), rate);
  s.downlink = s.uplink;
  s.bs_cpu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), cpu);
  s.dev_cpu = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), cpu);
  s.backhaul = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), 1e9);
  return s;
}

// Every network outputs exactly (q0, q1) regardless of the state.
PolicySet pinned(std::size_t devices, Eigen::Index dim, double q0, double q1) {
  Rng rng = make_stream(1, {});
  PolicySet p(devices, dim, AgentConfig{}, rng);
  for (std::size_t u = 0; u < devices; ++u) {
    p.net(u).weight(1).setZero();
    p.net(u).bias(1) << q0, q1;
  }
  return p;
}

}  // namespace

TEST_CASE("state layout") {
  CHECK(state_length(2, 1) == 9);
  CHECK(state_length(10, 4) == 74);

  NetworkSnapshot s = snapshot(2, 1, 0.0, 0.0);
  s.uplink << 5e6, 1e7;
  s.bs_cpu << 3e9;
  s.dev_cpu << 1.5e9, 0.0;
  AnticipationProfile prof;
  prof.p = vec({0.25, 0.9});
  const Eigen::VectorXd st = build_state(s, topo({1, 0}), prof, {1e7, 3e9});
  REQUIRE(st.size() == 9);
  CHECK(st == vec({0.5, 1.0, 1.0, 0.5, 0.0, 1.0, 0.0, 0.25, 0.9}));
}

TEST_CASE("state of an all-zero snapshot keeps only topology and profile") {
  AnticipationProfile prof;
  prof.p = vec({0.1, 0.2, 0.3});
  const Eigen::VectorXd st = build_state(snapshot(3, 2, 0.0, 0.0), topo({1, 1, 0}), prof, {1.0, 1.0});
  CHECK(st.head(6 + 2 + 3).isZero());
  CHECK(st.segment(11, 3) == vec({1, 1, 0}));
  CHECK(st.tail(3) == prof.p);
  CHECK(build_state(snapshot(3, 2, 0.0, 0.0), topo({1, 1, 0}), prof, {1.0, 1.0}) == st);
}

TEST_CASE("state construction rejects inconsistent inputs") {
  AnticipationProfile prof;
  prof.p = vec({0.1, 0.2});
  CHECK_THROWS_AS(build_state(snapshot(3, 1, 1.0, 1.0), topo({1, 1, 1}), prof, {1.0, 1.0}), ShapeError);
  CHECK_THROWS_AS(build_state(snapshot(2, 1, 1.0, 1.0), topo({1}), prof, {1.0, 1.0}), ShapeError);
}

TEST_CASE("confidence enforcement") {
  CHECK((enforce_confidence(topo({1, 1}), vec({0.8, 0.3}), 0.75) == topo({0, 1})).all());
  CHECK((enforce_confidence(topo({1}), vec({0.75}), 0.75) == topo({0})).all());
  CHECK((enforce_confidence(topo({1, 0, 1}), vec({0.1, 0.2, 0.74}), 0.75) == topo({1, 0, 1})).all());

  Rng rng = make_stream(2, {});
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = uniform_int(rng, 1, 12);
    TopologyVector t(n);
    Eigen::VectorXd p(n);
    for (Eigen::Index u = 0; u < n; ++u) t[u] = bernoulli(rng, 0.5), p[u] = uniform01(rng);
    const TopologyVector once = enforce_confidence(t, p, 0.75);
    REQUIRE((enforce_confidence(once, p, 0.75) == once).all());
    REQUIRE((once <= t).all());
    REQUIRE_FALSE(violates_confidence(once, p, 0.75));
  }
}

TEST_CASE("topology selection") {
  const Eigen::VectorXd state = Eigen::VectorXd::Constant(9, 0.3);
  Rng rng = make_stream(3, {});

  SUBCASE("pure exploitation takes the argmax") {
    const PolicySet p = pinned(6, 9, 0.7, 0.2);
    CHECK(select_topology(p, state, 1.0, rng).cast<int>().sum() == 6);
    const PolicySet q = pinned(6, 9, 0.2, 0.7);
    CHECK(select_topology(q, state, 1.0, rng).cast<int>().sum() == 0);
  }
  SUBCASE("ties go to participation") {
    const PolicySet p = pinned(4, 9, 0.4, 0.4);
    CHECK(select_topology(p, state, 1.0, rng).cast<int>().sum() == 4);
  }
  SUBCASE("pure exploration is a fair coin") {
    const PolicySet p = pinned(10, 9, 0.7, 0.2);
    double ones = 0.0;
    for (int k = 0; k < 1000; ++k) ones += select_topology(p, state, 0.0, rng).cast<double>().sum();
    CHECK(std::abs(ones / 1e4 - 0.5) <= 0.02);
  }
  SUBCASE("exploitation is deterministic for frozen policies") {
    Rng init = make_stream(4, {});
    const PolicySet p(8, 9, AgentConfig{}, init);
    Rng a = make_stream(5, {}), b = make_stream(6, {});
    CHECK((select_topology(p, state, 1.0, a) == select_topology(p, state, 1.0, b)).all());
  }
  CHECK_THROWS_AS(select_topology(pinned(1, 9, 0, 0), state, 1.5, rng), DomainError);
}

TEST_CASE("reward examples") {
  const AgentConfig cfg;
  const Eigen::VectorXd safe = vec({0.1, 0.2});
  CHECK(rel_close(compute_reward(vec({1.5, 2.5}), vec({2.0, 4.0}), topo({1, 1}), safe, cfg), 0.1));
  CHECK(compute_reward(vec({1.0}), vec({1.0}), topo({1, 0}), vec({0.8, 0.1}), cfg) == 0.0);
  CHECK(compute_reward(vec({1.0}), vec({1.0}), topo({0, 1}), vec({0.8, 0.1}), cfg) == 1.0 / 2.0);
  CHECK(compute_reward(Eigen::VectorXd(), Eigen::VectorXd(), topo({0, 0}), safe, cfg) == cfg.reward_cap);
  AgentConfig weighted = cfg;
  weighted.alpha = 2.0;
  weighted.beta = 0.5;
  CHECK(rel_close(compute_reward(vec({1.0}), vec({2.0}), topo({1}), vec({0.0}), weighted), 1.0 / 3.0));
}

TEST_CASE("reward properties") {
  const AgentConfig cfg;
  Rng rng = make_stream(7, {});
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = uniform_int(rng, 1, 10);
    TopologyVector t(n);
    Eigen::VectorXd p(n);
    for (Eigen::Index u = 0; u < n; ++u) t[u] = 1, p[u] = uniform(rng, 0.0, 0.7);
    const Eigen::Index culprit = uniform_int(rng, 0, n - 1);
    const Eigen::VectorXd f = Eigen::VectorXd::NullaryExpr(n, [&] { return uniform(rng, 0.01, 2.0); });
    const Eigen::VectorXd tm = Eigen::VectorXd::NullaryExpr(n, [&] { return uniform(rng, 1e-4, 1.0); });

    const double base = compute_reward(f, tm, t, p, cfg);
    REQUIRE(base > 0.0);
    Eigen::VectorXd worse_f = f, worse_t = tm;
    worse_f[culprit] += 0.1;
    worse_t[culprit] += 0.1;
    REQUIRE(compute_reward(worse_f, tm, t, p, cfg) < base);
    REQUIRE(compute_reward(f, worse_t, t, p, cfg) < base);

    p[culprit] = uniform(rng, cfg.confidence, 1.0);
    REQUIRE(compute_reward(f, tm, t, p, cfg) == 0.0);
  }
}

TEST_CASE("Bellman targets") {
  AgentConfig cfg;
  cfg.gamma = 0.1;
  const PolicySet p = pinned(2, 4, 0.5, -0.3);
  Transition t;
  t.state = Eigen::VectorXd::Zero(4);
  t.next_state = Eigen::VectorXd::Ones(4);
  t.action = topo({1, 0});
  t.reward = 0.1;
  CHECK(rel_close(bellman_target(p, 0, t, cfg), 0.15, 1e-14));
  t.terminal = true;
  t.reward = 0.2;
  CHECK(bellman_target(p, 1, t, cfg) == 0.2);
  t.terminal = false;
  cfg.gamma = 0.0;
  CHECK(bellman_target(p, 1, t, cfg) == 0.2);

  cfg.gamma = 0.1;
  cfg.mask_next_state = true;
  t.next_profile = vec({0.9, 0.1});
  t.reward = 0.0;
  CHECK(rel_close(bellman_target(p, 0, t, cfg), -0.03, 1e-12));
  CHECK(rel_close(bellman_target(p, 1, t, cfg), 0.05, 1e-12));
}

TEST_CASE("Bellman updates move the taken head toward its target") {
  AgentConfig cfg;
  cfg.gamma = 0.0;
  cfg.optimizer = tk::OptimizerKind::Sgd;
  cfg.lr = 0.05;
  Rng rng = make_stream(8, {});
  PolicySet p(3, 5, cfg, rng);
  Transition t;
  t.state = Eigen::VectorXd::NullaryExpr(5, [&] { return uniform01(rng); });
  t.next_state = t.state;
  t.action = topo({1, 0, 1});
  t.reward = 2.0;
  auto gap = [&] {
    double g = 0.0;
    for (std::size_t u = 0; u < 3; ++u) {
      const Eigen::Vector2d q = p.q_values(u, t.state);
      g += std::abs(q[t.action[static_cast<Eigen::Index>(u)] ? 0 : 1] - 2.0);
    }
    return g;
  };
  const double before = gap();
  for (int k = 0; k < 200; ++k) bellman_update(p, t, cfg);
  CHECK(gap() < 0.01 * before);

  t.reward = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(bellman_update(p, t, cfg), TrainingError);
  t.reward = 0.0;
  t.action = topo({1});
  CHECK_THROWS_AS(bellman_update(p, t, cfg), ShapeError);
}

TEST_CASE("exploitation schedule") {
  AgentConfig cfg;
  cfg.episodes = 11;
  CHECK(epsilon_at(0, cfg) == 0.1);
  CHECK(rel_close(epsilon_at(10, cfg), 0.98, 1e-15));
  CHECK(rel_close(epsilon_at(5, cfg), 0.54, 1e-15));
  cfg.episodes = 400;
  CHECK(rel_close(epsilon_at(399, cfg), 0.98, 1e-15));
  for (std::size_t e = 1; e < 400; ++e) REQUIRE(epsilon_at(e, cfg) > epsilon_at(e - 1, cfg));
}

TEST_CASE("reward normalizer tracks running maxima") {
  RewardNormalizer n;
  CHECK(n.loss(vec({2.0}))[0] == 2.0);
  n.observe(vec({0.5, 2.0}), vec({1e-3, 4e-3}));
  n.observe(vec({1.0}), vec({2e-3}));
  CHECK(n.loss(vec({1.0}))[0] == 0.5);
  CHECK(n.time(vec({2e-3}))[0] == 0.5);
}
