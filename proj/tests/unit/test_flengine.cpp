// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "mtdfl/error.hpp"
#include "mtdfl/flengine.hpp"
#include "support.hpp"

using namespace mtdfl;
using mtdfl::test::rel_close;

namespace {

ModelParams params_of(std::initializer_list<double> v) {
  ModelParams p;
  p.values.resize(static_cast<Eigen::Index>(v.size()));
  Eigen::Index k = 0;
  for (double x : v) p.values[k++] = x;
  return p;
}

DeviceShard toy_shard(Rng& rng, std::size_t n) {
  DeviceShard s;
  s.x.resize(static_cast<Eigen::Index>(n), 2);
  s.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    const double shift = label ? 2.0 : -2.0;
    s.x(static_cast<Eigen::Index>(i), 0) = shift + 0.3 * normal(rng);
    s.x(static_cast<Eigen::Index>(i), 1) = shift + 0.3 * normal(rng);
    s.y[static_cast<Eigen::Index>(i)] = label;
  }
  return s;
}

}  // namespace

TEST_CASE("local training on an already fitted shard changes nothing") {
  const auto layers = make_task_layers(2, {});
  ModelParams g{Eigen::VectorXd::Zero(6), layers};
  g.values[4] = 50.0;  // bias of class 0
  g.values[5] = -50.0;
  DeviceShard s;
  s.x = Eigen::MatrixXd::Zero(5, 2);
  s.y = Eigen::VectorXi::Zero(5);
  LocalTrainConfig cfg;
  cfg.l2 = 0.0;
  Rng rng = make_stream(1, {});
  const auto r = local_train(g, s, cfg, rng);
  REQUIRE(r.has_value());
  CHECK((r->params.values - g.values).cwiseAbs().maxCoeff() < 1e-30);
  CHECK(r->loss < 1e-30);
}

TEST_CASE("zero local epochs return the global model and its loss") {
  Rng rng = make_stream(2, {});
  const auto layers = make_task_layers(2, {});
  const ModelParams g = init_model(layers, rng);
  const DeviceShard s = toy_shard(rng, 40);
  LocalTrainConfig cfg;
  cfg.epochs = 0;
  const auto r = local_train(g, s, cfg, rng);
  REQUIRE(r.has_value());
  CHECK(r->params.values == g.values);
  CHECK(r->loss == evaluate(g, s).loss);
}

TEST_CASE("more local epochs lower the loss on separable data") {
  Rng data = make_stream(3, {1});
  const DeviceShard s = toy_shard(data, 200);
  Rng init = make_stream(3, {2});
  const ModelParams g = init_model(make_task_layers(2, {}), init);
  LocalTrainConfig one;
  one.epochs = 1;
  one.l2 = 0.0;
  LocalTrainConfig five = one;
  five.epochs = 5;
  Rng r1 = make_stream(3, {3}), r5 = make_stream(3, {3});
  CHECK(local_train(g, s, five, r5)->loss < local_train(g, s, one, r1)->loss);
}

TEST_CASE("empty shard is skipped") {
  Rng rng = make_stream(4, {});
  const ModelParams g = init_model(make_task_layers(2, {}), rng);
  CHECK_FALSE(local_train(g, DeviceShard{}, LocalTrainConfig{}, rng).has_value());
}

TEST_CASE("partial aggregation examples") {
  const auto a = aggregate_partial({{params_of({1}), 1.0}, {params_of({3}), 1.0}});
  CHECK(a.params.values[0] == 2.0);
  CHECK(a.weight == 2.0);
  const auto b = aggregate_partial({{params_of({1}), 1.0}, {params_of({4}), 3.0}});
  CHECK(rel_close(b.params.values[0], 3.25, 1e-15));
  CHECK(b.weight == 4.0);
  const auto c = aggregate_partial({{params_of({0.7, -2}), 5.0}});
  CHECK(c.params.values == params_of({0.7, -2}).values);
  CHECK_THROWS_AS(aggregate_partial({{params_of({1}), 1.0}, {params_of({1, 2}), 1.0}}), AggregationError);
  CHECK_THROWS_AS(aggregate_partial({}), AggregationError);
}

TEST_CASE("global aggregation examples") {
  const auto p = params_of({0.1, 0.2});
  CHECK(aggregate_global({{p, 3.0}, {p, 7.0}}).values == p.values);
  CHECK(aggregate_global({{p, 3.0}}).values == p.values);

  // (2,2) grouping of four uploads equals the flat weighted mean.
  const std::vector<WeightedModel> ups{{params_of({1, 0}), 10}, {params_of({2, 1}), 30},
                                       {params_of({-1, 4}), 20}, {params_of({5, -3}), 40}};
  const ModelParams h = aggregate_hierarchical(ups, {0, 0, 1, 1});
  const ModelParams flat = aggregate_partial(ups).params;
  CHECK(std::abs(h.values[0] - flat.values[0]) <= 1e-12);
  CHECK(std::abs(h.values[1] - flat.values[1]) <= 1e-12);
  CHECK(rel_close(flat.values[0], (10 * 1 + 30 * 2 - 20 + 200) / 100.0, 1e-14));
}

TEST_CASE("aggregation is permutation invariant and fixes equal uploads") {
  Rng rng = make_stream(6, {});
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(uniform_int(rng, 0, 9));
    std::vector<WeightedModel> ups;
    std::vector<std::size_t> group;
    for (std::size_t k = 0; k < n; ++k) {
      ups.push_back({params_of({normal(rng), normal(rng), normal(rng)}), uniform(rng, 1, 100)});
      group.push_back(static_cast<std::size_t>(uniform_int(rng, 0, 2)));
    }
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<WeightedModel> ups2;
    std::vector<std::size_t> group2;
    for (std::size_t k : perm) ups2.push_back(ups[k]), group2.push_back(group[k]);
    const auto a = aggregate_hierarchical(ups, group), b = aggregate_hierarchical(ups2, group2);
    REQUIRE((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-12);

    for (auto& u : ups) u.params = ups.front().params;
    REQUIRE(aggregate_hierarchical(ups, group).values == ups.front().params.values);
  }
}

TEST_CASE("evaluation counts correct predictions") {
  const auto layers = make_task_layers(1, {});
  DeviceShard s;
  s.x = Eigen::MatrixXd::Zero(10, 1);
  s.y.resize(10);
  s.y << 0, 0, 0, 0, 0, 0, 0, 1, 1, 1;
  ModelParams majority{Eigen::VectorXd::Zero(4), layers};
  majority.values[2] = 1.0;
  CHECK(rel_close(evaluate(majority, s).accuracy, 0.7));

  DeviceShard sep;
  sep.x.resize(4, 1);
  sep.x << -1, -2, 1, 2;
  sep.y.resize(4);
  sep.y << 0, 0, 1, 1;
  ModelParams perfect{Eigen::VectorXd::Zero(4), layers};
  perfect.values[0] = -5.0;  // class-0 logit weight
  perfect.values[1] = 5.0;   // class-1 logit weight
  CHECK(evaluate(perfect, sep).accuracy == 1.0);

  Rng rng = make_stream(7, {});
  for (int k = 0; k < 20; ++k) {
    const double acc = evaluate(init_model(make_task_layers(2, {}), rng), toy_shard(rng, 30)).accuracy;
    REQUIRE(acc >= 0.0);
    REQUIRE(acc <= 1.0);
  }
}

TEST_CASE("flow labelling uses a strict threshold") {
  auto flow = [](int bad) {
    std::vector<bool> v(10, false);
    std::fill(v.begin(), v.begin() + bad, true);
    return v;
  };
  CHECK(label_flow(flow(8), 0.7));
  CHECK_FALSE(label_flow(flow(7), 0.7));
  CHECK_FALSE(label_flow(flow(0), 0.7));
}
