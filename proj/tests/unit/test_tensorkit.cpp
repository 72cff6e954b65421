// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <limits>
#include <sstream>

#include "mtdfl/error.hpp"
#include "mtdfl/flengine.hpp"
#include "mtdfl/mtdagent.hpp"
#include "mtdfl/tensorkit.hpp"
#include "support.hpp"

using namespace mtdfl;
using namespace mtdfl::tk;
using mtdfl::test::rel_close;

namespace {

Mat<double> random_mat(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Mat<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

Eigen::VectorXi random_labels(Eigen::Index n, int classes, Rng& rng) {
  Eigen::VectorXi y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = static_cast<int>(uniform_int(rng, 0, classes - 1));
  return y;
}

double dense_grad_error(DenseNet<double> net, const Mat<double>& x, const Eigen::VectorXi& y, LossKind kind) {
  typename DenseNet<double>::Tape tape;
  const Mat<double> probs = net.forward(x, &tape);
  const auto lg = loss_and_grad(kind, probs, y);
  const Vec<double> analytic = net.backward(tape, lg.grad);
  auto loss = [&](const Vec<double>& p) {
    DenseNet<double> n = net;
    n.set_params(p);
    return loss_and_grad(kind, n.forward(x), y).value;
  };
  return grad_check(net.params(), loss, analytic);
}

double recurrent_grad_error(CellKind kind, Eigen::Index steps, std::uint64_t seed) {
  Rng rng = make_stream(seed, {});
  RecurrentClassifier<double> net(kind, 4, 5);
  net.init_uniform(rng);
  const Mat<double> x = random_mat(6, steps * 4, rng);
  const Eigen::VectorXi y = random_labels(6, 2, rng);
  typename RecurrentClassifier<double>::Tape tape;
  const Mat<double> probs = net.forward(x, &tape);
  const auto lg = loss_and_grad(LossKind::Mse, probs, y);
  const Vec<double> analytic = net.backward(tape, lg.grad);
  auto loss = [&](const Vec<double>& p) {
    RecurrentClassifier<double> n = net;
    n.set_params(p);
    return loss_and_grad(LossKind::Mse, n.forward(x), y).value;
  };
  return grad_check(net.params(), loss, analytic);
}

}  // namespace

TEST_CASE("dense forward examples") {
  SUBCASE("zero weights give the bias") {
    DenseNet<double> net({{3, 2, Activation::Identity}});
    net.bias(0) << 0.25, -1.5;
    const Mat<double> out = dense_forward(net, Mat<double>(Mat<double>::Ones(4, 3)));
    for (Eigen::Index r = 0; r < 4; ++r) {
      CHECK(out(r, 0) == 0.25);
      CHECK(out(r, 1) == -1.5);
    }
  }
  SUBCASE("softmax of equal logits") {
    DenseNet<double> net({{1, 2, Activation::Softmax}});
    const Mat<double> out = dense_forward(net, Mat<double>(Mat<double>::Constant(1, 1, 3.0)));
    CHECK(out(0, 0) == 0.5);
    CHECK(out(0, 1) == 0.5);
  }
  SUBCASE("scalar affine layer") {
    DenseNet<double> net({{1, 1, Activation::Identity}});
    net.weight(0)(0, 0) = 2.0;
    net.bias(0)[0] = 1.0;
    CHECK(dense_forward(net, Mat<double>(Mat<double>::Constant(1, 1, 3.0)))(0, 0) == 7.0);
  }
  SUBCASE("shape mismatch") {
    DenseNet<double> net({{3, 2, Activation::Identity}});
    CHECK_THROWS_AS(dense_forward(net, Mat<double>(Mat<double>::Ones(1, 2))), ShapeError);
    CHECK_THROWS_AS(DenseNet<double>({{3, 2, Activation::Relu}, {4, 1, Activation::Identity}}), ShapeError);
  }
}

TEST_CASE("softmax sums to one and ignores constant shifts") {
  Rng rng = make_stream(3, {});
  for (int k = 0; k < 100; ++k) {
    const Mat<double> z = random_mat(3, 5, rng) * 10.0;
    const Mat<double> s = softmax_rows(z);
    const Mat<double> shifted = softmax_rows(Mat<double>(z.array() + 123.0));
    for (Eigen::Index r = 0; r < 3; ++r) REQUIRE(std::abs(s.row(r).sum() - 1.0) <= 1e-12);
    REQUIRE((s - shifted).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("gru step convention") {
  GruCell<double> cell(1, 1);
  Vec<double> h(1), x = Vec<double>::Zero(1);
  h << 0.8;
  CHECK(gru_step(cell, h, x)[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(gru_step(cell, Vec<double>(Vec<double>::Zero(1)), x)[0] == 0.0);
  cell.b[0] = 30.0;  // update gate bias
  CHECK(std::abs(gru_step(cell, h, x)[0]) < 1e-12);
}

TEST_CASE("gru step stays inside (-1, 1)") {
  Rng rng = make_stream(21, {});
  GruCell<double> cell(3, 4);
  for (int k = 0; k < 200; ++k) {
    cell.W = random_mat(12, 3, rng) * 3.0;
    cell.U = random_mat(12, 4, rng) * 3.0;
    cell.b = random_mat(12, 1, rng).col(0) * 3.0;
    Vec<double> h(4);
    for (int i = 0; i < 4; ++i) h[i] = uniform(rng, -0.999, 0.999);
    const Vec<double> out = gru_step(cell, h, Vec<double>(random_mat(3, 1, rng).col(0)));
    REQUIRE((out.array().abs() < 1.0).all());
  }
}

TEST_CASE("losses") {
  Mat<double> a(1, 1), b(1, 1);
  a << 1;
  b << 1;
  CHECK(mse_loss(a, b) == 0.0);
  Mat<double> p(1, 2), t(1, 2);
  p << 0, 2;
  t << 1, 0;
  CHECK(mse_loss(p, t) == 2.5);
  Mat<double> half(1, 2);
  half << 0.5, 0.5;
  Eigen::VectorXi y(1);
  y << 0;
  CHECK(rel_close(cross_entropy_loss(half, y), std::log(2.0)));
  Mat<double> zero(1, 2);
  zero << 0.0, 1.0;
  CHECK(std::isfinite(cross_entropy_loss(zero, y)));
}

TEST_CASE("optimizers") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Vec<double> p(3), g = Vec<double>::Zero(3);
    p << 1, -2, 3;
    const Vec<double> keep = p;
    Sgd<double>{0.1}.step(p, g);
    CHECK(p == keep);
    AdamState<double> adam;
    adam.step(p, g);
    CHECK(p == keep);
  }
  SUBCASE("sgd arithmetic") {
    Vec<double> p(1), g(1);
    p << 1.0;
    g << 2.0;
    Sgd<double>{0.1}.step(p, g);
    CHECK(rel_close(p[0], 0.8));
  }
  SUBCASE("adam first step moves by about lr") {
    for (double grad : {1e-3, 0.5, 7.0, -40.0}) {
      Vec<double> p(1), g(1);
      p << 1.0;
      g << grad;
      AdamState<double> adam;
      adam.lr = 0.01;
      adam.step(p, g);
      CHECK(std::abs(std::abs(p[0] - 1.0) - 0.01) < 1e-6);
    }
  }
  SUBCASE("non-finite gradient is a training error") {
    Vec<double> p = Vec<double>::Zero(2), g(2);
    g << 1.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Sgd<double>{0.1}.step(p, g), TrainingError);
    AdamState<double> adam;
    CHECK_THROWS_AS(adam.step(p, g), TrainingError);
  }
  SUBCASE("identical seeds give bitwise identical trajectories") {
    auto run = [] {
      Rng rng = make_stream(9, {});
      DenseNet<double> net({{4, 6, Activation::Tanh}, {6, 2, Activation::Softmax}});
      net.init_uniform(rng);
      const Mat<double> x = random_mat(10, 4, rng);
      const Eigen::VectorXi y = random_labels(10, 2, rng);
      AdamState<double> adam;
      for (int s = 0; s < 25; ++s) {
        typename DenseNet<double>::Tape tape;
        const auto lg = loss_and_grad(LossKind::CrossEntropy, net.forward(x, &tape), y);
        adam.step(net.params(), net.backward(tape, lg.grad));
      }
      return net.params();
    };
    CHECK(run() == run());
  }
}

TEST_CASE("gradient checks") {
  SUBCASE("two-layer dense net, seed 7") {
    Rng rng = make_stream(7, {});
    DenseNet<double> net({{3, 5, Activation::Tanh}, {5, 2, Activation::Softmax}});
    net.init_uniform(rng);
    CHECK(dense_grad_error(net, random_mat(8, 3, rng), random_labels(8, 2, rng), LossKind::CrossEntropy) <= 1e-4);
  }
  SUBCASE("task model") {
    Rng rng = make_stream(8, {});
    DenseNet<double> linear(make_task_layers(16, {}));
    linear.init_uniform(rng);
    CHECK(dense_grad_error(linear, random_mat(12, 16, rng), random_labels(12, 2, rng), LossKind::CrossEntropy) <= 1e-4);
    DenseNet<double> hidden(make_task_layers(16, {6}, 2, Activation::Sigmoid));
    hidden.init_uniform(rng);
    CHECK(dense_grad_error(hidden, random_mat(12, 16, rng), random_labels(12, 2, rng), LossKind::CrossEntropy) <= 1e-4);
  }
  SUBCASE("policy network") {
    Rng rng = make_stream(10, {});
    AgentConfig cfg;
    DenseNet<double> net(policy_layers(state_length(3, 2), cfg));
    net.init_uniform(rng);
    const Mat<double> x = random_mat(1, state_length(3, 2), rng).cwiseAbs();
    typename DenseNet<double>::Tape tape;
    const Mat<double> q = net.forward(x, &tape);
    Mat<double> target(1, 2);
    target << 0.3, -0.2;
    const Vec<double> analytic = net.backward(tape, 2.0 * (q - target));
    auto loss = [&](const Vec<double>& p) {
      DenseNet<double> n = net;
      n.set_params(p);
      return (n.forward(x) - target).squaredNorm();
    };
    CHECK(grad_check(net.params(), loss, analytic) <= 1e-4);
  }
  SUBCASE("gru unrolled three steps") { CHECK(recurrent_grad_error(CellKind::Gru, 3, 12) <= 1e-4); }
  SUBCASE("gru over a full window") { CHECK(recurrent_grad_error(CellKind::Gru, 10, 13) <= 1e-4); }
  SUBCASE("lstm") { CHECK(recurrent_grad_error(CellKind::Lstm, 4, 14) <= 1e-4); }
  SUBCASE("empty parameter vector") {
    CHECK(grad_check(Vec<double>(), [](const Vec<double>&) { return 0.0; }, Vec<double>()) == 0.0);
  }
}

TEST_CASE("checkpoints round-trip and reject mismatched shapes") {
  Rng rng = make_stream(5, {});
  RecurrentClassifier<double> net(CellKind::Gru, 4, 3);
  net.init_uniform(rng);
  const std::string path = "tensorkit_ckpt_test.txt";
  save_model(path, "anticipator", net);
  RecurrentClassifier<double> back(CellKind::Gru, 4, 3);
  load_model(path, "anticipator", back);
  CHECK(back.params() == net.params());
  RecurrentClassifier<double> wrong(CellKind::Gru, 4, 5);
  CHECK_THROWS_AS(load_model(path, "anticipator", wrong), ShapeError);
  RecurrentClassifier<double> lstm(CellKind::Lstm, 4, 3);
  CHECK_THROWS_AS(load_model(path, "anticipator", lstm), ShapeError);
  CHECK_THROWS_AS(load_model(path, "policy", back), ShapeError);
  std::remove(path.c_str());

  std::istringstream junk("not a checkpoint\n");
  CHECK_THROWS_AS(read_checkpoint<double>(junk, "x", "y"), ParseError);
}
