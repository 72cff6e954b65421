// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <variant>

#include "mtdfl/tensorkit/core.hpp"

namespace mtdfl::tk {

template <typename Scalar>
struct Sgd {
  Scalar lr = Scalar(0.01);

  void step(Vec<Scalar>& params, const Vec<Scalar>& grad) {
    if (grad.size() != params.size()) throw ShapeError("optimizer: gradient length mismatch");
    require_finite(grad, "sgd step");
    params -= lr * grad;
  }
};

template <typename Scalar>
struct AdamState {
  Scalar lr = Scalar(1e-3);
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar eps = Scalar(1e-8);
  long step_count = 0;
  Vec<Scalar> m, v;

  void step(Vec<Scalar>& params, const Vec<Scalar>& grad) {
    if (grad.size() != params.size()) throw ShapeError("optimizer: gradient length mismatch");
    require_finite(grad, "adam step");
    if (m.size() != params.size()) {
      m = Vec<Scalar>::Zero(params.size());
      v = Vec<Scalar>::Zero(params.size());
    }
    ++step_count;
    m = beta1 * m + (Scalar(1) - beta1) * grad;
    v = beta2 * v + (Scalar(1) - beta2) * grad.cwiseAbs2();
    const Scalar c1 = Scalar(1) - std::pow(beta1, static_cast<Scalar>(step_count));
    const Scalar c2 = Scalar(1) - std::pow(beta2, static_cast<Scalar>(step_count));
    params.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

enum class OptimizerKind { Sgd, Adam };

inline OptimizerKind optimizer_from_string(const std::string& s) {
  if (s == "sgd" || s == "gd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + s + "'");
}

template <typename Scalar>
class Optimizer {
 public:
  Optimizer() = default;
  Optimizer(OptimizerKind kind, Scalar lr) {
    if (kind == OptimizerKind::Sgd) state_ = Sgd<Scalar>{lr};
    else {
      AdamState<Scalar> a;
      a.lr = lr;
      state_ = a;
    }
  }

  void step(Vec<Scalar>& params, const Vec<Scalar>& grad) {
    std::visit([&](auto& s) { s.step(params, grad); }, state_);
  }

 private:
  std::variant<Sgd<Scalar>, AdamState<Scalar>> state_;
};

}  // namespace mtdfl::tk
