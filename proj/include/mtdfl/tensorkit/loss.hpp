// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>

#include "mtdfl/tensorkit/core.hpp"

namespace mtdfl::tk {

enum class LossKind { Mse, CrossEntropy };

inline LossKind loss_from_string(const std::string& s) {
  if (s == "mse") return LossKind::Mse;
  if (s == "ce" || s == "cross_entropy") return LossKind::CrossEntropy;
  throw ConfigError("unknown loss '" + s + "'");
}

inline constexpr double kLogFloor = 1e-12;

/// Mean of squared differences over every element.
template <typename Scalar>
Scalar mse_loss(const Mat<Scalar>& pred, const Mat<Scalar>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) throw ShapeError("mse_loss: shape mismatch");
  if (pred.size() == 0) return Scalar(0);
  return (pred - target).squaredNorm() / static_cast<Scalar>(pred.size());
}

/// Mean negative log-probability of the labelled class.
template <typename Scalar>
Scalar cross_entropy_loss(const Mat<Scalar>& probs, const Eigen::VectorXi& labels) {
  if (probs.rows() != labels.size()) throw ShapeError("cross_entropy_loss: row/label count mismatch");
  if (probs.rows() == 0) return Scalar(0);
  Scalar total(0);
  for (Eigen::Index r = 0; r < probs.rows(); ++r)
    total -= std::log(std::max(probs(r, labels[r]), Scalar(kLogFloor)));
  return total / static_cast<Scalar>(probs.rows());
}

template <typename Scalar>
Mat<Scalar> one_hot(const Eigen::VectorXi& labels, Eigen::Index classes) {
  Mat<Scalar> t = Mat<Scalar>::Zero(labels.size(), classes);
  for (Eigen::Index r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || labels[r] >= classes) throw ShapeError("label outside the class range");
    t(r, labels[r]) = Scalar(1);
  }
  return t;
}

template <typename Scalar>
struct LossGrad {
  Scalar value{};
  Mat<Scalar> grad;  // dL/d(probs)
};

/// Loss over class probabilities and integer labels, optionally row-weighted.
/// With weights the loss is sum_r w_r * l_r / sum_r w_r.
template <typename Scalar>
LossGrad<Scalar> loss_and_grad(LossKind kind, const Mat<Scalar>& probs, const Eigen::VectorXi& labels,
                               const Vec<Scalar>* weights = nullptr) {
  const Eigen::Index B = probs.rows();
  const Eigen::Index C = probs.cols();
  if (labels.size() != B) throw ShapeError("loss: row/label count mismatch");
  Vec<Scalar> w = weights ? *weights : Vec<Scalar>::Ones(B);
  if (w.size() != B) throw ShapeError("loss: weight count mismatch");
  LossGrad<Scalar> out{Scalar(0), Mat<Scalar>::Zero(B, C)};
  const Scalar wsum = w.sum();
  if (B == 0 || !(wsum > Scalar(0))) return out;
  if (kind == LossKind::Mse) {
    const Mat<Scalar> diff = probs - one_hot<Scalar>(labels, C);
    for (Eigen::Index r = 0; r < B; ++r) {
      out.value += w[r] * diff.row(r).squaredNorm();
      out.grad.row(r) = (Scalar(2) * w[r] / (wsum * static_cast<Scalar>(C))) * diff.row(r);
    }
    out.value /= wsum * static_cast<Scalar>(C);
  } else {
    for (Eigen::Index r = 0; r < B; ++r) {
      const Scalar p = probs(r, labels[r]);
      out.value -= w[r] * std::log(std::max(p, Scalar(kLogFloor)));
      if (p > Scalar(kLogFloor)) out.grad(r, labels[r]) = -w[r] / (wsum * p);
    }
    out.value /= wsum;
  }
  return out;
}

}  // namespace mtdfl::tk
