// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "mtdfl/error.hpp"

namespace mtdfl::tk {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatMap = Eigen::Map<Mat<Scalar>>;
template <typename Scalar>
using ConstMatMap = Eigen::Map<const Mat<Scalar>>;

enum class Activation { Identity, Relu, Softmax, Sigmoid, Tanh };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Softmax: return "softmax";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Tanh: return "tanh";
  }
  return "?";
}

inline Activation activation_from_string(const std::string& s) {
  if (s == "identity" || s == "linear") return Activation::Identity;
  if (s == "relu") return Activation::Relu;
  if (s == "softmax") return Activation::Softmax;
  if (s == "sigmoid") return Activation::Sigmoid;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + s + "'");
}

template <typename Derived>
auto sigmoid(const Eigen::ArrayBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return S(1) / (S(1) + (-x).exp());
}

/// Row-wise softmax with max subtraction.
template <typename Derived>
Mat<typename Derived::Scalar> softmax_rows(const Eigen::MatrixBase<Derived>& logits) {
  using S = typename Derived::Scalar;
  Mat<S> out = logits;
  for (Eigen::Index r = 0; r < out.rows(); ++r) {
    out.row(r).array() -= out.row(r).maxCoeff();
    out.row(r) = out.row(r).array().exp().matrix();
    out.row(r) /= out.row(r).sum();
  }
  return out;
}

template <typename Scalar>
Mat<Scalar> apply_activation(Activation a, const Mat<Scalar>& z) {
  switch (a) {
    case Activation::Identity: return z;
    case Activation::Relu: return z.cwiseMax(Scalar(0));
    case Activation::Softmax: return softmax_rows(z);
    case Activation::Sigmoid: return sigmoid(z.array()).matrix();
    case Activation::Tanh: return z.array().tanh().matrix();
  }
  return z;
}

/// Pulls dL/d(out) back through the activation given z and out = act(z).
template <typename Scalar>
Mat<Scalar> activation_backward(Activation a, const Mat<Scalar>& z, const Mat<Scalar>& out,
                                const Mat<Scalar>& d_out) {
  switch (a) {
    case Activation::Identity: return d_out;
    case Activation::Relu: return (z.array() > Scalar(0)).select(d_out, Scalar(0));
    case Activation::Softmax: {
      Mat<Scalar> dz(out.rows(), out.cols());
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        const Scalar dot = out.row(r).dot(d_out.row(r));
        dz.row(r) = out.row(r).array() * (d_out.row(r).array() - dot);
      }
      return dz;
    }
    case Activation::Sigmoid: return (d_out.array() * out.array() * (Scalar(1) - out.array())).matrix();
    case Activation::Tanh: return (d_out.array() * (Scalar(1) - out.array().square())).matrix();
  }
  return d_out;
}

template <typename Scalar>
void require_finite(const Vec<Scalar>& g, const char* what) {
  if (!g.allFinite()) throw TrainingError(std::string("non-finite gradient in ") + what);
}

}  // namespace mtdfl::tk
