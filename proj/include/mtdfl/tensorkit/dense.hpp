// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <vector>

#include "mtdfl/random.hpp"
#include "mtdfl/tensorkit/core.hpp"

namespace mtdfl::tk {

struct LayerSpec {
  Eigen::Index in = 0;
  Eigen::Index out = 0;
  Activation act = Activation::Identity;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Fully connected network over a single flat parameter vector. Layer l owns
/// a row-major (out x in) weight block followed by its bias.
template <typename Scalar>
class DenseNet {
 public:
  struct Tape {
    std::vector<Mat<Scalar>> inputs;  // input to each layer
    std::vector<Mat<Scalar>> pre;     // affine output of each layer
    Mat<Scalar> output;
  };

  DenseNet() = default;
  explicit DenseNet(std::vector<LayerSpec> layers) : layers_(std::move(layers)) {
    Eigen::Index total = 0;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].in <= 0 || layers_[l].out <= 0) throw ShapeError("layer widths must be positive");
      if (l > 0 && layers_[l - 1].out != layers_[l].in) throw ShapeError("layer widths do not chain");
      offsets_.push_back(total);
      total += layers_[l].out * layers_[l].in + layers_[l].out;
    }
    params_ = Vec<Scalar>::Zero(total);
  }

  const std::vector<LayerSpec>& layers() const { return layers_; }
  Eigen::Index num_params() const { return params_.size(); }
  Eigen::Index input_width() const { return layers_.empty() ? 0 : layers_.front().in; }
  Eigen::Index output_width() const { return layers_.empty() ? 0 : layers_.back().out; }

  Vec<Scalar>& params() { return params_; }
  const Vec<Scalar>& params() const { return params_; }
  void set_params(const Vec<Scalar>& p) {
    if (p.size() != params_.size()) throw ShapeError("parameter vector length mismatch");
    params_ = p;
  }

  MatMap<Scalar> weight(std::size_t l) {
    return MatMap<Scalar>(params_.data() + offsets_[l], layers_[l].out, layers_[l].in);
  }
  ConstMatMap<Scalar> weight(std::size_t l) const {
    return ConstMatMap<Scalar>(params_.data() + offsets_[l], layers_[l].out, layers_[l].in);
  }
  Eigen::Map<Vec<Scalar>> bias(std::size_t l) {
    return Eigen::Map<Vec<Scalar>>(params_.data() + offsets_[l] + layers_[l].out * layers_[l].in, layers_[l].out);
  }
  Eigen::Map<const Vec<Scalar>> bias(std::size_t l) const {
    return Eigen::Map<const Vec<Scalar>>(params_.data() + offsets_[l] + layers_[l].out * layers_[l].in,
                                         layers_[l].out);
  }

  /// Uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) for weights and biases.
  void init_uniform(Rng& rng) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const double bound = std::sqrt(1.0 / static_cast<double>(layers_[l].in));
      const Eigen::Index n = layers_[l].out * layers_[l].in + layers_[l].out;
      for (Eigen::Index k = 0; k < n; ++k)
        params_[offsets_[l] + k] = static_cast<Scalar>(uniform(rng, -bound, bound));
    }
  }

  Mat<Scalar> forward(const Mat<Scalar>& x, Tape* tape = nullptr) const {
    if (x.cols() != input_width()) throw ShapeError("dense_forward: input width mismatch");
    Mat<Scalar> h = x;
    if (tape) {
      tape->inputs.clear();
      tape->pre.clear();
    }
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      Mat<Scalar> z = h * weight(l).transpose();
      z.rowwise() += bias(l).transpose();
      Mat<Scalar> a = apply_activation(layers_[l].act, z);
      if (tape) {
        tape->inputs.push_back(std::move(h));
        tape->pre.push_back(std::move(z));
      }
      h = std::move(a);
    }
    if (tape) tape->output = h;
    return h;
  }

  /// Gradient of the loss with respect to every parameter given dL/d(output).
  /// When `d_input` is non-null it receives dL/d(input).
  Vec<Scalar> backward(const Tape& tape, const Mat<Scalar>& d_output, Mat<Scalar>* d_input = nullptr) const {
    Vec<Scalar> grad = Vec<Scalar>::Zero(params_.size());
    Mat<Scalar> d = d_output;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Mat<Scalar>& out = (l + 1 < layers_.size()) ? tape.inputs[l + 1] : tape.output;
      const Mat<Scalar> dz = activation_backward(layers_[l].act, tape.pre[l], out, d);
      MatMap<Scalar>(grad.data() + offsets_[l], layers_[l].out, layers_[l].in) = dz.transpose() * tape.inputs[l];
      Eigen::Map<Vec<Scalar>>(grad.data() + offsets_[l] + layers_[l].out * layers_[l].in, layers_[l].out) =
          dz.colwise().sum().transpose();
      if (l > 0 || d_input) d = dz * weight(l);
    }
    if (d_input) *d_input = d;
    return grad;
  }

  std::string shape_string() const {
    std::ostringstream os;
    for (std::size_t l = 0; l < layers_.size(); ++l)
      os << (l ? "," : "") << layers_[l].in << "x" << layers_[l].out << ":" << to_string(layers_[l].act);
    return os.str();
  }

 private:
  std::vector<LayerSpec> layers_;
  std::vector<Eigen::Index> offsets_;
  Vec<Scalar> params_;
};

template <typename Scalar>
Mat<Scalar> dense_forward(const DenseNet<Scalar>& net, const Mat<Scalar>& x) {
  return net.forward(x);
}

}  // namespace mtdfl::tk
