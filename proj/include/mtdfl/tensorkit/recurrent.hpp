// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <vector>

#include "mtdfl/random.hpp"
#include "mtdfl/tensorkit/core.hpp"

namespace mtdfl::tk {

// Batched recurrent kernels. Rows are samples; gate blocks are stacked
// row-wise in W (G*H x in), U (G*H x H) and b (G*H).
//
// GRU, gate order (z, r, h):
//   z = sig(W_z x + U_z h + b_z)
//   r = sig(W_r x + U_r h + b_r)
//   c = tanh(W_h x + U_h (r*h) + b_h)
//   h' = (1 - z) * h + z * c
//
// LSTM, gate order (i, f, g, o):
//   c' = f * c + i * g,  h' = o * tanh(c')

template <typename Scalar>
struct GruCache {
  Mat<Scalar> x, h_prev, z, r, cand;
};

template <typename Scalar>
struct LstmCache {
  Mat<Scalar> x, h_prev, c_prev, i, f, g, o, c, tanh_c;
};

template <typename Scalar, typename DW, typename DU, typename DB>
Mat<Scalar> gru_forward(const Eigen::MatrixBase<DW>& W, const Eigen::MatrixBase<DU>& U,
                        const Eigen::MatrixBase<DB>& b, const Mat<Scalar>& h, const Mat<Scalar>& x,
                        GruCache<Scalar>* cache = nullptr) {
  const Eigen::Index H = U.cols();
  if (W.rows() != 3 * H || U.rows() != 3 * H || b.size() != 3 * H) throw ShapeError("GRU parameter shapes");
  if (x.cols() != W.cols() || h.cols() != H || x.rows() != h.rows()) throw ShapeError("GRU input shapes");
  Mat<Scalar> g = x * W.transpose();
  g.rowwise() += b.transpose();
  const Mat<Scalar> z = sigmoid((g.leftCols(H) + h * U.topRows(H).transpose()).array()).matrix();
  const Mat<Scalar> r = sigmoid((g.middleCols(H, H) + h * U.middleRows(H, H).transpose()).array()).matrix();
  const Mat<Scalar> rh = r.cwiseProduct(h);
  const Mat<Scalar> cand = (g.rightCols(H) + rh * U.bottomRows(H).transpose()).array().tanh().matrix();
  Mat<Scalar> out = ((Scalar(1) - z.array()) * h.array() + z.array() * cand.array()).matrix();
  if (cache) *cache = GruCache<Scalar>{x, h, z, r, cand};
  return out;
}

/// Accumulates parameter gradients into dW, dU, db and returns dL/dh_prev.
template <typename Scalar, typename DU, typename GW, typename GU, typename GB>
Mat<Scalar> gru_backward(const Eigen::MatrixBase<DU>& U, const GruCache<Scalar>& c, const Mat<Scalar>& dh,
                         Eigen::MatrixBase<GW>& dW, Eigen::MatrixBase<GU>& dU, Eigen::MatrixBase<GB>& db) {
  const Eigen::Index H = U.cols();
  const auto one = Scalar(1);
  const Mat<Scalar> dz = (dh.array() * (c.cand.array() - c.h_prev.array())).matrix();
  Mat<Scalar> dh_prev = (dh.array() * (one - c.z.array())).matrix();
  const Mat<Scalar> da_h = (dh.array() * c.z.array() * (one - c.cand.array().square())).matrix();
  const Mat<Scalar> rh = c.r.cwiseProduct(c.h_prev);
  const Mat<Scalar> d_rh = da_h * U.bottomRows(H);
  const Mat<Scalar> dr = d_rh.cwiseProduct(c.h_prev);
  dh_prev += d_rh.cwiseProduct(c.r);
  const Mat<Scalar> da_z = (dz.array() * c.z.array() * (one - c.z.array())).matrix();
  const Mat<Scalar> da_r = (dr.array() * c.r.array() * (one - c.r.array())).matrix();

  dU.topRows(H) += da_z.transpose() * c.h_prev;
  dU.middleRows(H, H) += da_r.transpose() * c.h_prev;
  dU.bottomRows(H) += da_h.transpose() * rh;
  dh_prev += da_z * U.topRows(H) + da_r * U.middleRows(H, H);

  Mat<Scalar> da(dh.rows(), 3 * H);
  da << da_z, da_r, da_h;
  dW += da.transpose() * c.x;
  db += da.colwise().sum().transpose();
  return dh_prev;
}

template <typename Scalar, typename DW, typename DU, typename DB>
std::pair<Mat<Scalar>, Mat<Scalar>> lstm_forward(const Eigen::MatrixBase<DW>& W, const Eigen::MatrixBase<DU>& U,
                                                 const Eigen::MatrixBase<DB>& b, const Mat<Scalar>& h,
                                                 const Mat<Scalar>& c_prev, const Mat<Scalar>& x,
                                                 LstmCache<Scalar>* cache = nullptr) {
  const Eigen::Index H = U.cols();
  if (W.rows() != 4 * H || U.rows() != 4 * H || b.size() != 4 * H) throw ShapeError("LSTM parameter shapes");
  if (x.cols() != W.cols() || h.cols() != H || c_prev.cols() != H) throw ShapeError("LSTM input shapes");
  Mat<Scalar> a = x * W.transpose() + h * U.transpose();
  a.rowwise() += b.transpose();
  const Mat<Scalar> i = sigmoid(a.leftCols(H).array()).matrix();
  const Mat<Scalar> f = sigmoid(a.middleCols(H, H).array()).matrix();
  const Mat<Scalar> g = a.middleCols(2 * H, H).array().tanh().matrix();
  const Mat<Scalar> o = sigmoid(a.rightCols(H).array()).matrix();
  Mat<Scalar> c = (f.array() * c_prev.array() + i.array() * g.array()).matrix();
  const Mat<Scalar> tc = c.array().tanh().matrix();
  Mat<Scalar> hn = o.cwiseProduct(tc);
  if (cache) *cache = LstmCache<Scalar>{x, h, c_prev, i, f, g, o, c, tc};
  return {std::move(hn), std::move(c)};
}

/// Takes dL/dh' and dL/dc' and returns (dL/dh_prev, dL/dc_prev).
template <typename Scalar, typename DU, typename GW, typename GU, typename GB>
std::pair<Mat<Scalar>, Mat<Scalar>> lstm_backward(const Eigen::MatrixBase<DU>& U, const LstmCache<Scalar>& k,
                                                  const Mat<Scalar>& dh, const Mat<Scalar>& dc_next,
                                                  Eigen::MatrixBase<GW>& dW, Eigen::MatrixBase<GU>& dU,
                                                  Eigen::MatrixBase<GB>& db) {
  const Eigen::Index H = U.cols();
  const auto one = Scalar(1);
  const Mat<Scalar> dc = dc_next + (dh.array() * k.o.array() * (one - k.tanh_c.array().square())).matrix();
  Mat<Scalar> da(dh.rows(), 4 * H);
  da.leftCols(H) = (dc.array() * k.g.array() * k.i.array() * (one - k.i.array())).matrix();
  da.middleCols(H, H) = (dc.array() * k.c_prev.array() * k.f.array() * (one - k.f.array())).matrix();
  da.middleCols(2 * H, H) = (dc.array() * k.i.array() * (one - k.g.array().square())).matrix();
  da.rightCols(H) = (dh.array() * k.tanh_c.array() * k.o.array() * (one - k.o.array())).matrix();
  dW += da.transpose() * k.x;
  dU += da.transpose() * k.h_prev;
  db += da.colwise().sum().transpose();
  return {da * U, dc.cwiseProduct(k.f)};
}

/// A standalone GRU cell with owned parameters.
template <typename Scalar>
struct GruCell {
  Eigen::Index input_width = 0;
  Eigen::Index hidden_width = 0;
  Mat<Scalar> W, U;
  Vec<Scalar> b;

  GruCell(Eigen::Index in, Eigen::Index hidden)
      : input_width(in), hidden_width(hidden),
        W(Mat<Scalar>::Zero(3 * hidden, in)), U(Mat<Scalar>::Zero(3 * hidden, hidden)),
        b(Vec<Scalar>::Zero(3 * hidden)) {}
};

template <typename Scalar>
Vec<Scalar> gru_step(const GruCell<Scalar>& cell, const Vec<Scalar>& h, const Vec<Scalar>& x) {
  if (h.size() != cell.hidden_width || x.size() != cell.input_width) throw ShapeError("gru_step: width mismatch");
  const Mat<Scalar> hr = h.transpose();
  const Mat<Scalar> xr = x.transpose();
  return gru_forward<Scalar>(cell.W, cell.U, cell.b, hr, xr).transpose();
}

enum class CellKind { Gru, Lstm };

inline const char* to_string(CellKind k) { return k == CellKind::Gru ? "gru" : "lstm"; }

inline CellKind cell_kind_from_string(const std::string& s) {
  if (s == "gru" || s == "GRU") return CellKind::Gru;
  if (s == "lstm" || s == "LSTM") return CellKind::Lstm;
  throw ConfigError("unknown recurrent cell '" + s + "'");
}

/// Sequence classifier: a recurrent cell unrolled over L steps, then a linear
/// head with softmax over `classes` outputs. Inputs are B x (L*F) matrices
/// holding the L event vectors of each sample side by side.
template <typename Scalar>
class RecurrentClassifier {
 public:
  struct Tape {
    std::vector<GruCache<Scalar>> gru;
    std::vector<LstmCache<Scalar>> lstm;
    Mat<Scalar> h_last;
    Mat<Scalar> logits;
    Mat<Scalar> probs;
  };

  RecurrentClassifier() = default;
  RecurrentClassifier(CellKind kind, Eigen::Index input, Eigen::Index hidden, Eigen::Index classes = 2)
      : kind_(kind), in_(input), hid_(hidden), cls_(classes) {
    if (input <= 0 || hidden <= 0 || classes <= 0) throw ShapeError("recurrent classifier widths must be positive");
    params_ = Vec<Scalar>::Zero(gates() * hid_ * (in_ + hid_ + 1) + cls_ * (hid_ + 1));
  }

  CellKind kind() const { return kind_; }
  Eigen::Index input_width() const { return in_; }
  Eigen::Index hidden_width() const { return hid_; }
  Eigen::Index classes() const { return cls_; }
  Eigen::Index num_params() const { return params_.size(); }
  Vec<Scalar>& params() { return params_; }
  const Vec<Scalar>& params() const { return params_; }
  void set_params(const Vec<Scalar>& p) {
    if (p.size() != params_.size()) throw ShapeError("parameter vector length mismatch");
    params_ = p;
  }

  // Both the cell and the head read hidden-width inputs, so one bound fits all.
  void init_uniform(Rng& rng) {
    const double bound = std::sqrt(1.0 / static_cast<double>(hid_));
    for (Eigen::Index k = 0; k < params_.size(); ++k) params_[k] = static_cast<Scalar>(uniform(rng, -bound, bound));
  }

  Mat<Scalar> forward(const Mat<Scalar>& x, Tape* tape = nullptr) const {
    if (x.cols() == 0 || x.cols() % in_ != 0) throw ShapeError("sequence width is not a multiple of the event width");
    const Eigen::Index steps = x.cols() / in_;
    const Eigen::Index B = x.rows();
    auto [W, U, b] = cell_views(params_.data());
    Mat<Scalar> h = Mat<Scalar>::Zero(B, hid_);
    Mat<Scalar> c = Mat<Scalar>::Zero(B, hid_);
    if (tape) {
      tape->gru.assign(kind_ == CellKind::Gru ? steps : 0, {});
      tape->lstm.assign(kind_ == CellKind::Lstm ? steps : 0, {});
    }
    for (Eigen::Index t = 0; t < steps; ++t) {
      const Mat<Scalar> xt = x.middleCols(t * in_, in_);
      if (kind_ == CellKind::Gru) {
        h = gru_forward<Scalar>(W, U, b, h, xt, tape ? &tape->gru[t] : nullptr);
      } else {
        auto hc = lstm_forward<Scalar>(W, U, b, h, c, xt, tape ? &tape->lstm[t] : nullptr);
        h = std::move(hc.first);
        c = std::move(hc.second);
      }
    }
    Mat<Scalar> logits = h * head_weight().transpose();
    logits.rowwise() += head_bias().transpose();
    Mat<Scalar> probs = softmax_rows(logits);
    if (tape) {
      tape->h_last = h;
      tape->logits = logits;
      tape->probs = probs;
    }
    return probs;
  }

  /// Gradient of the loss given dL/d(probs).
  Vec<Scalar> backward(const Tape& tape, const Mat<Scalar>& d_probs) const {
    Vec<Scalar> grad = Vec<Scalar>::Zero(params_.size());
    const Mat<Scalar> d_logits = activation_backward(Activation::Softmax, tape.logits, tape.probs, d_probs);
    const Eigen::Index head = gates() * hid_ * (in_ + hid_ + 1);
    MatMap<Scalar>(grad.data() + head, cls_, hid_) = d_logits.transpose() * tape.h_last;
    Eigen::Map<Vec<Scalar>>(grad.data() + head + cls_ * hid_, cls_) = d_logits.colwise().sum().transpose();
    Mat<Scalar> dh = d_logits * head_weight();

    auto [W, U, b] = cell_views(params_.data());
    auto [dW, dU, db] = cell_views(grad.data());
    if (kind_ == CellKind::Gru) {
      for (std::size_t t = tape.gru.size(); t-- > 0;) dh = gru_backward<Scalar>(U, tape.gru[t], dh, dW, dU, db);
    } else {
      Mat<Scalar> dc = Mat<Scalar>::Zero(dh.rows(), hid_);
      for (std::size_t t = tape.lstm.size(); t-- > 0;) {
        auto d = lstm_backward<Scalar>(U, tape.lstm[t], dh, dc, dW, dU, db);
        dh = std::move(d.first);
        dc = std::move(d.second);
      }
    }
    return grad;
  }

  std::string shape_string() const {
    std::ostringstream os;
    os << to_string(kind_) << ":" << in_ << "x" << hid_ << "x" << cls_;
    return os.str();
  }

 private:
  Eigen::Index gates() const { return kind_ == CellKind::Gru ? 3 : 4; }

  template <typename P>
  auto cell_views(P* base) const {
    using M = std::conditional_t<std::is_const_v<P>, ConstMatMap<Scalar>, MatMap<Scalar>>;
    using V = std::conditional_t<std::is_const_v<P>, Eigen::Map<const Vec<Scalar>>, Eigen::Map<Vec<Scalar>>>;
    const Eigen::Index G = gates() * hid_;
    return std::tuple<M, M, V>(M(base, G, in_), M(base + G * in_, G, hid_), V(base + G * (in_ + hid_), G));
  }

  ConstMatMap<Scalar> head_weight() const {
    return ConstMatMap<Scalar>(params_.data() + gates() * hid_ * (in_ + hid_ + 1), cls_, hid_);
  }
  Eigen::Map<const Vec<Scalar>> head_bias() const {
    return Eigen::Map<const Vec<Scalar>>(params_.data() + gates() * hid_ * (in_ + hid_ + 1) + cls_ * hid_, cls_);
  }

  CellKind kind_ = CellKind::Gru;
  Eigen::Index in_ = 0, hid_ = 0, cls_ = 2;
  Vec<Scalar> params_;
};

}  // namespace mtdfl::tk
