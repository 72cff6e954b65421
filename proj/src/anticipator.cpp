// SPDX-License-Identifier: Apache-2.0
#include "mtdfl/anticipator.hpp"

#include <numeric>

#include "mtdfl/error.hpp"
#include "mtdfl/random.hpp"

namespace mtdfl {

void EventSequence::append(const EventSequence& other) {
  if (other.size() == 0) return;
  if (size() > 0 && other.width() != width()) throw ShapeError("event feature widths differ");
  Eigen::MatrixXd merged(features.rows() + other.features.rows(), other.width());
  if (features.rows() > 0) merged.topRows(features.rows()) = features;
  merged.bottomRows(other.features.rows()) = other.features;
  features = std::move(merged);
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

void WindowedDataset::append(const WindowedDataset& other) {
  if (other.rows() == 0) return;
  if (rows() == 0) {
    *this = other;
    return;
  }
  if (other.window != window || other.width != width) throw ShapeError("windowed datasets differ in shape");
  Eigen::MatrixXd nx(x.rows() + other.x.rows(), x.cols());
  nx << x, other.x;
  Eigen::VectorXi ny(y.size() + other.y.size());
  ny << y, other.y;
  x = std::move(nx);
  y = std::move(ny);
}

double WindowedDataset::attack_fraction() const {
  return rows() == 0 ? 0.0 : static_cast<double>(y.sum()) / static_cast<double>(rows());
}

WindowedDataset build_windows(const EventSequence& log, Eigen::Index window) {
  if (window <= 0) throw DomainError("window length must be positive");
  const Eigen::Index t = log.size();
  if (t <= window) throw InsufficientHistoryError("log of " + std::to_string(t) + " events is too short for a window of " +
                                                  std::to_string(window));
  const Eigen::Index f = log.width();
  WindowedDataset ds;
  ds.window = window;
  ds.width = f;
  ds.x.resize(t - window, window * f);
  ds.y.resize(t - window);
  for (Eigen::Index k = 0; k < t - window; ++k) {
    for (Eigen::Index s = 0; s < window; ++s) ds.x.block(k, s * f, 1, f) = log.features.row(k + s);
    ds.y[k] = log.labels[static_cast<std::size_t>(k + window)];
  }
  return ds;
}

Eigen::VectorXd Predictor::attack_probabilities(const WindowedDataset& data, std::uint64_t key_salt) const {
  Eigen::VectorXd p(data.rows());
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    const Eigen::MatrixXd w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        Eigen::RowVectorXd(data.x.row(r)).data(), data.window, data.width);
    p[r] = attack_probability(w, {data.y[r] != 0, hash_path(key_salt, {static_cast<std::uint64_t>(r)})});
  }
  return p;
}

double RecurrentPredictor::attack_probability(const Eigen::MatrixXd& window, const WindowContext&) const {
  if (window.cols() != net_.input_width()) throw ShapeError("window feature width mismatch");
  tk::Mat<double> row(1, window.size());
  for (Eigen::Index s = 0; s < window.rows(); ++s) row.block(0, s * window.cols(), 1, window.cols()) = window.row(s);
  return net_.forward(row)(0, 1);
}

Eigen::VectorXd RecurrentPredictor::attack_probabilities(const WindowedDataset& data, std::uint64_t) const {
  if (data.rows() == 0) return {};
  return net_.forward(data.x).col(1);
}

double NoisyOraclePredictor::attack_probability(const Eigen::MatrixXd&, const WindowContext& ctx) const {
  const double u = uniform01(hash_path(seed_, {ctx.key}));
  if (ctx.truth) return u < fn_ ? 0.0 : 1.0;
  return u < fp_ ? 1.0 : 0.0;
}

TrainedAnticipator train_anticipator(const WindowedDataset& data, const AnticipatorTrainConfig& cfg) {
  if (data.rows() == 0) throw TrainingError("anticipator training set is empty");
  Rng rng = make_stream(cfg.seed, {stream::kAnticipator});
  tk::RecurrentClassifier<double> net(cfg.arch, data.width, cfg.hidden, 2);
  net.init_uniform(rng);

  const Eigen::Index n = data.rows();
  const Eigen::Index attacks = data.y.sum();
  TrainedAnticipator out;
  out.degenerate = (attacks == 0 || attacks == n);
  Eigen::VectorXd weight = Eigen::VectorXd::Ones(n);
  if (cfg.balance_classes && !out.degenerate) {
    const double wa = static_cast<double>(n) / (2.0 * static_cast<double>(attacks));
    const double wb = static_cast<double>(n) / (2.0 * static_cast<double>(n - attacks));
    for (Eigen::Index r = 0; r < n; ++r) weight[r] = data.y[r] ? wa : wb;
  }

  tk::AdamState<double> adam;
  adam.lr = cfg.lr;
  const std::size_t bs = cfg.batch_size == 0 ? static_cast<std::size_t>(n) : cfg.batch_size;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  for (int e = 0; e < cfg.epochs; ++e) {
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i)))]);
    for (std::size_t from = 0; from < order.size(); from += bs) {
      const std::size_t to = std::min(order.size(), from + bs);
      const auto b = static_cast<Eigen::Index>(to - from);
      tk::Mat<double> xb(b, data.x.cols());
      Eigen::VectorXi yb(b);
      Eigen::VectorXd wb(b);
      for (Eigen::Index k = 0; k < b; ++k) {
        const Eigen::Index r = order[from + static_cast<std::size_t>(k)];
        xb.row(k) = data.x.row(r);
        yb[k] = data.y[r];
        wb[k] = weight[r];
      }
      tk::RecurrentClassifier<double>::Tape tape;
      net.forward(xb, &tape);
      const auto lg = tk::loss_and_grad(cfg.loss, tape.probs, yb, &wb);
      adam.step(net.params(), net.backward(tape, lg.grad));
    }
  }
  const double prior = data.attack_fraction();
  out.predictor = std::make_unique<RecurrentPredictor>(std::move(net), data.window, prior);
  out.train_accuracy = evaluate_anticipator(*out.predictor, data).accuracy;
  return out;
}

AnticipationProfile anticipate(const Predictor& predictor, const std::vector<EventSequence>& logs, Eigen::Index window,
                               std::size_t iteration, std::uint64_t key_salt) {
  AnticipationProfile prof;
  prof.iteration = iteration;
  prof.p.resize(static_cast<Eigen::Index>(logs.size()));
  for (std::size_t u = 0; u < logs.size(); ++u) {
    const EventSequence& log = logs[u];
    if (log.size() < window || window <= 0) {
      prof.p[static_cast<Eigen::Index>(u)] = predictor.prior();
      continue;
    }
    const Eigen::MatrixXd w = log.features.bottomRows(window);
    const WindowContext ctx{log.labels.back() != 0, hash_path(key_salt, {static_cast<std::uint64_t>(u)})};
    prof.p[static_cast<Eigen::Index>(u)] = std::clamp(predictor.attack_probability(w, ctx), 0.0, 1.0);
  }
  return prof;
}

AnticipatorScore evaluate_anticipator(const Predictor& predictor, const WindowedDataset& test, std::uint64_t key_salt,
                                      double threshold) {
  AnticipatorScore s;
  if (test.rows() == 0) return s;
  const Eigen::VectorXd p = predictor.attack_probabilities(test, key_salt);
  std::size_t correct = 0, benign = 0, attack = 0, fp = 0, fn = 0;
  for (Eigen::Index r = 0; r < test.rows(); ++r) {
    const bool says_attack = p[r] >= threshold;
    const bool is_attack = test.y[r] != 0;
    if (says_attack == is_attack) ++correct;
    if (is_attack) {
      ++attack;
      if (!says_attack) ++fn;
    } else {
      ++benign;
      if (says_attack) ++fp;
    }
  }
  s.accuracy = static_cast<double>(correct) / static_cast<double>(test.rows());
  s.fp_rate = benign ? static_cast<double>(fp) / static_cast<double>(benign) : 0.0;
  s.fn_rate = attack ? static_cast<double>(fn) / static_cast<double>(attack) : 0.0;
  return s;
}

}  // namespace mtdfl
