// SPDX-License-Identifier: Apache-2.0
#include "mtdfl/flengine.hpp"

#include <map>
#include <numeric>

#include "mtdfl/error.hpp"

namespace mtdfl {

std::vector<tk::LayerSpec> make_task_layers(Eigen::Index features, const std::vector<Eigen::Index>& hidden,
                                            Eigen::Index classes, tk::Activation hidden_act) {
  std::vector<tk::LayerSpec> layers;
  Eigen::Index in = features;
  for (Eigen::Index h : hidden) {
    layers.push_back({in, h, hidden_act});
    in = h;
  }
  layers.push_back({in, classes, tk::Activation::Softmax});
  return layers;
}

ModelParams init_model(const std::vector<tk::LayerSpec>& layers, Rng& rng) {
  TaskNet net(layers);
  net.init_uniform(rng);
  return {net.params(), layers};
}

TaskNet to_net(const ModelParams& p) {
  TaskNet net(p.layers);
  net.set_params(p.values);
  return net;
}

namespace {

tk::Mat<double> rows_of(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& idx, std::size_t from,
                        std::size_t to) {
  tk::Mat<double> out(static_cast<Eigen::Index>(to - from), x.cols());
  for (std::size_t k = from; k < to; ++k) out.row(static_cast<Eigen::Index>(k - from)) = x.row(idx[k]);
  return out;
}

Eigen::VectorXi labels_of(const Eigen::VectorXi& y, const std::vector<Eigen::Index>& idx, std::size_t from,
                          std::size_t to) {
  Eigen::VectorXi out(static_cast<Eigen::Index>(to - from));
  for (std::size_t k = from; k < to; ++k) out[static_cast<Eigen::Index>(k - from)] = y[idx[k]];
  return out;
}

}  // namespace

std::optional<LocalResult> local_train(const ModelParams& global, const DeviceShard& shard,
                                       const LocalTrainConfig& cfg, Rng& rng) {
  if (shard.empty()) return std::nullopt;
  if (cfg.epochs < 0) throw DomainError("local epochs must be >= 0");
  if (shard.x.rows() != shard.y.size()) throw ShapeError("shard features and labels disagree");
  TaskNet net = to_net(global);
  if (cfg.epochs == 0) return LocalResult{global, evaluate(global, shard, cfg.loss).loss};

  const std::size_t n = shard.size();
  const std::size_t bs = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<Eigen::Index> order(n);
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  tk::Optimizer<double> opt(cfg.optimizer, cfg.lr);
  double last_epoch_loss = 0.0;
  const tk::Mat<double> full_x = shard.x;

  for (int e = 0; e < cfg.epochs; ++e) {
    if (bs < n) {
      for (std::size_t i = n - 1; i > 0; --i)
        std::swap(order[i], order[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i)))]);
    }
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t from = 0; from < n; from += bs) {
      const std::size_t to = std::min(n, from + bs);
      TaskNet::Tape tape;
      const bool whole = (bs == n);
      const tk::Mat<double> xb = whole ? full_x : rows_of(shard.x, order, from, to);
      const Eigen::VectorXi yb = whole ? shard.y : labels_of(shard.y, order, from, to);
      net.forward(xb, &tape);
      const auto lg = tk::loss_and_grad(cfg.loss, tape.output, yb);
      Eigen::VectorXd grad = net.backward(tape, lg.grad);
      if (cfg.l2 > 0.0) grad += cfg.l2 * net.params();
      opt.step(net.params(), grad);
      sum += lg.value;
      ++batches;
    }
    last_epoch_loss = sum / static_cast<double>(batches);
  }
  return LocalResult{{net.params(), global.layers}, last_epoch_loss};
}

WeightedModel aggregate_partial(const std::vector<WeightedModel>& uploads) {
  if (uploads.empty()) throw AggregationError("cannot aggregate an empty upload list");
  const ModelParams& first = uploads.front().params;
  // Offsets from the first upload keep identical uploads exact.
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(first.size());
  double total = 0.0;
  for (const WeightedModel& u : uploads) {
    if (!u.params.same_shape(first)) throw AggregationError("uploads have mismatched shapes");
    if (u.weight < 0.0) throw AggregationError("negative aggregation weight");
    acc += u.weight * (u.params.values - first.values);
    total += u.weight;
  }
  if (!(total > 0.0)) throw AggregationError("aggregation weights sum to zero");
  return {{first.values + acc / total, first.layers}, total};
}

ModelParams aggregate_global(const std::vector<WeightedModel>& partials) {
  return aggregate_partial(partials).params;
}

ModelParams aggregate_hierarchical(const std::vector<WeightedModel>& uploads, const std::vector<std::size_t>& group) {
  if (uploads.size() != group.size()) throw ShapeError("one group id per upload is required");
  std::map<std::size_t, std::vector<WeightedModel>> by_group;
  for (std::size_t k = 0; k < uploads.size(); ++k) by_group[group[k]].push_back(uploads[k]);
  std::vector<WeightedModel> partials;
  for (const auto& [id, members] : by_group) partials.push_back(aggregate_partial(members));
  return aggregate_global(partials);
}

EvalResult evaluate(const ModelParams& model, const DeviceShard& test, tk::LossKind loss) {
  if (test.empty()) return {};
  const TaskNet net = to_net(model);
  const tk::Mat<double> probs = net.forward(test.x);
  std::size_t correct = 0;
  for (Eigen::Index r = 0; r < probs.rows(); ++r) {
    Eigen::Index arg = 0;
    probs.row(r).maxCoeff(&arg);
    if (arg == test.y[r]) ++correct;
  }
  const double l = loss == tk::LossKind::CrossEntropy
                       ? tk::cross_entropy_loss(probs, test.y)
                       : tk::mse_loss(probs, tk::one_hot<double>(test.y, probs.cols()));
  return {static_cast<double>(correct) / static_cast<double>(test.size()), l};
}

bool label_flow(const std::vector<bool>& packet_labels, double threshold) {
  if (packet_labels.empty()) return false;
  const auto bad = std::count(packet_labels.begin(), packet_labels.end(), true);
  return static_cast<double>(bad) / static_cast<double>(packet_labels.size()) > threshold;
}

}  // namespace mtdfl
