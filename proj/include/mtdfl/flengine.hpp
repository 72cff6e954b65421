// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <vector>

#include "mtdfl/random.hpp"
#include "mtdfl/tensorkit.hpp"

namespace mtdfl {

using TaskNet = tk::DenseNet<double>;

/// Learnable weights exchanged between devices, BSs and the cloud.
struct ModelParams {
  Eigen::VectorXd values;
  std::vector<tk::LayerSpec> layers;

  Eigen::Index size() const { return values.size(); }
  bool same_shape(const ModelParams& o) const { return layers == o.layers && values.size() == o.values.size(); }
};

/// Feed-forward classifier over `features` inputs; empty `hidden` gives a
/// single affine layer with softmax output.
std::vector<tk::LayerSpec> make_task_layers(Eigen::Index features, const std::vector<Eigen::Index>& hidden,
                                            Eigen::Index classes = 2,
                                            tk::Activation hidden_act = tk::Activation::Relu);

ModelParams init_model(const std::vector<tk::LayerSpec>& layers, Rng& rng);
TaskNet to_net(const ModelParams& p);

struct DeviceShard {
  std::size_t device = 0;
  Eigen::MatrixXd x;  // samples x features
  Eigen::VectorXi y;

  std::size_t size() const { return static_cast<std::size_t>(y.size()); }
  bool empty() const { return y.size() == 0; }
};

struct LocalTrainConfig {
  int epochs = 5;
  double lr = 0.05;
  std::size_t batch_size = 0;  // 0 means full batch
  double l2 = 2.0;
  tk::OptimizerKind optimizer = tk::OptimizerKind::Sgd;
  tk::LossKind loss = tk::LossKind::CrossEntropy;
};

struct LocalResult {
  ModelParams params;
  double loss = 0.0;  // mean data loss over the final epoch's batches
};

/// Runs `epochs` passes of (mini-)batch descent from `global`. Returns nullopt
/// for an empty shard. With zero epochs the loss is the global model's loss.
std::optional<LocalResult> local_train(const ModelParams& global, const DeviceShard& shard,
                                       const LocalTrainConfig& cfg, Rng& rng);

struct WeightedModel {
  ModelParams params;
  double weight = 0.0;
};

enum class Weighting { DataSize, Uniform };

inline double upload_weight(std::size_t samples, Weighting w) {
  return w == Weighting::DataSize ? static_cast<double>(samples) : 1.0;
}

/// Weighted mean of the uploads; the result carries the total weight.
WeightedModel aggregate_partial(const std::vector<WeightedModel>& uploads);
ModelParams aggregate_global(const std::vector<WeightedModel>& partials);

/// Groups uploads by `group[i]`, aggregates each group, then aggregates the
/// partials. Groups are visited in ascending id order.
ModelParams aggregate_hierarchical(const std::vector<WeightedModel>& uploads, const std::vector<std::size_t>& group);

struct EvalResult {
  double accuracy = 0.0;
  double loss = 0.0;
};

EvalResult evaluate(const ModelParams& model, const DeviceShard& test,
                    tk::LossKind loss = tk::LossKind::CrossEntropy);

/// Malicious iff the malicious share is strictly above `threshold`.
bool label_flow(const std::vector<bool>& packet_labels, double threshold = 0.7);

/// One executed FL round as seen by the aggregator.
struct RoundResult {
  std::vector<std::size_t> participants;
  std::vector<ModelParams> uploads;   // aligned with participants
  std::vector<double> weights;        // aggregation weights
  std::vector<double> local_losses;   // F_u
  std::vector<bool> poisoned;         // upload was replaced by the adversary
  ModelParams global;
  double accuracy = 0.0;
  double test_loss = 0.0;
};

}  // namespace mtdfl
