// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "mtdfl/tensorkit.hpp"

namespace mtdfl {

/// Chronological security events of one device: one feature row and one
/// attack label per event.
struct EventSequence {
  std::size_t device = 0;
  Eigen::MatrixXd features;
  std::vector<std::uint8_t> labels;

  Eigen::Index size() const { return static_cast<Eigen::Index>(labels.size()); }
  Eigen::Index width() const { return features.cols(); }
  void append(const EventSequence& other);
};

/// Rows of L consecutive events (laid out side by side, L*F columns) and the
/// label of the event that follows each window.
struct WindowedDataset {
  Eigen::Index window = 0;
  Eigen::Index width = 0;
  Eigen::MatrixXd x;
  Eigen::VectorXi y;

  Eigen::Index rows() const { return y.size(); }
  void append(const WindowedDataset& other);
  double attack_fraction() const;
};

WindowedDataset build_windows(const EventSequence& log, Eigen::Index window);

struct AnticipationProfile {
  std::size_t iteration = 0;
  Eigen::VectorXd p;
};

/// Side information a query carries: the ground-truth bit (used only by the
/// oracle family) and a key that makes noisy draws reproducible.
struct WindowContext {
  bool truth = false;
  std::uint64_t key = 0;
};

class Predictor {
 public:
  virtual ~Predictor() = default;
  /// Probability that the device behind `window` (L x F) is attacking.
  virtual double attack_probability(const Eigen::MatrixXd& window, const WindowContext& ctx) const = 0;
  /// Batched form over a windowed dataset; truths come from `data.y`.
  virtual Eigen::VectorXd attack_probabilities(const WindowedDataset& data, std::uint64_t key_salt) const;
  /// Fallback for devices whose history is shorter than the window.
  virtual double prior() const { return 0.0; }
  virtual std::string name() const = 0;
};

class RecurrentPredictor : public Predictor {
 public:
  RecurrentPredictor(tk::RecurrentClassifier<double> net, Eigen::Index window, double prior)
      : net_(std::move(net)), window_(window), prior_(prior) {}

  double attack_probability(const Eigen::MatrixXd& window, const WindowContext& ctx) const override;
  Eigen::VectorXd attack_probabilities(const WindowedDataset& data, std::uint64_t key_salt) const override;
  double prior() const override { return prior_; }
  std::string name() const override { return tk::to_string(net_.kind()); }

  const tk::RecurrentClassifier<double>& net() const { return net_; }
  tk::RecurrentClassifier<double>& net() { return net_; }
  Eigen::Index window() const { return window_; }

 private:
  tk::RecurrentClassifier<double> net_;
  Eigen::Index window_;
  double prior_;
};

/// Knows the truth: 1 for attacking devices, 0 otherwise.
class OraclePredictor : public Predictor {
 public:
  double attack_probability(const Eigen::MatrixXd&, const WindowContext& ctx) const override {
    return ctx.truth ? 1.0 : 0.0;
  }
  std::string name() const override { return "oracle"; }
};

/// The oracle with its bit flipped at configured rates; each flip is a pure
/// function of (seed, key).
class NoisyOraclePredictor : public Predictor {
 public:
  NoisyOraclePredictor(double fp, double fn, std::uint64_t seed) : fp_(fp), fn_(fn), seed_(seed) {}
  double attack_probability(const Eigen::MatrixXd&, const WindowContext& ctx) const override;
  std::string name() const override { return "noisy-oracle"; }

 private:
  double fp_, fn_;
  std::uint64_t seed_;
};

class ConstantPredictor : public Predictor {
 public:
  explicit ConstantPredictor(double p) : p_(p) {}
  double attack_probability(const Eigen::MatrixXd&, const WindowContext&) const override { return p_; }
  double prior() const override { return p_; }
  std::string name() const override { return "constant"; }

 private:
  double p_;
};

struct AnticipatorTrainConfig {
  tk::CellKind arch = tk::CellKind::Gru;
  Eigen::Index hidden = 8;
  int epochs = 60;
  double lr = 1e-2;
  std::size_t batch_size = 64;
  tk::LossKind loss = tk::LossKind::Mse;
  bool balance_classes = true;
  std::uint64_t seed = 0;
};

struct TrainedAnticipator {
  std::unique_ptr<RecurrentPredictor> predictor;
  bool degenerate = false;  // training set held a single class
  double train_accuracy = 0.0;
};

TrainedAnticipator train_anticipator(const WindowedDataset& data, const AnticipatorTrainConfig& cfg);

/// p_u from the last L events of each log. `key_salt` is mixed with the device
/// index to form the query key; the truth bit is the label of the last event.
AnticipationProfile anticipate(const Predictor& predictor, const std::vector<EventSequence>& logs,
                               Eigen::Index window, std::size_t iteration, std::uint64_t key_salt = 0);

struct AnticipatorScore {
  double accuracy = 0.0;
  double fp_rate = 0.0;
  double fn_rate = 0.0;
};

AnticipatorScore evaluate_anticipator(const Predictor& predictor, const WindowedDataset& test,
                                      std::uint64_t key_salt = 0, double threshold = 0.5);

}  // namespace mtdfl
