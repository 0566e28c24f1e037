#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "skillrec/domain.hpp"
#include "skillrec/embed.hpp"

namespace skillrec {

struct Hyperparams {
  int hidden_units = 100;
  int epochs = 200;
  double learning_rate = 0.001;
  double l2_lambda = 0.1;
  std::uint64_t seed = 42;

  /// InvalidArgument unless every field is positive.
  void validate() const;

  friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Independent seed for a numbered sub-stream of `seed` (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

nlohmann::json hyperparams_to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

/// Latest (offering, lab) whose data a model has seen.
struct TrainedUpto {
  int offering_year = 0;
  int lab_index = 0;

  friend bool operator==(const TrainedUpto&, const TrainedUpto&) = default;
  friend auto operator<=>(const TrainedUpto&, const TrainedUpto&) = default;
};

enum class OutputKind : std::uint8_t {
  Softmax,  ///< multiclass, mean cross-entropy
  Linear,   ///< one output, mean squared error
  Sigmoid,  ///< one output, binary cross-entropy
};

/// One hidden ReLU layer. Weights are stored input-major:
/// hidden = relu(x * w1 + b1), out = hidden * w2 + b2.
struct Mlp {
  Eigen::MatrixXd w1;
  Eigen::RowVectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::RowVectorXd b2;

  Mlp() = default;
  Mlp(Eigen::Index input_dim, Eigen::Index hidden, Eigen::Index outputs);
  /// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
  static Mlp initialized(Eigen::Index input_dim, Eigen::Index hidden, Eigen::Index outputs,
                         std::uint64_t seed);

  Eigen::Index input_dim() const noexcept { return w1.rows(); }
  Eigen::Index hidden_units() const noexcept { return w1.cols(); }
  Eigen::Index output_dim() const noexcept { return w2.cols(); }
  Eigen::Index parameter_count() const noexcept;

  /// Raw output-layer activations, one row per input row.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  bool all_finite() const;
  friend bool operator==(const Mlp& a, const Mlp& b);
};

/// Targets for one training set: class indices for Softmax, reals otherwise.
struct Targets {
  OutputKind kind = OutputKind::Softmax;
  std::vector<int> classes;
  std::vector<double> values;
  int class_count = kLevelCount;

  std::size_t size() const noexcept {
    return kind == OutputKind::Softmax ? classes.size() : values.size();
  }
};

struct Gradients {
  Eigen::MatrixXd w1;
  Eigen::RowVectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::RowVectorXd b2;
};

/// Mean data loss plus (lambda / 2) * (|w1|^2 + |w2|^2). Biases are not
/// penalized. An empty batch contributes zero data loss.
double loss(const Mlp& net, const Eigen::MatrixXd& x, const Targets& y, double lambda);
double loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x, const Targets& y,
                         double lambda, Gradients& grad);

/// Max relative error |a - n| / max(|a| + |n|, 1e-12) between the analytic
/// gradient and central differences over every parameter.
double gradient_check(const Mlp& net, const Eigen::MatrixXd& x, const Targets& y, double lambda,
                      double epsilon);

struct TrainingLog {
  /// Loss before the first step, then after each step (epochs + 1 values);
  /// empty when no descent was run.
  std::vector<double> loss_history;
  bool single_class = false;

  bool loss_non_increasing() const noexcept;
};

/// Full-batch gradient descent for exactly hyper.epochs steps.
Mlp fit(const Eigen::MatrixXd& x, const Targets& y, const Hyperparams& hyper,
        TrainingLog* log = nullptr);

/// Stacks embeddings as rows; DimMismatch if they disagree.
Eigen::MatrixXd stack_embeddings(std::span<const Embedding> embeddings);
Eigen::MatrixXd stack_embeddings(std::span<const Embedding* const> embeddings);

/// Indices into `labels` that keep min-class-count examples of every class
/// present, drawn without replacement and returned in shuffled order.
std::vector<std::size_t> balance_downsample(std::span<const int> labels, std::uint64_t seed);

struct LabeledExample {
  Embedding x;
  int label = 0;
};
std::vector<LabeledExample> balance_downsample(std::span<const LabeledExample> examples,
                                               std::uint64_t seed);

struct SkillModel {
  SkillTopic topic = SkillTopic::Math;
  Mlp net;
  Hyperparams hyper;
  TrainedUpto trained_upto;

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(net.input_dim()); }
};

struct SkillPrediction {
  int level = 0;
  std::array<double, kLevelCount> probabilities{};
};

/// Trains a 4-class level classifier; examples are used in the given order.
/// When every label is the same the result is a constant predictor of that
/// level (probability 0.999) and the log records single_class.
SkillModel train(SkillTopic topic, const Eigen::MatrixXd& x, std::span<const int> labels,
                 const Hyperparams& hyper, TrainedUpto trained_upto = {},
                 TrainingLog* log = nullptr);
SkillModel train(SkillTopic topic, std::span<const LabeledExample> examples,
                 const Hyperparams& hyper, TrainedUpto trained_upto = {},
                 TrainingLog* log = nullptr);

/// Numerically stable softmax.
std::array<double, kLevelCount> softmax(std::span<const double, kLevelCount> logits);
/// argmax with ties resolved toward the lower class.
int argmax_level(std::span<const double, kLevelCount> values);

SkillPrediction predict(const SkillModel& model, std::span<const double> x);
inline SkillPrediction predict(const SkillModel& model, const Embedding& x) {
  return predict(model, std::span<const double>(x.values));
}

enum class BaselineKind : std::uint8_t { SolutionTime, Correctness };

std::string_view baseline_kind_name(BaselineKind kind) noexcept;
BaselineKind parse_baseline_kind(std::string_view name);

struct BaselineModel {
  BaselineKind kind = BaselineKind::SolutionTime;
  Mlp net;
  Hyperparams hyper;
  TrainedUpto trained_upto;

  std::size_t input_dim() const noexcept { return static_cast<std::size_t>(net.input_dim()); }
};

/// Solution-time targets are raw seconds (regressed as ln(1 + s));
/// correctness targets are 0/1.
BaselineModel train_baseline(BaselineKind kind, const Eigen::MatrixXd& x,
                             std::span<const double> targets, const Hyperparams& hyper,
                             TrainedUpto trained_upto = {}, TrainingLog* log = nullptr);

/// Predicted ln(1 + seconds) or probability of a correct submission.
double predict_baseline(const BaselineModel& model, std::span<const double> x);
inline double predict_baseline(const BaselineModel& model, const Embedding& x) {
  return predict_baseline(model, std::span<const double>(x.values));
}

nlohmann::json skill_model_to_json(const SkillModel& m);
SkillModel skill_model_from_json(const nlohmann::json& j);
nlohmann::json baseline_model_to_json(const BaselineModel& m);
BaselineModel baseline_model_from_json(const nlohmann::json& j);

}  // namespace skillrec
