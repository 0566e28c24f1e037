#include "skillrec/skillnet.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "skillrec/error.hpp"

namespace skillrec {

using nlohmann::json;

namespace {

// std distributions are implementation-defined; these keep runs identical
// across standard libraries.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_targets(const Eigen::MatrixXd& x, const Targets& y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw Error(ErrorCode::DimMismatch, "have " + std::to_string(x.rows()) + " inputs but " +
                                            std::to_string(y.size()) + " targets");
  }
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
  return out;
}

Eigen::MatrixXd matrix_from_json(const json& j, Eigen::Index rows, Eigen::Index cols,
                                 std::string_view name) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows * cols) {
    throw Error(ErrorCode::CorruptRecord, "model array '" + std::string(name) + "' has wrong size");
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = j[k++];
      if (!v.is_number()) {
        throw Error(ErrorCode::CorruptRecord, "model array '" + std::string(name) + "' non-numeric");
      }
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

json net_to_json(const Mlp& net) {
  return {{"input_dim", net.input_dim()},
          {"hidden_units", net.hidden_units()},
          {"output_units", net.output_dim()},
          {"w1", matrix_to_json(net.w1)},
          {"b1", matrix_to_json(net.b1)},
          {"w2", matrix_to_json(net.w2)},
          {"b2", matrix_to_json(net.b2)}};
}

Mlp net_from_json(const json& j) {
  const auto in = j.at("input_dim").get<Eigen::Index>();
  const auto hidden = j.at("hidden_units").get<Eigen::Index>();
  const auto out = j.at("output_units").get<Eigen::Index>();
  Mlp net;
  net.w1 = matrix_from_json(j.at("w1"), in, hidden, "w1");
  net.b1 = matrix_from_json(j.at("b1"), 1, hidden, "b1");
  net.w2 = matrix_from_json(j.at("w2"), hidden, out, "w2");
  net.b2 = matrix_from_json(j.at("b2"), 1, out, "b2");
  if (!net.all_finite()) throw Error(ErrorCode::CorruptRecord, "model has non-finite weights");
  return net;
}

json upto_to_json(const TrainedUpto& t) { return {{"year", t.offering_year}, {"lab", t.lab_index}}; }

TrainedUpto upto_from_json(const json& j) {
  return {j.at("year").get<int>(), j.at("lab").get<int>()};
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void Hyperparams::validate() const {
  if (hidden_units <= 0 || epochs <= 0 || !(learning_rate > 0.0) || !(l2_lambda > 0.0)) {
    throw Error(ErrorCode::InvalidArgument,
                "hidden_units, epochs, learning_rate and l2_lambda must all be positive");
  }
}

json hyperparams_to_json(const Hyperparams& h) {
  return {{"hidden_units", h.hidden_units},
          {"epochs", h.epochs},
          {"learning_rate", h.learning_rate},
          {"l2_lambda", h.l2_lambda},
          {"seed", h.seed}};
}

Hyperparams hyperparams_from_json(const json& j) {
  Hyperparams h;
  h.hidden_units = j.at("hidden_units").get<int>();
  h.epochs = j.at("epochs").get<int>();
  h.learning_rate = j.at("learning_rate").get<double>();
  h.l2_lambda = j.at("l2_lambda").get<double>();
  h.seed = j.at("seed").get<std::uint64_t>();
  return h;
}

// --- Mlp ------------------------------------------------------------------

Mlp::Mlp(Eigen::Index input_dim, Eigen::Index hidden, Eigen::Index outputs)
    : w1(Eigen::MatrixXd::Zero(input_dim, hidden)),
      b1(Eigen::RowVectorXd::Zero(hidden)),
      w2(Eigen::MatrixXd::Zero(hidden, outputs)),
      b2(Eigen::RowVectorXd::Zero(outputs)) {}

Mlp Mlp::initialized(Eigen::Index input_dim, Eigen::Index hidden, Eigen::Index outputs,
                     std::uint64_t seed) {
  Mlp net(input_dim, hidden, outputs);
  std::mt19937_64 rng(seed);
  auto fill = [&rng](Eigen::MatrixXd& w) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
    }
  };
  fill(net.w1);
  fill(net.w2);
  return net;
}

Eigen::Index Mlp::parameter_count() const noexcept {
  return w1.size() + b1.size() + w2.size() + b2.size();
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (x.cols() != input_dim()) {
    throw Error(ErrorCode::DimMismatch, "input has dim " + std::to_string(x.cols()) +
                                            ", model expects " + std::to_string(input_dim()));
  }
  Eigen::MatrixXd hidden = ((x * w1).rowwise() + b1).cwiseMax(0.0);
  return (hidden * w2).rowwise() + b2;
}

bool Mlp::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

bool operator==(const Mlp& a, const Mlp& b) {
  auto same = [](const auto& x, const auto& y) {
    return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
  };
  return same(a.w1, b.w1) && same(a.b1, b.b1) && same(a.w2, b.w2) && same(a.b2, b.b2);
}

// --- loss -----------------------------------------------------------------

double loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x, const Targets& y,
                         double lambda, Gradients& grad) {
  check_targets(x, y);
  const Eigen::Index n = x.rows();
  const Eigen::MatrixXd z1 = (x * net.w1).rowwise() + net.b1;
  const Eigen::MatrixXd h = z1.cwiseMax(0.0);
  const Eigen::MatrixXd z2 = (h * net.w2).rowwise() + net.b2;

  Eigen::MatrixXd dz2(n, net.output_dim());
  double data_loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    switch (y.kind) {
      case OutputKind::Softmax: {
        const double m = z2.row(i).maxCoeff();
        const Eigen::RowVectorXd e = (z2.row(i).array() - m).exp();
        const double sum = e.sum();
        const int label = y.classes[static_cast<std::size_t>(i)];
        if (label < 0 || label >= net.output_dim()) {
          throw Error(ErrorCode::InvalidArgument, "class label out of range");
        }
        data_loss += m + std::log(sum) - z2(i, label);
        dz2.row(i) = e / sum;
        dz2(i, label) -= 1.0;
        break;
      }
      case OutputKind::Linear: {
        const double d = z2(i, 0) - y.values[static_cast<std::size_t>(i)];
        data_loss += d * d;
        dz2(i, 0) = 2.0 * d;
        break;
      }
      case OutputKind::Sigmoid: {
        const double z = z2(i, 0);
        const double t = y.values[static_cast<std::size_t>(i)];
        data_loss += softplus(z) - t * z;
        dz2(i, 0) = sigmoid(z) - t;
        break;
      }
    }
  }
  if (n > 0) {
    data_loss /= static_cast<double>(n);
    dz2 /= static_cast<double>(n);
  }

  grad.w2 = h.transpose() * dz2 + lambda * net.w2;
  grad.b2 = dz2.colwise().sum();
  const Eigen::MatrixXd dz1 = ((dz2 * net.w2.transpose()).array() * (z1.array() > 0.0).cast<double>()).matrix();
  grad.w1 = x.transpose() * dz1 + lambda * net.w1;
  grad.b1 = dz1.colwise().sum();

  return data_loss + 0.5 * lambda * (net.w1.squaredNorm() + net.w2.squaredNorm());
}

double loss(const Mlp& net, const Eigen::MatrixXd& x, const Targets& y, double lambda) {
  Gradients unused;
  return loss_and_gradient(net, x, y, lambda, unused);
}

double gradient_check(const Mlp& net, const Eigen::MatrixXd& x, const Targets& y, double lambda,
                      double epsilon) {
  Gradients analytic;
  loss_and_gradient(net, x, y, lambda, analytic);
  Mlp probe = net;
  double worst = 0.0;
  auto sweep = [&](auto& param, const auto& analytic_param) {
    for (Eigen::Index k = 0; k < param.size(); ++k) {
      const double saved = param.data()[k];
      param.data()[k] = saved + epsilon;
      const double up = loss(probe, x, y, lambda);
      param.data()[k] = saved - epsilon;
      const double down = loss(probe, x, y, lambda);
      param.data()[k] = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = analytic_param.data()[k];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-12);
      worst = std::max(worst, rel);
    }
  };
  sweep(probe.w1, analytic.w1);
  sweep(probe.b1, analytic.b1);
  sweep(probe.w2, analytic.w2);
  sweep(probe.b2, analytic.b2);
  return worst;
}

bool TrainingLog::loss_non_increasing() const noexcept {
  for (std::size_t i = 1; i < loss_history.size(); ++i) {
    if (loss_history[i] > loss_history[i - 1]) return false;
  }
  return true;
}

Mlp fit(const Eigen::MatrixXd& x, const Targets& y, const Hyperparams& hyper, TrainingLog* log) {
  hyper.validate();
  check_targets(x, y);
  if (x.rows() == 0) throw Error(ErrorCode::EmptyInput, "no training examples");
  const Eigen::Index outputs = y.kind == OutputKind::Softmax ? y.class_count : 1;
  Mlp net = Mlp::initialized(x.cols(), hyper.hidden_units, outputs, hyper.seed);

  TrainingLog local;
  TrainingLog& out = log != nullptr ? *log : local;
  out.loss_history.clear();
  out.loss_history.reserve(static_cast<std::size_t>(hyper.epochs) + 1);
  if (y.kind == OutputKind::Softmax) {
    out.single_class = std::all_of(y.classes.begin(), y.classes.end(),
                                   [&](int c) { return c == y.classes.front(); });
  }

  Gradients grad;
  for (int epoch = 0; epoch <= hyper.epochs; ++epoch) {
    const double value = loss_and_gradient(net, x, y, hyper.l2_lambda, grad);
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::NonFiniteLoss, "loss became non-finite at epoch " + std::to_string(epoch));
    }
    out.loss_history.push_back(value);
    if (epoch == hyper.epochs) break;
    net.w1 -= hyper.learning_rate * grad.w1;
    net.b1 -= hyper.learning_rate * grad.b1;
    net.w2 -= hyper.learning_rate * grad.w2;
    net.b2 -= hyper.learning_rate * grad.b2;
  }
  return net;
}

Eigen::MatrixXd stack_embeddings(std::span<const Embedding> embeddings) {
  std::vector<const Embedding*> ptrs;
  ptrs.reserve(embeddings.size());
  for (const auto& e : embeddings) ptrs.push_back(&e);
  return stack_embeddings(std::span<const Embedding* const>(ptrs));
}

Eigen::MatrixXd stack_embeddings(std::span<const Embedding* const> embeddings) {
  if (embeddings.empty()) return {};
  const auto dim = static_cast<Eigen::Index>(embeddings.front()->dim());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(embeddings.size()), dim);
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto& v = embeddings[i]->values;
    if (static_cast<Eigen::Index>(v.size()) != dim) {
      throw Error(ErrorCode::DimMismatch, "embeddings differ in dimension");
    }
    for (Eigen::Index c = 0; c < dim; ++c) x(static_cast<Eigen::Index>(i), c) = v[static_cast<std::size_t>(c)];
  }
  return x;
}

// --- balancing ------------------------------------------------------------

std::vector<std::size_t> balance_downsample(std::span<const int> labels, std::uint64_t seed) {
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "nothing to balance");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::size_t minority = labels.size();
  for (const auto& [_, members] : by_class) minority = std::min(minority, members.size());

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> out;
  out.reserve(minority * by_class.size());
  for (auto& [_, members] : by_class) {
    // partial Fisher-Yates: the first `minority` slots become the sample
    for (std::size_t i = 0; i < minority; ++i) {
      std::swap(members[i], members[i + uniform_index(rng, members.size() - i)]);
    }
    out.insert(out.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(minority));
  }
  shuffle(out, rng);
  return out;
}

std::vector<LabeledExample> balance_downsample(std::span<const LabeledExample> examples,
                                               std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(examples.size());
  for (const auto& e : examples) labels.push_back(e.label);
  std::vector<LabeledExample> out;
  for (std::size_t i : balance_downsample(labels, seed)) out.push_back(examples[i]);
  return out;
}

// --- skill models ---------------------------------------------------------

SkillModel train(SkillTopic topic, const Eigen::MatrixXd& x, std::span<const int> labels,
                 const Hyperparams& hyper, TrainedUpto trained_upto, TrainingLog* log) {
  Targets y;
  y.kind = OutputKind::Softmax;
  y.classes.assign(labels.begin(), labels.end());
  for (int c : y.classes) {
    if (c < 0 || c >= kLevelCount) throw Error(ErrorCode::InvalidArgument, "label outside [0, 3]");
  }
  Hyperparams seeded = hyper;
  seeded.seed = derive_seed(hyper.seed, topic_index(topic));
  if (!y.classes.empty() && static_cast<Eigen::Index>(y.classes.size()) == x.rows() &&
      std::all_of(y.classes.begin(), y.classes.end(),
                  [&](int c) { return c == y.classes.front(); })) {
    // Nothing to discriminate: a constant predictor of the one level seen.
    hyper.validate();
    Mlp net = Mlp::initialized(x.cols(), hyper.hidden_units, kLevelCount, seeded.seed);
    net.w2.setZero();
    net.b2.setZero();
    net.b2(y.classes.front()) = std::log(999.0 * (kLevelCount - 1));
    if (log != nullptr) *log = TrainingLog{{}, true};
    return {topic, std::move(net), hyper, trained_upto};
  }
  return {topic, fit(x, y, seeded, log), hyper, trained_upto};
}

SkillModel train(SkillTopic topic, std::span<const LabeledExample> examples,
                 const Hyperparams& hyper, TrainedUpto trained_upto, TrainingLog* log) {
  if (examples.empty()) throw Error(ErrorCode::EmptyInput, "no training examples");
  std::vector<const Embedding*> xs;
  std::vector<int> labels;
  for (const auto& e : examples) {
    xs.push_back(&e.x);
    labels.push_back(e.label);
  }
  return train(topic, stack_embeddings(std::span<const Embedding* const>(xs)), labels, hyper,
               trained_upto, log);
}

std::array<double, kLevelCount> softmax(std::span<const double, kLevelCount> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  std::array<double, kLevelCount> p{};
  double sum = 0.0;
  for (int k = 0; k < kLevelCount; ++k) {
    p[k] = std::exp(logits[k] - m);
    sum += p[k];
  }
  for (double& v : p) v /= sum;
  return p;
}

int argmax_level(std::span<const double, kLevelCount> values) {
  int best = 0;
  for (int k = 1; k < kLevelCount; ++k) {
    if (values[k] > values[best]) best = k;
  }
  return best;
}

SkillPrediction predict(const SkillModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw Error(ErrorCode::DimMismatch, "input has dim " + std::to_string(x.size()) +
                                            ", model expects " + std::to_string(model.input_dim()));
  }
  const Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd out = model.net.forward(row);
  std::array<double, kLevelCount> logits{};
  for (int k = 0; k < kLevelCount; ++k) logits[k] = out(0, k);
  SkillPrediction pred;
  pred.probabilities = softmax(logits);
  pred.level = argmax_level(logits);
  return pred;
}

// --- baselines ------------------------------------------------------------

std::string_view baseline_kind_name(BaselineKind kind) noexcept {
  return kind == BaselineKind::SolutionTime ? "solution-time" : "correctness";
}

BaselineKind parse_baseline_kind(std::string_view name) {
  if (name == "solution-time") return BaselineKind::SolutionTime;
  if (name == "correctness") return BaselineKind::Correctness;
  throw Error(ErrorCode::InvalidArgument, "unknown baseline kind '" + std::string(name) + "'");
}

BaselineModel train_baseline(BaselineKind kind, const Eigen::MatrixXd& x,
                             std::span<const double> targets, const Hyperparams& hyper,
                             TrainedUpto trained_upto, TrainingLog* log) {
  if (targets.empty()) throw Error(ErrorCode::EmptyInput, "no baseline training examples");
  Targets y;
  y.kind = kind == BaselineKind::SolutionTime ? OutputKind::Linear : OutputKind::Sigmoid;
  y.values.reserve(targets.size());
  for (double t : targets) {
    if (kind == BaselineKind::SolutionTime) {
      if (!(t >= 0.0)) throw Error(ErrorCode::InvalidArgument, "solution time must be >= 0");
      y.values.push_back(std::log1p(t));
    } else {
      if (t != 0.0 && t != 1.0) throw Error(ErrorCode::InvalidArgument, "correctness must be 0/1");
      y.values.push_back(t);
    }
  }
  Hyperparams seeded = hyper;
  seeded.seed = derive_seed(hyper.seed, kTopicCount + static_cast<std::uint64_t>(kind));
  return {kind, fit(x, y, seeded, log), hyper, trained_upto};
}

double predict_baseline(const BaselineModel& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw Error(ErrorCode::DimMismatch, "input has dim " + std::to_string(x.size()) +
                                            ", model expects " + std::to_string(model.input_dim()));
  }
  const Eigen::Map<const Eigen::RowVectorXd> row(x.data(), static_cast<Eigen::Index>(x.size()));
  const double z = model.net.forward(row)(0, 0);
  return model.kind == BaselineKind::SolutionTime ? z : sigmoid(z);
}

// --- persistence ----------------------------------------------------------

json skill_model_to_json(const SkillModel& m) {
  json j = net_to_json(m.net);
  j["topic"] = std::string(topic_name(m.topic));
  j["hyper"] = hyperparams_to_json(m.hyper);
  j["trained_upto"] = upto_to_json(m.trained_upto);
  return j;
}

SkillModel skill_model_from_json(const json& j) {
  try {
    SkillModel m{parse_topic(j.at("topic").get<std::string>()), net_from_json(j),
                 hyperparams_from_json(j.at("hyper")), upto_from_json(j.at("trained_upto"))};
    if (m.net.output_dim() != kLevelCount) {
      throw Error(ErrorCode::CorruptRecord, "skill model must have 4 outputs");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("skill model: ") + e.what());
  }
}

json baseline_model_to_json(const BaselineModel& m) {
  json j = net_to_json(m.net);
  j["kind"] = std::string(baseline_kind_name(m.kind));
  j["hyper"] = hyperparams_to_json(m.hyper);
  j["trained_upto"] = upto_to_json(m.trained_upto);
  return j;
}

BaselineModel baseline_model_from_json(const json& j) {
  try {
    BaselineModel m{parse_baseline_kind(j.at("kind").get<std::string>()), net_from_json(j),
                    hyperparams_from_json(j.at("hyper")), upto_from_json(j.at("trained_upto"))};
    if (m.net.output_dim() != 1) {
      throw Error(ErrorCode::CorruptRecord, "baseline model must have 1 output");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("baseline model: ") + e.what());
  }
}

}  // namespace skillrec
