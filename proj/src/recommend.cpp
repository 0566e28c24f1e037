#include "skillrec/recommend.hpp"

#include <algorithm>
#include <cmath>
#include <future>

#include "skillrec/error.hpp"

namespace skillrec {

std::string_view metric_name(RankingMetric m) noexcept {
  switch (m) {
    case RankingMetric::Skills: return "skills";
    case RankingMetric::SolutionTime: return "solution-time";
    case RankingMetric::Correctness: return "correctness";
  }
  return "unknown";
}

RankingMetric parse_metric(std::string_view name) {
  for (auto m : kAllMetrics) {
    if (metric_name(m) == name) return m;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(name) +
                                              "' (expected skills, solution-time or correctness)");
}

const BaselineModel& ModelSet::baseline(BaselineKind kind) const {
  const auto& slot = kind == BaselineKind::SolutionTime ? solution_time : correctness;
  if (!slot) {
    throw Error(ErrorCode::InvalidArgument,
                "no " + std::string(baseline_kind_name(kind)) + " model was trained");
  }
  return *slot;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::DimMismatch, "cosine of vectors with dims " + std::to_string(a.size()) +
                                            " and " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

SkillVector predict_skills(const ModelSet& models, const Embedding& x) {
  std::array<int, kTopicCount> levels{};
  for (std::size_t t = 0; t < kTopicCount; ++t) levels[t] = predict(models.skills[t], x).level;
  return SkillVector(levels);
}

SkillVector predict_student_skills(const ModelSet& models, const StudentContext& context) {
  return predict_skills(models, context.vector);
}

SkillVector predict_problem_skills(const ModelSet& models, const Problem& problem,
                                   const Embedder& embedder) {
  return predict_skills(models, embedder.embed_one(problem.reference_solution));
}

namespace {

// Sorts (id, score) pairs by the comparator on scores, then by id, and
// assigns ranks 1..min(k, n).
template <typename Better>
std::vector<RankedRecommendation> order(std::vector<std::pair<std::string, double>> scored, int k,
                                        RankingMetric metric, Better better) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  std::sort(scored.begin(), scored.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return better(a.second, b.second);
    return a.first < b.first;
  });
  const std::size_t n = std::min(scored.size(), static_cast<std::size_t>(k));
  std::vector<RankedRecommendation> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back({std::move(scored[i].first), scored[i].second, static_cast<int>(i) + 1, metric});
  }
  return out;
}

}  // namespace

std::vector<RankedRecommendation> rank(
    const SkillVector& student_skills,
    std::span<const std::pair<std::string, SkillVector>> candidates, int k) {
  const auto student = skill_vector_as_reals(student_skills);
  std::vector<std::pair<std::string, std::array<double, kTopicCount>>> reals;
  reals.reserve(candidates.size());
  for (const auto& [id, skills] : candidates) reals.emplace_back(id, skill_vector_as_reals(skills));
  return rank_reals(student, reals, k);
}

std::vector<RankedRecommendation> rank_reals(
    std::span<const double> student,
    std::span<const std::pair<std::string, std::array<double, kTopicCount>>> candidates, int k) {
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(candidates.size());
  // Snap to 12 decimals so rounding noise cannot split exact ties (colinear
  // candidates, or the same candidates under a rescaled student vector).
  for (const auto& [id, v] : candidates) {
    scored.emplace_back(id, std::round(cosine_similarity(student, v) * 1e12) / 1e12);
  }
  return order(std::move(scored), k, RankingMetric::Skills, std::greater<>{});
}

std::vector<RankedRecommendation> rank_by_scores(
    RankingMetric metric, std::span<const std::pair<std::string, double>> scores, int k) {
  std::vector<std::pair<std::string, double>> scored(scores.begin(), scores.end());
  if (metric == RankingMetric::SolutionTime) {
    return order(std::move(scored), k, metric, std::less<>{});
  }
  return order(std::move(scored), k, metric, std::greater<>{});
}

std::vector<RankedRecommendation> rank_baseline(
    RankingMetric metric, const BaselineModel& model,
    std::span<const std::pair<std::string, Embedding>> candidates, int k) {
  if (metric == RankingMetric::Skills) {
    throw Error(ErrorCode::InvalidArgument, "the skills metric has no baseline model");
  }
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(candidates.size());
  for (const auto& [id, e] : candidates) scored.emplace_back(id, predict_baseline(model, e));
  return rank_by_scores(metric, scored, k);
}

std::vector<const Problem*> candidate_pool(const Corpus& corpus, int offering_year,
                                           int current_week, bool filter_by_week) {
  std::vector<const Problem*> out;
  for (const auto& id : corpus.schedule(offering_year).homework_pool()) {
    const Problem& p = corpus.problem(id);
    if (p.role != ProblemRole::Homework) continue;
    if (filter_by_week && p.week > current_week) continue;
    out.push_back(&p);
  }
  return out;
}

std::vector<EmbeddedSubmission> embed_sequence(const SubmissionSequence& seq,
                                               const Embedder& embedder, bool correct_only) {
  std::vector<const Submission*> kept;
  std::vector<std::string> sources;
  for (const auto& s : seq.submissions) {
    if (correct_only && !s.correct) continue;
    kept.push_back(&s);
    sources.push_back(s.source);
  }
  auto embeddings = embedder.embed(sources);
  std::vector<EmbeddedSubmission> out;
  out.reserve(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    out.push_back({kept[i], std::move(embeddings[i])});
  }
  return out;
}

std::vector<RankedRecommendation> recommend_for_student(const Corpus& corpus,
                                                        const ModelSet& models,
                                                        const Embedder& embedder,
                                                        const std::string& student_id,
                                                        int offering_year, int current_week,
                                                        const RecommendOptions& options) {
  if (options.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  const CourseSchedule& schedule = corpus.schedule(offering_year);
  const int current_lab = schedule.lab_of_week(current_week);
  const SubmissionSequence seq =
      student_sequence(corpus, student_id, offering_year, current_lab);
  const auto embedded = embed_sequence(seq, embedder, options.correct_only_context);
  const StudentContext context = summarize(embedded, options.strategy, current_lab);

  const auto pool = candidate_pool(corpus, offering_year, current_week, options.filter_by_week);
  if (pool.empty()) return {};

  if (options.metric == RankingMetric::Skills) {
    const SkillVector student = predict_student_skills(models, context);
    std::vector<std::pair<std::string, SkillVector>> candidates;
    candidates.reserve(pool.size());
    if (options.use_instructor_labels) {
      for (const Problem* p : pool) candidates.emplace_back(p->problem_id, p->skills);
    } else {
      std::vector<std::string> sources;
      for (const Problem* p : pool) sources.push_back(p->reference_solution);
      const auto embeddings = embedder.embed(sources);
      for (std::size_t i = 0; i < pool.size(); ++i) {
        candidates.emplace_back(pool[i]->problem_id, predict_skills(models, embeddings[i]));
      }
    }
    return rank(student, candidates, options.k);
  }

  const auto kind = options.metric == RankingMetric::SolutionTime ? BaselineKind::SolutionTime
                                                                  : BaselineKind::Correctness;
  const BaselineModel& model = models.baseline(kind);
  std::vector<std::string> sources;
  for (const Problem* p : pool) sources.push_back(p->reference_solution);
  auto embeddings = embedder.embed(sources);
  std::vector<std::pair<std::string, Embedding>> candidates;
  candidates.reserve(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    candidates.emplace_back(pool[i]->problem_id, std::move(embeddings[i]));
  }
  return rank_baseline(options.metric, model, candidates, options.k);
}

ModelSetTraining train_model_set(std::span<const LabeledSubmission> labeled,
                                 std::span<const Submission> baseline_data,
                                 const Embedder& embedder, const Hyperparams& hyper,
                                 TrainedUpto trained_upto, bool with_baselines) {
  hyper.validate();
  if (labeled.empty()) {
    throw Error(ErrorCode::InsufficientData, "no correct lab submissions to train on");
  }
  std::vector<std::string> sources;
  sources.reserve(labeled.size());
  for (const auto& ls : labeled) sources.push_back(ls.submission.source);
  const auto embeddings = embedder.embed(sources);
  const Eigen::MatrixXd x = stack_embeddings(embeddings);

  ModelSetTraining out;
  std::array<std::future<SkillModel>, kTopicCount> jobs;
  for (std::size_t t = 0; t < kTopicCount; ++t) {
    jobs[t] = std::async(std::launch::async, [&, t] {
      std::vector<int> labels;
      labels.reserve(labeled.size());
      for (const auto& ls : labeled) labels.push_back(ls.skills.at(t).value());
      const auto keep = balance_downsample(labels, derive_seed(hyper.seed, 2 * kTopicCount + t));
      Eigen::MatrixXd xb(static_cast<Eigen::Index>(keep.size()), x.cols());
      std::vector<int> yb;
      yb.reserve(keep.size());
      for (std::size_t i = 0; i < keep.size(); ++i) {
        xb.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(keep[i]));
        yb.push_back(labels[keep[i]]);
      }
      SkillModel model = train(topic_from_index(t), xb, yb, hyper, trained_upto, &out.logs[t]);
      std::size_t hits = 0;
      for (std::size_t i = 0; i < labeled.size(); ++i) {
        if (predict(model, embeddings[i]).level == labels[i]) ++hits;
      }
      out.training_accuracy[t] = static_cast<double>(hits) / static_cast<double>(labeled.size());
      return model;
    });
  }
  for (std::size_t t = 0; t < kTopicCount; ++t) out.models.skills[t] = jobs[t].get();
  for (std::size_t t = 0; t < kTopicCount; ++t) {
    const auto name = std::string(topic_name(topic_from_index(t)));
    if (out.logs[t].single_class) {
      out.warnings.push_back(name + ": only one level present in training data");
    }
    if (!out.logs[t].loss_non_increasing()) {
      out.warnings.push_back(name + ": training loss increased between epochs");
    }
  }

  if (with_baselines) {
    if (baseline_data.empty()) {
      throw Error(ErrorCode::InsufficientData, "no lab submissions for the baseline models");
    }
    std::vector<std::string> all_sources, timed_sources;
    std::vector<double> correct, seconds;
    for (const auto& s : baseline_data) {
      all_sources.push_back(s.source);
      correct.push_back(s.correct ? 1.0 : 0.0);
      if (s.solution_time_s) {
        timed_sources.push_back(s.source);
        seconds.push_back(*s.solution_time_s);
      }
    }
    if (seconds.empty()) {
      throw Error(ErrorCode::InsufficientData, "no solution times recorded for the baseline");
    }
    TrainingLog log;
    out.models.correctness =
        train_baseline(BaselineKind::Correctness, stack_embeddings(embedder.embed(all_sources)),
                       correct, hyper, trained_upto, &log);
    if (!log.loss_non_increasing()) {
      out.warnings.push_back("correctness: training loss increased between epochs");
    }
    out.models.solution_time =
        train_baseline(BaselineKind::SolutionTime, stack_embeddings(embedder.embed(timed_sources)),
                       seconds, hyper, trained_upto, &log);
    if (!log.loss_non_increasing()) {
      out.warnings.push_back("solution-time: training loss increased between epochs");
    }
  }
  return out;
}

nlohmann::json recommendations_to_json(std::span<const RankedRecommendation> list) {
  auto out = nlohmann::json::array();
  for (const auto& r : list) {
    out.push_back({{"problem", r.problem_id}, {"score", r.score}, {"rank", r.rank}});
  }
  return out;
}

}  // namespace skillrec
