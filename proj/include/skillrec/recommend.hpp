#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "skillrec/context.hpp"
#include "skillrec/domain.hpp"
#include "skillrec/embed.hpp"
#include "skillrec/ingest.hpp"
#include "skillrec/skillnet.hpp"

namespace skillrec {

enum class RankingMetric : std::uint8_t { Skills, SolutionTime, Correctness };

std::string_view metric_name(RankingMetric m) noexcept;
RankingMetric parse_metric(std::string_view name);
inline constexpr std::array<RankingMetric, 3> kAllMetrics = {
    RankingMetric::Skills, RankingMetric::SolutionTime, RankingMetric::Correctness};

struct RankedRecommendation {
  std::string problem_id;
  double score = 0.0;
  int rank = 1;
  RankingMetric metric = RankingMetric::Skills;

  friend bool operator==(const RankedRecommendation&, const RankedRecommendation&) = default;
};

/// The eight topic classifiers plus the optional baseline predictors.
struct ModelSet {
  std::array<SkillModel, kTopicCount> skills;
  std::optional<BaselineModel> solution_time;
  std::optional<BaselineModel> correctness;

  std::size_t input_dim() const noexcept { return skills[0].input_dim(); }
  const BaselineModel& baseline(BaselineKind kind) const;
};

struct ModelSetTraining {
  ModelSet models;
  std::array<TrainingLog, kTopicCount> logs;
  /// Accuracy of each topic model on the full, unbalanced training set.
  std::array<double, kTopicCount> training_accuracy{};
  std::vector<std::string> warnings;
};

/// Trains the eight topic models on balanced subsets of `labeled` and, when
/// asked, both baselines on `baseline_data` (every attempt; solution time only
/// where recorded). InsufficientData when a training set is empty.
ModelSetTraining train_model_set(std::span<const LabeledSubmission> labeled,
                                 std::span<const Submission> baseline_data,
                                 const Embedder& embedder, const Hyperparams& hyper,
                                 TrainedUpto trained_upto, bool with_baselines);

/// a.b / (|a| |b|); 0 when either vector has zero norm.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

SkillVector predict_skills(const ModelSet& models, const Embedding& x);
SkillVector predict_student_skills(const ModelSet& models, const StudentContext& context);
/// Embeds the reference solution and classifies it; instructor labels are
/// ignored.
SkillVector predict_problem_skills(const ModelSet& models, const Problem& problem,
                                   const Embedder& embedder);

/// Descending cosine similarity, ties by ascending problem_id, first k kept.
std::vector<RankedRecommendation> rank(
    const SkillVector& student_skills,
    std::span<const std::pair<std::string, SkillVector>> candidates, int k);

/// Real-valued variant used to check scale invariance of the ordering.
std::vector<RankedRecommendation> rank_reals(
    std::span<const double> student,
    std::span<const std::pair<std::string, std::array<double, kTopicCount>>> candidates, int k);

/// Orders candidates by a precomputed score. Solution time ranks ascending,
/// correctness descending; ties by ascending problem_id.
std::vector<RankedRecommendation> rank_by_scores(
    RankingMetric metric, std::span<const std::pair<std::string, double>> scores, int k);

std::vector<RankedRecommendation> rank_baseline(
    RankingMetric metric, const BaselineModel& model,
    std::span<const std::pair<std::string, Embedding>> candidates, int k);

struct RecommendOptions {
  SummarizationStrategy strategy{};
  RankingMetric metric = RankingMetric::Skills;
  int k = 5;
  /// Only homework whose week <= current week is eligible.
  bool filter_by_week = true;
  /// Rank candidates by instructor labels instead of predicted skills.
  bool use_instructor_labels = false;
  /// Build the context from correct submissions only.
  bool correct_only_context = false;
};

/// Homework problems of an offering's pool that are eligible at `current_week`.
std::vector<const Problem*> candidate_pool(const Corpus& corpus, int offering_year,
                                           int current_week, bool filter_by_week);

/// Embeds every submission of a sequence, keeping the pointers into `seq`.
std::vector<EmbeddedSubmission> embed_sequence(const SubmissionSequence& seq,
                                               const Embedder& embedder, bool correct_only);

std::vector<RankedRecommendation> recommend_for_student(const Corpus& corpus,
                                                        const ModelSet& models,
                                                        const Embedder& embedder,
                                                        const std::string& student_id,
                                                        int offering_year, int current_week,
                                                        const RecommendOptions& options);

/// `[{"problem": id, "score": float, "rank": int}]`
nlohmann::json recommendations_to_json(std::span<const RankedRecommendation> list);

}  // namespace skillrec
