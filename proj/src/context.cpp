#include "skillrec/context.hpp"

#include <array>
#include <limits>

#include "skillrec/error.hpp"

namespace skillrec {

namespace {

constexpr std::array<SummarizationStrategy, 4> kStrategies = {{
    {ContextScope::AllSubmissions, ContextReduction::Average},
    {ContextScope::LastLabOnly, ContextReduction::Average},
    {ContextScope::AllSubmissions, ContextReduction::ClosestToCentroid},
    {ContextScope::LastLabOnly, ContextReduction::ClosestToCentroid},
}};

constexpr double kTieTolerance = 1e-9;

constexpr std::array<std::string_view, 4> kStrategyNames = {
    "avg-all", "avg-last-lab", "centroid-all", "centroid-last-lab"};

}  // namespace

std::string_view strategy_name(SummarizationStrategy s) noexcept {
  for (std::size_t i = 0; i < kStrategies.size(); ++i) {
    if (kStrategies[i] == s) return kStrategyNames[i];
  }
  return "unknown";
}

SummarizationStrategy parse_strategy(std::string_view name) {
  for (std::size_t i = 0; i < kStrategies.size(); ++i) {
    if (kStrategyNames[i] == name) return kStrategies[i];
  }
  throw Error(ErrorCode::InvalidArgument,
              "unknown strategy '" + std::string(name) +
                  "' (expected avg-all, avg-last-lab, centroid-all or centroid-last-lab)");
}

std::span<const SummarizationStrategy> all_strategies() noexcept { return kStrategies; }

StudentContext summarize(std::span<const EmbeddedSubmission> embeddings,
                         SummarizationStrategy strategy, int current_lab) {
  std::vector<const EmbeddedSubmission*> scoped;
  int last_lab = 0;
  for (const auto& e : embeddings) {
    if (e.submission->lab_index <= current_lab) {
      scoped.push_back(&e);
      last_lab = std::max(last_lab, e.submission->lab_index);
    }
  }
  if (strategy.scope == ContextScope::LastLabOnly) {
    std::erase_if(scoped, [&](const EmbeddedSubmission* e) {
      return e->submission->lab_index != last_lab;
    });
  }
  if (scoped.empty()) {
    throw Error(ErrorCode::EmptyAfterScope,
                "no submissions at or before lab " + std::to_string(current_lab));
  }

  const std::size_t dim = scoped.front()->embedding.dim();
  std::vector<double> mean(dim, 0.0);
  for (const auto* e : scoped) {
    if (e->embedding.dim() != dim) {
      throw Error(ErrorCode::DimMismatch, "submission embeddings differ in dimension");
    }
    for (std::size_t i = 0; i < dim; ++i) mean[i] += e->embedding.values[i];
  }
  const auto n = static_cast<double>(scoped.size());
  for (double& v : mean) v /= n;

  if (strategy.reduction == ContextReduction::Average) {
    const auto& first = scoped.front()->embedding;
    return {Embedding{std::move(mean), first.provider_tag, {}}, strategy, SyntheticAverage{}};
  }

  // Distances within a relative 1e-9 of the minimum count as ties so the
  // earliest submission wins regardless of rounding in the mean.
  std::vector<double> dist(scoped.size(), 0.0);
  double min_dist = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scoped.size(); ++k) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double diff = scoped[k]->embedding.values[i] - mean[i];
      dist[k] += diff * diff;
    }
    min_dist = std::min(min_dist, dist[k]);
  }
  const double cutoff = min_dist + kTieTolerance * min_dist;
  const EmbeddedSubmission* best = nullptr;
  for (std::size_t k = 0; k < scoped.size(); ++k) {
    if (dist[k] <= cutoff &&
        (best == nullptr || scoped[k]->submission->submitted_at < best->submission->submitted_at)) {
      best = scoped[k];
    }
  }
  const Submission& s = *best->submission;
  return {best->embedding, strategy,
          SubmissionRef{s.student_id, s.offering_year, s.lab_index, s.problem_id, s.attempt_index,
                        s.submitted_at}};
}

}  // namespace skillrec
