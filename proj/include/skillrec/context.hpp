#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "skillrec/domain.hpp"
#include "skillrec/embed.hpp"

namespace skillrec {

enum class ContextScope : std::uint8_t { AllSubmissions, LastLabOnly };
enum class ContextReduction : std::uint8_t { Average, ClosestToCentroid };

struct SummarizationStrategy {
  ContextScope scope = ContextScope::LastLabOnly;
  ContextReduction reduction = ContextReduction::ClosestToCentroid;

  friend bool operator==(SummarizationStrategy, SummarizationStrategy) = default;
};

/// avg-all, avg-last-lab, centroid-all, centroid-last-lab.
std::string_view strategy_name(SummarizationStrategy s) noexcept;
SummarizationStrategy parse_strategy(std::string_view name);
/// The four strategies in report order.
std::span<const SummarizationStrategy> all_strategies() noexcept;

struct SyntheticAverage {
  friend bool operator==(SyntheticAverage, SyntheticAverage) = default;
};

/// Identifies the submission a closest-to-centroid context was taken from.
struct SubmissionRef {
  std::string student_id;
  int offering_year = 0;
  int lab_index = 0;
  std::string problem_id;
  int attempt_index = 0;
  std::int64_t submitted_at = 0;

  friend bool operator==(const SubmissionRef&, const SubmissionRef&) = default;
};

struct StudentContext {
  Embedding vector;
  SummarizationStrategy strategy;
  std::variant<SyntheticAverage, SubmissionRef> provenance;
};

struct EmbeddedSubmission {
  const Submission* submission = nullptr;
  Embedding embedding;
};

/// Collapses a student's embedded submissions (ordered by submitted_at) into
/// one context vector. Only submissions with lab_index <= current_lab count.
///
/// Closest-to-centroid picks the input nearest (Euclidean) to the scoped
/// mean and returns its embedding unchanged. Distances within a relative
/// 1e-9 of the minimum are ties, won by the earliest submission.
StudentContext summarize(std::span<const EmbeddedSubmission> embeddings,
                         SummarizationStrategy strategy, int current_lab);

}  // namespace skillrec
