#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "skillrec/context.hpp"
#include "skillrec/domain.hpp"
#include "skillrec/embed.hpp"
#include "skillrec/ingest.hpp"
#include "skillrec/recommend.hpp"
#include "skillrec/skillnet.hpp"

namespace skillrec {

enum class SuitabilityMode : std::uint8_t {
  Strict,  ///< must also exercise a topic introduced inside the window
  Loose,   ///< only needs every required topic to be taught by now
};

std::string_view suitability_name(SuitabilityMode mode) noexcept;
SuitabilityMode parse_suitability(std::string_view name);

/// Whether a problem fits the window (last_submission_week, current_week].
/// Let I be the topics introduced inside the window and K those introduced at
/// or before last_submission_week. Suitable iff every required topic is in
/// K or I and, in strict mode with I non-empty, some required topic is in I.
bool is_suitable(const Problem& problem, const CourseSchedule& schedule, int last_submission_week,
                 int current_week, SuitabilityMode mode = SuitabilityMode::Strict);

/// Expected suitable percentage of a uniform random k-subset of the pool:
/// 100 * #suitable / #candidates. EmptyPool when there are no candidates.
double random_baseline(std::span<const bool> suitable, int k);

/// Correct lab submissions split around one offering: everything earlier
/// trains, the held-out offering is tested lab by lab.
struct TemporalSplit {
  int test_year = 0;
  std::vector<LabeledSubmission> train;
  std::map<int, std::vector<LabeledSubmission>> test_by_lab;

  static TemporalSplit make(const Corpus& corpus, int test_year);
};

/// Latest (offering, lab) among a set of submissions; {0, 0} when empty.
TrainedUpto latest_source(std::span<const LabeledSubmission> data);
TrainedUpto latest_source(std::span<const Submission> data);

/// Records, for every artifact used at a test lab, the newest data it was
/// built from, and flags anything derived from that lab or later.
class ProvenanceAudit {
 public:
  void check(const std::string& artifact, TrainedUpto derived_from, int test_year, int test_lab);

  std::size_t checks() const noexcept { return checks_; }
  const std::vector<std::string>& violations() const noexcept { return violations_; }
  void merge(const ProvenanceAudit& other);

 private:
  std::size_t checks_ = 0;
  std::vector<std::string> violations_;
};

struct Experiment1Result {
  std::string method;
  std::vector<int> labs;
  /// accuracy[topic][i] is the accuracy at labs[i].
  std::array<std::vector<double>, kTopicCount> accuracy;
  std::array<double, kTopicCount> mean{};
  /// Sample standard deviation across labs (0 with a single lab).
  std::array<double, kTopicCount> stdev{};
  /// Mean of the topic means, and the population spread of those means.
  double overall_mean = 0.0;
  double overall_stdev = 0.0;
  std::vector<std::string> warnings;
};

struct SuitabilitySeries {
  RankingMetric metric = RankingMetric::Skills;
  SummarizationStrategy strategy{};
  std::vector<double> percent;
};

struct Experiment2Result {
  int k = 5;
  SuitabilityMode mode = SuitabilityMode::Strict;
  std::vector<int> labs;
  /// Metric-major, strategies in report order: 12 series.
  std::vector<SuitabilitySeries> series;
  std::vector<double> random;
  /// Students evaluated at each lab.
  std::vector<std::size_t> students;
  std::vector<std::string> warnings;

  const SuitabilitySeries& find(RankingMetric metric, SummarizationStrategy strategy) const;
};

struct EvaluationOptions {
  int k = 5;
  SuitabilityMode mode = SuitabilityMode::Strict;
  bool correct_only_context = false;
  bool use_instructor_labels = false;
};

Experiment1Result accuracy_experiment(const Corpus& corpus, const EmbeddingProvider& provider,
                                      const Hyperparams& hyper, int test_year,
                                      ProvenanceAudit* audit = nullptr);

/// Per test lab l: models retrained on data up to lab l-1, contexts from
/// labs <= l, candidates are every homework problem of the offering.
Experiment2Result suitability_experiment(const Corpus& corpus, const EmbeddingProvider& provider,
                                         const Hyperparams& hyper, int test_year,
                                         const EvaluationOptions& options = {},
                                         ProvenanceAudit* audit = nullptr);

struct EvaluationReport {
  int test_year = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
  std::string provider;
  std::optional<Experiment1Result> experiment1;
  std::optional<Experiment2Result> experiment2;
  ProvenanceAudit provenance;
};

nlohmann::json report_to_json(const EvaluationReport& report);

/// Writes experiment1.csv and/or experiment2.csv (whichever experiments ran)
/// plus report.json into `out_dir`, creating it if needed.
void emit_report(const EvaluationReport& report, const std::filesystem::path& out_dir);

}  // namespace skillrec
