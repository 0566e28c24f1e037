#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "skillrec/context.hpp"
#include "skillrec/evaltool.hpp"
#include "skillrec/recommend.hpp"
#include "skillrec/skillnet.hpp"

namespace skillrec {

/// Settings shared by every subcommand. Keys match the long flag names.
struct Config {
  std::filesystem::path corpus = ".";
  std::string provider = "tfidf";
  std::size_t dim = kDefaultEmbeddingDim;
  double timeout_s = 30.0;
  Hyperparams hyper;
  SummarizationStrategy strategy{};
  RankingMetric metric = RankingMetric::Skills;
  int k = 5;
  SuitabilityMode suitability = SuitabilityMode::Strict;
  bool week_filter = true;
  bool instructor_labels = false;
  bool correct_only = false;
  std::filesystem::path out = "out";

  /// Sets one key from its textual value; InvalidArgument on an unknown key
  /// or a malformed value.
  void set(std::string_view key, std::string_view value);

  /// Reads `key = value` lines; blank lines and lines starting with '#' are
  /// skipped.
  void load_file(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  /// SHA-256 of the canonical JSON of every setting that can change a
  /// result. The output directory is excluded.
  std::string digest() const;

  RecommendOptions recommend_options() const;
  EvaluationOptions evaluation_options() const;
  EmbeddingProvider embedding_provider() const;
};

}  // namespace skillrec
