#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "skillrec/embed.hpp"
#include "skillrec/recommend.hpp"
#include "skillrec/skillnet.hpp"

namespace skillrec {

/// Everything needed to recommend after one lab: the trained models, the
/// embedding provider they were trained against and, for tf-idf, its
/// vocabulary.
struct Bundle {
  ModelSet models;
  std::string provider;
  std::size_t dim = 0;
  double timeout_s = 30.0;
  std::optional<TfIdfVocabulary> vocabulary;
  TrainedUpto trained_upto;
  std::uint64_t seed = 0;
  std::string config_digest;

  /// Rebuilds the embedder the models expect.
  std::shared_ptr<const Embedder> embedder() const;
};

/// Layout: bundle.json, vocabulary.json (tf-idf only), model-<topic>.json
/// for the eight topics, and model-solution-time.json / model-correctness.json
/// when baselines were trained.
void save_bundle(const Bundle& bundle, const std::filesystem::path& dir);
Bundle load_bundle(const std::filesystem::path& dir);

/// SHA-256 over the bundle's file names and contents, in name order.
std::string bundle_digest(const std::filesystem::path& dir);

}  // namespace skillrec
