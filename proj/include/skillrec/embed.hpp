#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace skillrec {

inline constexpr std::size_t kDefaultEmbeddingDim = 768;

/// Hex-encoded SHA-256 of the UTF-8 bytes of `text`.
std::string sha256_hex(std::string_view text);

struct Embedding {
  std::vector<double> values;
  std::string provider_tag;
  std::string source_digest;

  std::size_t dim() const noexcept { return values.size(); }

  friend bool operator==(const Embedding&, const Embedding&) = default;
};

/// Throws DimMismatch / CorruptRecord when the vector is the wrong size or
/// holds a non-finite component.
void check_embedding(const Embedding& e, std::size_t expected_dim);

/// Identifier/number runs ([A-Za-z0-9_]+) are one token, every other
/// non-space character is its own token.
std::vector<std::string> tokenize(std::string_view source);

class TfIdfVocabulary {
 public:
  struct Term {
    std::string text;
    std::size_t corpus_count = 0;  ///< total occurrences over the corpus
    std::size_t doc_frequency = 0;

    friend bool operator==(const Term&, const Term&) = default;
  };

  TfIdfVocabulary() = default;
  TfIdfVocabulary(std::vector<Term> terms, std::size_t corpus_doc_count, std::size_t max_terms);

  const std::vector<Term>& terms() const noexcept { return terms_; }
  std::size_t corpus_doc_count() const noexcept { return doc_count_; }
  std::size_t max_terms() const noexcept { return max_terms_; }

  /// Position of `term` in the vocabulary, or -1.
  long index_of(std::string_view term) const;
  /// Smoothed idf: ln((1 + N) / (1 + df)) + 1.
  double idf(std::size_t index) const;

  nlohmann::json to_json() const;
  static TfIdfVocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const TfIdfVocabulary& a, const TfIdfVocabulary& b) {
    return a.terms_ == b.terms_ && a.doc_count_ == b.doc_count_ && a.max_terms_ == b.max_terms_;
  }

 private:
  std::vector<Term> terms_;
  std::size_t doc_count_ = 0;
  std::size_t max_terms_ = kDefaultEmbeddingDim;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Keeps the `max_terms` most frequent tokens (total count, ties broken
/// lexicographically).
TfIdfVocabulary build_vocabulary(std::span<const std::string> corpus_sources,
                                 std::size_t max_terms = kDefaultEmbeddingDim);

/// Raw tf * idf weights of length max_terms, before normalization.
std::vector<double> tfidf_weights(std::string_view source, const TfIdfVocabulary& vocab);

/// L2-normalized tf-idf vector; all-zero when no token is in the vocabulary.
Embedding tfidf_embed(std::string_view source, const TfIdfVocabulary& vocab);

/// Digest-keyed store of embeddings for a single provider. Reads may run
/// concurrently; writers take an exclusive lock.
class EmbeddingCache {
 public:
  EmbeddingCache(std::string provider_tag, std::size_t dim);

  const std::string& provider_tag() const noexcept { return provider_; }
  std::size_t dim() const noexcept { return dim_; }

  std::optional<Embedding> find(const std::string& digest) const;
  void put(Embedding embedding);
  std::size_t size() const;

  /// Writes the cache file format: a header line then one record per line,
  /// sorted by digest.
  void save(const std::filesystem::path& path) const;
  static std::shared_ptr<EmbeddingCache> load(const std::filesystem::path& path,
                                              std::size_t expected_dim);

 private:
  std::string provider_;
  std::size_t dim_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, Embedding> entries_;
};

/// Loads an embedding-cache file produced by an external model.
std::map<std::string, Embedding> load_precomputed(const std::filesystem::path& path,
                                                  std::size_t expected_dim);

void write_embedding_file(const std::filesystem::path& path, const std::string& provider_tag,
                          std::size_t dim, const std::map<std::string, Embedding>& records);

/// Posts `{"inputs": [...]}` to `endpoint` and expects `{"embeddings": [[...]]}`.
/// Every returned vector is checked against `expected_dim` and, when `cache`
/// is given, stored in it.
std::vector<Embedding> remote_embed(const std::string& endpoint,
                                    std::span<const std::string> sources, double timeout_s,
                                    std::size_t expected_dim, EmbeddingCache* cache = nullptr);

/// Anything that turns source text into vectors of a fixed dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string provider_tag() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::vector<Embedding> embed(std::span<const std::string> sources) const = 0;

  Embedding embed_one(const std::string& source) const;
};

class TfIdfEmbedder final : public Embedder {
 public:
  explicit TfIdfEmbedder(TfIdfVocabulary vocab) : vocab_(std::move(vocab)) {}

  std::string provider_tag() const override { return "tfidf"; }
  std::size_t dim() const override { return vocab_.max_terms(); }
  std::vector<Embedding> embed(std::span<const std::string> sources) const override;

  const TfIdfVocabulary& vocabulary() const noexcept { return vocab_; }

 private:
  TfIdfVocabulary vocab_;
};

class PrecomputedEmbedder final : public Embedder {
 public:
  PrecomputedEmbedder(std::string provider_tag, std::size_t dim,
                      std::map<std::string, Embedding> records);
  static std::shared_ptr<PrecomputedEmbedder> from_file(const std::filesystem::path& path,
                                                        std::size_t expected_dim);

  std::string provider_tag() const override { return provider_; }
  std::size_t dim() const override { return dim_; }
  /// EmbeddingFailure when a source has no stored vector.
  std::vector<Embedding> embed(std::span<const std::string> sources) const override;

 private:
  std::string provider_;
  std::size_t dim_;
  std::map<std::string, Embedding> records_;
};

class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::string endpoint, double timeout_s, std::size_t dim,
                 std::shared_ptr<EmbeddingCache> cache);

  std::string provider_tag() const override { return cache_->provider_tag(); }
  std::size_t dim() const override { return dim_; }
  /// Cache hits are served locally; the misses go out in one request.
  std::vector<Embedding> embed(std::span<const std::string> sources) const override;

 private:
  std::string endpoint_;
  double timeout_s_;
  std::size_t dim_;
  std::shared_ptr<EmbeddingCache> cache_;
};

/// Configured provider, before any training data is seen. `tfidf` builds a
/// vocabulary from the sources handed to fit(); the others ignore them.
class EmbeddingProvider {
 public:
  enum class Kind { TfIdf, Precomputed, Remote };

  /// "tfidf", "precomputed:<file>" or "remote:<url>".
  static EmbeddingProvider parse(std::string_view spec, std::size_t dim,
                                 double timeout_s = 30.0);

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return dim_; }
  const std::string& spec() const noexcept { return spec_; }

  std::shared_ptr<const Embedder> fit(std::span<const std::string> training_sources) const;

 private:
  Kind kind_ = Kind::TfIdf;
  std::string spec_;
  std::string target_;
  std::size_t dim_ = kDefaultEmbeddingDim;
  double timeout_s_ = 30.0;
  std::shared_ptr<const Embedder> fixed_;
};

}  // namespace skillrec
