#include "skillrec/embed.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <openssl/evp.h>

#include "skillrec/error.hpp"

namespace skillrec {

namespace fs = std::filesystem;
using nlohmann::json;

std::string sha256_hex(std::string_view text) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(text.data(), text.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::EmbeddingFailure, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

void check_embedding(const Embedding& e, std::size_t expected_dim) {
  if (e.dim() != expected_dim) {
    throw Error(ErrorCode::DimMismatch, "embedding has dim " + std::to_string(e.dim()) +
                                            ", expected " + std::to_string(expected_dim));
  }
  for (double v : e.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::CorruptRecord, "non-finite embedding component");
  }
}

// --- tokenizer / tf-idf ---------------------------------------------------

namespace {

bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || c == '_';
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::vector<std::string> tokenize(std::string_view source) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < source.size()) {
    const char c = source[i];
    if (is_space(c)) {
      ++i;
    } else if (is_word_char(c)) {
      std::size_t j = i;
      while (j < source.size() && is_word_char(source[j])) ++j;
      tokens.emplace_back(source.substr(i, j - i));
      i = j;
    } else {
      tokens.emplace_back(1, c);
      ++i;
    }
  }
  return tokens;
}

TfIdfVocabulary::TfIdfVocabulary(std::vector<Term> terms, std::size_t corpus_doc_count,
                                 std::size_t max_terms)
    : terms_(std::move(terms)), doc_count_(corpus_doc_count), max_terms_(max_terms) {
  if (terms_.size() > max_terms_) {
    throw Error(ErrorCode::InvalidArgument, "vocabulary larger than max_terms");
  }
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (!index_.emplace(terms_[i].text, i).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate vocabulary term '" + terms_[i].text + "'");
    }
  }
}

long TfIdfVocabulary::index_of(std::string_view term) const {
  auto it = index_.find(std::string(term));
  return it == index_.end() ? -1 : static_cast<long>(it->second);
}

double TfIdfVocabulary::idf(std::size_t index) const {
  const auto n = static_cast<double>(doc_count_);
  const auto df = static_cast<double>(terms_.at(index).doc_frequency);
  return std::log((1.0 + n) / (1.0 + df)) + 1.0;
}

json TfIdfVocabulary::to_json() const {
  json terms = json::array();
  for (const auto& t : terms_) terms.push_back({t.text, t.corpus_count, t.doc_frequency});
  return {{"corpus_doc_count", doc_count_}, {"max_terms", max_terms_}, {"terms", terms}};
}

TfIdfVocabulary TfIdfVocabulary::from_json(const json& j) {
  try {
    std::vector<Term> terms;
    for (const auto& t : j.at("terms")) {
      terms.push_back({t.at(0).get<std::string>(), t.at(1).get<std::size_t>(),
                       t.at(2).get<std::size_t>()});
    }
    return TfIdfVocabulary(std::move(terms), j.at("corpus_doc_count").get<std::size_t>(),
                           j.at("max_terms").get<std::size_t>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, std::string("vocabulary: ") + e.what());
  }
}

TfIdfVocabulary build_vocabulary(std::span<const std::string> corpus_sources,
                                 std::size_t max_terms) {
  if (corpus_sources.empty()) throw Error(ErrorCode::EmptyCorpus, "vocabulary corpus is empty");
  std::map<std::string, std::pair<std::size_t, std::size_t>> stats;  // count, df
  for (const auto& doc : corpus_sources) {
    std::map<std::string, std::size_t> local;
    for (auto& tok : tokenize(doc)) ++local[std::move(tok)];
    for (const auto& [tok, n] : local) {
      auto& entry = stats[tok];
      entry.first += n;
      entry.second += 1;
    }
  }
  std::vector<TfIdfVocabulary::Term> terms;
  terms.reserve(stats.size());
  for (const auto& [tok, entry] : stats) terms.push_back({tok, entry.first, entry.second});
  std::sort(terms.begin(), terms.end(), [](const auto& a, const auto& b) {
    if (a.corpus_count != b.corpus_count) return a.corpus_count > b.corpus_count;
    return a.text < b.text;
  });
  if (terms.size() > max_terms) terms.resize(max_terms);
  return TfIdfVocabulary(std::move(terms), corpus_sources.size(), max_terms);
}

std::vector<double> tfidf_weights(std::string_view source, const TfIdfVocabulary& vocab) {
  std::vector<double> counts(vocab.max_terms(), 0.0);
  for (const auto& tok : tokenize(source)) {
    const long idx = vocab.index_of(tok);
    if (idx >= 0) counts[static_cast<std::size_t>(idx)] += 1.0;
  }
  for (std::size_t i = 0; i < vocab.terms().size(); ++i) {
    if (counts[i] != 0.0) counts[i] *= vocab.idf(i);
  }
  return counts;
}

Embedding tfidf_embed(std::string_view source, const TfIdfVocabulary& vocab) {
  auto values = tfidf_weights(source, vocab);
  double sq = 0.0;
  for (double v : values) sq += v * v;
  if (sq > 0.0) {
    const double norm = std::sqrt(sq);
    for (double& v : values) v /= norm;
  }
  return {std::move(values), "tfidf", sha256_hex(source)};
}

// --- cache file -----------------------------------------------------------

namespace {

json record_to_json(const Embedding& e) { return {{"digest", e.source_digest}, {"values", e.values}}; }

struct ParsedFile {
  std::string provider;
  std::size_t dim = 0;
  std::map<std::string, Embedding> records;
};

ParsedFile parse_embedding_file(const fs::path& path, std::size_t expected_dim) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorCode::CorruptRecord, path.string() + ":1: missing header");
  }
  ParsedFile out;
  try {
    const auto header = json::parse(line);
    out.provider = header.at("provider").get<std::string>();
    out.dim = header.at("dim").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, path.string() + ":1: bad header: " + e.what());
  }
  if (out.dim != expected_dim) {
    throw Error(ErrorCode::DimMismatch, path.string() + ": header dim " + std::to_string(out.dim) +
                                            ", expected " + std::to_string(expected_dim));
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = path.string() + ":" + std::to_string(line_no) + ": ";
    Embedding e;
    e.provider_tag = out.provider;
    try {
      const auto rec = json::parse(line);
      e.source_digest = rec.at("digest").get<std::string>();
      for (const auto& v : rec.at("values")) {
        if (!v.is_number()) throw Error(ErrorCode::CorruptRecord, where + "non-numeric component");
        e.values.push_back(v.get<double>());
      }
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::CorruptRecord, where + ex.what());
    }
    try {
      check_embedding(e, expected_dim);
    } catch (const Error& ex) {
      throw Error(ex.code(), where + ex.what());
    }
    out.records.insert_or_assign(e.source_digest, std::move(e));
  }
  return out;
}

}  // namespace

void write_embedding_file(const fs::path& path, const std::string& provider_tag, std::size_t dim,
                          const std::map<std::string, Embedding>& records) {
  std::ostringstream text;
  text << json{{"provider", provider_tag}, {"dim", dim}}.dump() << '\n';
  for (const auto& [digest, e] : records) text << record_to_json(e).dump() << '\n';
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text.str();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::map<std::string, Embedding> load_precomputed(const fs::path& path, std::size_t expected_dim) {
  return parse_embedding_file(path, expected_dim).records;
}

EmbeddingCache::EmbeddingCache(std::string provider_tag, std::size_t dim)
    : provider_(std::move(provider_tag)), dim_(dim) {}

std::optional<Embedding> EmbeddingCache::find(const std::string& digest) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(digest);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(Embedding embedding) {
  check_embedding(embedding, dim_);
  embedding.provider_tag = provider_;
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(embedding.source_digest, std::move(embedding));
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void EmbeddingCache::save(const fs::path& path) const {
  std::shared_lock lock(mutex_);
  write_embedding_file(path, provider_, dim_, entries_);
}

std::shared_ptr<EmbeddingCache> EmbeddingCache::load(const fs::path& path,
                                                     std::size_t expected_dim) {
  auto parsed = parse_embedding_file(path, expected_dim);
  auto cache = std::make_shared<EmbeddingCache>(parsed.provider, parsed.dim);
  cache->entries_ = std::move(parsed.records);
  return cache;
}

// --- remote ---------------------------------------------------------------

namespace {

struct Endpoint {
  std::string base;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "endpoint must be an absolute URL: " + url);
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::vector<Embedding> remote_embed(const std::string& endpoint,
                                    std::span<const std::string> sources, double timeout_s,
                                    std::size_t expected_dim, EmbeddingCache* cache) {
  if (sources.empty()) return {};
  const auto [base, path] = split_url(endpoint);
  httplib::Client client(base);
  const auto secs = static_cast<time_t>(timeout_s);
  const auto usecs = static_cast<time_t>((timeout_s - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  const json body = {{"inputs", std::vector<std::string>(sources.begin(), sources.end())}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::Timeout, endpoint + ": no response within " +
                                        std::to_string(timeout_s) + " s (" +
                                        httplib::to_string(res.error()) + ")");
  }
  if (res->status != 200) throw HttpStatusError(res->status, endpoint);

  const std::string tag = cache != nullptr ? cache->provider_tag() : "remote";
  std::vector<Embedding> out;
  try {
    const auto reply = json::parse(res->body);
    const auto& vectors = reply.at("embeddings");
    if (!vectors.is_array() || vectors.size() != sources.size()) {
      throw Error(ErrorCode::CorruptRecord, endpoint + ": expected " +
                                                std::to_string(sources.size()) + " embeddings");
    }
    for (std::size_t i = 0; i < sources.size(); ++i) {
      Embedding e{vectors[i].get<std::vector<double>>(), tag, sha256_hex(sources[i])};
      check_embedding(e, expected_dim);
      out.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, endpoint + ": malformed reply: " + e.what());
  }
  if (cache != nullptr) {
    for (const auto& e : out) cache->put(e);
  }
  return out;
}

// --- embedders ------------------------------------------------------------

Embedding Embedder::embed_one(const std::string& source) const {
  auto v = embed(std::span<const std::string>(&source, 1));
  return std::move(v.front());
}

std::vector<Embedding> TfIdfEmbedder::embed(std::span<const std::string> sources) const {
  std::vector<Embedding> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(tfidf_embed(s, vocab_));
  return out;
}

PrecomputedEmbedder::PrecomputedEmbedder(std::string provider_tag, std::size_t dim,
                                         std::map<std::string, Embedding> records)
    : provider_(std::move(provider_tag)), dim_(dim), records_(std::move(records)) {}

std::shared_ptr<PrecomputedEmbedder> PrecomputedEmbedder::from_file(const fs::path& path,
                                                                    std::size_t expected_dim) {
  auto parsed = parse_embedding_file(path, expected_dim);
  return std::make_shared<PrecomputedEmbedder>(parsed.provider, parsed.dim,
                                               std::move(parsed.records));
}

std::vector<Embedding> PrecomputedEmbedder::embed(std::span<const std::string> sources) const {
  std::vector<Embedding> out;
  out.reserve(sources.size());
  for (const auto& s : sources) {
    auto it = records_.find(sha256_hex(s));
    if (it == records_.end()) {
      throw Error(ErrorCode::EmbeddingFailure,
                  "no precomputed " + provider_ + " embedding for source digest " + sha256_hex(s));
    }
    out.push_back(it->second);
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, double timeout_s, std::size_t dim,
                               std::shared_ptr<EmbeddingCache> cache)
    : endpoint_(std::move(endpoint)), timeout_s_(timeout_s), dim_(dim), cache_(std::move(cache)) {
  if (!cache_) cache_ = std::make_shared<EmbeddingCache>("remote", dim_);
}

std::vector<Embedding> RemoteEmbedder::embed(std::span<const std::string> sources) const {
  std::vector<std::optional<Embedding>> slots(sources.size());
  std::vector<std::string> missing;
  std::vector<std::size_t> missing_at;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    slots[i] = cache_->find(sha256_hex(sources[i]));
    if (!slots[i]) {
      missing.push_back(sources[i]);
      missing_at.push_back(i);
    }
  }
  auto fetched = remote_embed(endpoint_, missing, timeout_s_, dim_, cache_.get());
  for (std::size_t k = 0; k < fetched.size(); ++k) slots[missing_at[k]] = std::move(fetched[k]);
  std::vector<Embedding> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

EmbeddingProvider EmbeddingProvider::parse(std::string_view spec, std::size_t dim,
                                           double timeout_s) {
  EmbeddingProvider p;
  p.spec_ = std::string(spec);
  p.dim_ = dim;
  p.timeout_s_ = timeout_s;
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
  if (spec == "tfidf") {
    p.kind_ = Kind::TfIdf;
  } else if (spec.starts_with("precomputed:")) {
    p.kind_ = Kind::Precomputed;
    p.target_ = std::string(spec.substr(12));
    p.fixed_ = PrecomputedEmbedder::from_file(p.target_, dim);
  } else if (spec.starts_with("remote:")) {
    p.kind_ = Kind::Remote;
    p.target_ = std::string(spec.substr(7));
    p.fixed_ = std::make_shared<RemoteEmbedder>(p.target_, timeout_s, dim, nullptr);
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "unknown embedding provider '" + std::string(spec) +
                    "' (expected tfidf, precomputed:<file> or remote:<url>)");
  }
  return p;
}

std::shared_ptr<const Embedder> EmbeddingProvider::fit(
    std::span<const std::string> training_sources) const {
  if (kind_ == Kind::TfIdf) {
    return std::make_shared<TfIdfEmbedder>(build_vocabulary(training_sources, dim_));
  }
  return fixed_;
}

}  // namespace skillrec
