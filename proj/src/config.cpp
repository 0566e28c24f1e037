#include "skillrec/config.hpp"

#include <charconv>
#include <fstream>

#include "skillrec/error.hpp"

namespace skillrec {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidArgument,
              "bad value '" + std::string(value) + "' for " + std::string(key));
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, value);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value);
}

}  // namespace

void Config::set(std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  if (key == "corpus") {
    corpus = value;
  } else if (key == "provider") {
    if (value != "tfidf" && !value.starts_with("precomputed:") && !value.starts_with("remote:")) {
      bad_value(key, value);
    }
    provider = value;
  } else if (key == "dim") {
    dim = parse_number<std::size_t>(key, value);
    if (dim == 0) bad_value(key, value);
  } else if (key == "timeout") {
    timeout_s = parse_number<double>(key, value);
    if (!(timeout_s > 0.0)) bad_value(key, value);
  } else if (key == "hidden") {
    hyper.hidden_units = parse_number<int>(key, value);
  } else if (key == "epochs") {
    hyper.epochs = parse_number<int>(key, value);
  } else if (key == "lr") {
    hyper.learning_rate = parse_number<double>(key, value);
  } else if (key == "lambda") {
    hyper.l2_lambda = parse_number<double>(key, value);
  } else if (key == "seed") {
    hyper.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "strategy") {
    strategy = parse_strategy(value);
  } else if (key == "metric") {
    metric = parse_metric(value);
  } else if (key == "k") {
    k = parse_number<int>(key, value);
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
  } else if (key == "suitability") {
    suitability = parse_suitability(value);
  } else if (key == "week-filter") {
    week_filter = parse_bool(key, value);
  } else if (key == "instructor-labels") {
    instructor_labels = parse_bool(key, value);
  } else if (key == "correct-only") {
    correct_only = parse_bool(key, value);
  } else if (key == "out") {
    out = value;
  } else {
    throw Error(ErrorCode::InvalidArgument, "unknown config key '" + std::string(key) + "'");
  }
  hyper.validate();
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot read config " + path.string());
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      set(trim(std::string_view(t).substr(0, eq)), std::string_view(t).substr(eq + 1));
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

nlohmann::json Config::to_json() const {
  return {{"corpus", corpus.generic_string()},
          {"provider", provider},
          {"dim", dim},
          {"timeout", timeout_s},
          {"hyper", hyperparams_to_json(hyper)},
          {"strategy", strategy_name(strategy)},
          {"metric", metric_name(metric)},
          {"k", k},
          {"suitability", suitability_name(suitability)},
          {"week-filter", week_filter},
          {"instructor-labels", instructor_labels},
          {"correct-only", correct_only},
          {"out", out.generic_string()}};
}

std::string Config::digest() const {
  auto j = to_json();
  j.erase("out");
  return sha256_hex(j.dump());
}

RecommendOptions Config::recommend_options() const {
  RecommendOptions o;
  o.strategy = strategy;
  o.metric = metric;
  o.k = k;
  o.filter_by_week = week_filter;
  o.use_instructor_labels = instructor_labels;
  o.correct_only_context = correct_only;
  return o;
}

EvaluationOptions Config::evaluation_options() const {
  EvaluationOptions o;
  o.k = k;
  o.mode = suitability;
  o.correct_only_context = correct_only;
  o.use_instructor_labels = instructor_labels;
  return o;
}

EmbeddingProvider Config::embedding_provider() const {
  return EmbeddingProvider::parse(provider, dim, timeout_s);
}

}  // namespace skillrec
