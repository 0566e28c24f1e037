#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "fixtures.hpp"
#include "skillrec/embed.hpp"
#include "skillrec/error.hpp"

using namespace skillrec;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

using Tokens = std::vector<std::string>;

// Serves POST /embed on a free local port until destroyed.
class StubServer {
 public:
  explicit StubServer(httplib::Server::Handler handler) {
    server_.Post("/embed", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

// Replies with [len(input), index, 1] for every input.
httplib::Server::Handler length_handler(std::atomic<int>* hits) {
  return [hits](const httplib::Request& req, httplib::Response& res) {
    ++*hits;
    const auto body = json::parse(req.body);
    json out = json::array();
    std::size_t i = 0;
    for (const auto& s : body.at("inputs")) {
      out.push_back({static_cast<double>(s.get<std::string>().size()), static_cast<double>(i++), 1.0});
    }
    res.set_content(json{{"embeddings", out}}.dump(), "application/json");
  };
}

}  // namespace

TEST_CASE("sha256 of known strings") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("tokenizer splits identifiers from punctuation") {
  CHECK(tokenize("int x=5;") == Tokens{"int", "x", "=", "5", ";"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("a_b  ++c") == Tokens{"a_b", "+", "+", "c"});
  CHECK(tokenize("  \n\t ").empty());
  CHECK(tokenize("std::cout<<x1") == Tokens{"std", ":", ":", "cout", "<", "<", "x1"});
}

TEST_CASE("vocabulary keeps the most frequent terms") {
  const std::vector<std::string> docs = {"a b", "a c"};
  const auto v = build_vocabulary(docs, 2);
  REQUIRE(v.terms().size() == 2);
  CHECK(v.terms()[0].text == "a");
  CHECK(v.terms()[0].corpus_count == 2);
  CHECK(v.terms()[0].doc_frequency == 2);
  CHECK(v.terms()[1].text == "b");
  CHECK(v.corpus_doc_count() == 2);
  CHECK(v.index_of("c") == -1);

  const std::vector<std::string> one = {"x y z x"};
  CHECK(build_vocabulary(one, 10).terms().size() == 3);

  const Corpus c = testing::sample_corpus();
  std::vector<std::string> sources;
  std::set<std::string> distinct;
  for (const auto& s : c.all_submissions()) {
    sources.push_back(s.source);
    for (auto& t : tokenize(s.source)) distinct.insert(t);
  }
  CHECK(build_vocabulary(sources, 768).terms().size() == std::min<std::size_t>(768, distinct.size()));
  CHECK(build_vocabulary(sources, 5).terms().size() == 5);

  CHECK(code_of([] { build_vocabulary(std::vector<std::string>{}, 4); }) == ErrorCode::EmptyCorpus);
}

TEST_CASE("tf-idf worked example") {
  const std::vector<std::string> docs = {"a b", "a c"};
  const auto v = build_vocabulary(docs, 3);
  const auto w = tfidf_weights("a a b", v);
  REQUIRE(w.size() == 3);
  // Terms sorted a, b, c: a appears twice with idf 1, b once with idf ln(1.5)+1.
  CHECK(w[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(1.4055).epsilon(1e-4));
  CHECK(w[2] == 0.0);

  const auto e = tfidf_embed("a a b", v);
  const double norm = std::hypot(w[0], w[1]);
  CHECK(e.values[0] == doctest::Approx(w[0] / norm));
  CHECK(e.values[1] == doctest::Approx(w[1] / norm));
  CHECK(e.provider_tag == "tfidf");
  CHECK(e.source_digest == sha256_hex("a a b"));
  CHECK(tfidf_embed("a a b", v) == e);

  const auto zero = tfidf_embed("q r s", v);
  CHECK(std::all_of(zero.values.begin(), zero.values.end(), [](double x) { return x == 0.0; }));
}

TEST_CASE("tf-idf vectors have the configured width") {
  const std::vector<std::string> docs = {"a b", "a c"};
  const auto v = build_vocabulary(docs, 768);
  CHECK(tfidf_embed("a", v).dim() == 768);
  TfIdfEmbedder embedder(v);
  CHECK(embedder.dim() == 768);
  CHECK(embedder.embed_one("a c").values == tfidf_embed("a c", v).values);
}

TEST_CASE("vocabulary JSON round trip") {
  const std::vector<std::string> docs = {"int main ( ) { }", "int x = 5 ;"};
  const auto v = build_vocabulary(docs, 16);
  CHECK(TfIdfVocabulary::from_json(v.to_json()) == v);
  CHECK(v.to_json().dump() == build_vocabulary(docs, 16).to_json().dump());
  CHECK(code_of([] { TfIdfVocabulary::from_json(json{{"terms", 3}}); }) == ErrorCode::CorruptRecord);
}

TEST_CASE("precomputed embedding files") {
  testing::TempDir dir;
  const auto path = dir.path() / "emb.jsonl";
  std::map<std::string, Embedding> records;
  for (int i = 0; i < 3; ++i) {
    Embedding e{std::vector<double>(768, 0.5 * i), "jina", sha256_hex("src" + std::to_string(i))};
    records.emplace(e.source_digest, e);
  }
  write_embedding_file(path, "jina", 768, records);
  const auto loaded = load_precomputed(path, 768);
  CHECK(loaded.size() == 3);
  CHECK(loaded == records);

  CHECK(code_of([&] { load_precomputed(path, 512); }) == ErrorCode::DimMismatch);

  write_embedding_file(path, "jina", 768, {});
  CHECK(load_precomputed(path, 768).empty());

  std::ofstream(path) << json{{"provider", "jina"}, {"dim", 768}}.dump() << "\n"
                      << json{{"digest", "d"}, {"values", std::vector<double>(512, 1.0)}}.dump()
                      << "\n";
  CHECK(code_of([&] { load_precomputed(path, 768); }) == ErrorCode::DimMismatch);

  std::ofstream(path) << "";
  CHECK(code_of([&] { load_precomputed(path, 768); }) == ErrorCode::CorruptRecord);
  CHECK(code_of([&] { load_precomputed(dir.path() / "none", 768); }) == ErrorCode::MissingFile);
}

TEST_CASE("precomputed embedder looks sources up by digest") {
  std::map<std::string, Embedding> records;
  records.emplace(sha256_hex("x"), Embedding{{1, 2}, "p", sha256_hex("x")});
  PrecomputedEmbedder e("p", 2, records);
  CHECK(e.embed_one("x").values == std::vector<double>{1, 2});
  CHECK(code_of([&] { e.embed_one("y"); }) == ErrorCode::EmbeddingFailure);
}

TEST_CASE("embeddings are checked for size and finiteness") {
  CHECK_NOTHROW(check_embedding({{1, 2, 3}, "t", "d"}, 3));
  CHECK(code_of([] { check_embedding({{1, 2}, "t", "d"}, 3); }) == ErrorCode::DimMismatch);
  CHECK(code_of([] { check_embedding({{1, NAN, 3}, "t", "d"}, 3); }) == ErrorCode::CorruptRecord);
}

TEST_CASE("embedding cache saves sorted and reloads") {
  testing::TempDir dir;
  EmbeddingCache cache("remote", 2);
  cache.put({{3, 4}, "x", "bb"});
  cache.put({{1, 2}, "x", "aa"});
  CHECK(cache.size() == 2);
  CHECK(cache.find("aa")->provider_tag == "remote");
  CHECK_FALSE(cache.find("cc").has_value());
  CHECK(code_of([&] { cache.put({{1}, "x", "dd"}); }) == ErrorCode::DimMismatch);
  cache.save(dir.path() / "cache.jsonl");
  auto again = EmbeddingCache::load(dir.path() / "cache.jsonl", 2);
  CHECK(again->size() == 2);
  CHECK(again->find("bb")->values == std::vector<double>{3, 4});

  std::ifstream in(dir.path() / "cache.jsonl");
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(json::parse(first).at("digest") == "aa");
}

TEST_CASE("remote embedding against a stub server") {
  std::atomic<int> hits{0};
  StubServer server(length_handler(&hits));
  const std::vector<std::string> sources = {"ab", "abcd"};
  const auto out = remote_embed(server.url(), sources, 5.0, 3);
  REQUIRE(out.size() == 2);
  CHECK(out[0].values == std::vector<double>{2, 0, 1});
  CHECK(out[1].values == std::vector<double>{4, 1, 1});
  CHECK(out[1].source_digest == sha256_hex("abcd"));

  CHECK(code_of([&] { remote_embed(server.url(), sources, 5.0, 4); }) == ErrorCode::DimMismatch);
}

TEST_CASE("remote embedder only asks for cache misses") {
  std::atomic<int> hits{0};
  StubServer server(length_handler(&hits));
  auto cache = std::make_shared<EmbeddingCache>("stub", 3);
  RemoteEmbedder embedder(server.url(), 5.0, 3, cache);
  const std::vector<std::string> first = {"a", "bb"};
  embedder.embed(first);
  CHECK(hits == 1);
  CHECK(cache->size() == 2);
  const std::vector<std::string> second = {"bb", "a"};
  const auto again = embedder.embed(second);
  CHECK(hits == 1);
  CHECK(again[0].values[0] == 2.0);
  const std::vector<std::string> third = {"a", "ccc"};
  const auto mixed = embedder.embed(third);
  CHECK(hits == 2);
  CHECK(mixed[1].values == std::vector<double>{3, 0, 1});
  CHECK(embedder.provider_tag() == "stub");
}

TEST_CASE("remote failures") {
  const std::vector<std::string> sources = {"a"};
  SUBCASE("non-200 status") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.status = 500;
      res.set_content("boom", "text/plain");
    });
    try {
      remote_embed(server.url(), sources, 5.0, 3);
      FAIL("expected an error");
    } catch (const HttpStatusError& e) {
      CHECK(e.status() == 500);
      CHECK(e.code() == ErrorCode::HttpError);
    }
  }
  SUBCASE("malformed reply") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      res.set_content("{\"vectors\": []}", "application/json");
    });
    CHECK(code_of([&] { remote_embed(server.url(), sources, 5.0, 3); }) == ErrorCode::CorruptRecord);
  }
  SUBCASE("slow server times out") {
    StubServer server([](const httplib::Request&, httplib::Response& res) {
      std::this_thread::sleep_for(std::chrono::milliseconds(1500));
      res.set_content("{\"embeddings\": [[1,2,3]]}", "application/json");
    });
    const auto start = std::chrono::steady_clock::now();
    CHECK(code_of([&] { remote_embed(server.url(), sources, 0.3, 3); }) == ErrorCode::Timeout);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::milliseconds(1400));
  }
  SUBCASE("nothing listening") {
    CHECK(code_of([&] { remote_embed("http://127.0.0.1:1/embed", sources, 0.5, 3); }) ==
          ErrorCode::Timeout);
  }
  SUBCASE("relative url") {
    CHECK(code_of([&] { remote_embed("localhost/embed", sources, 0.5, 3); }) ==
          ErrorCode::InvalidArgument);
  }
}

TEST_CASE("provider specs") {
  CHECK(EmbeddingProvider::parse("tfidf", 768).kind() == EmbeddingProvider::Kind::TfIdf);
  CHECK(EmbeddingProvider::parse("remote:http://127.0.0.1:9/x", 4).kind() ==
        EmbeddingProvider::Kind::Remote);
  CHECK(code_of([] { EmbeddingProvider::parse("word2vec", 768); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { EmbeddingProvider::parse("tfidf", 0); }) == ErrorCode::InvalidArgument);

  const std::vector<std::string> docs = {"a b", "a c"};
  auto tfidf = EmbeddingProvider::parse("tfidf", 8).fit(docs);
  CHECK(tfidf->dim() == 8);
  CHECK(tfidf->provider_tag() == "tfidf");

  testing::TempDir dir;
  std::map<std::string, Embedding> records;
  records.emplace(sha256_hex("a"), Embedding{{1, 0}, "pre", sha256_hex("a")});
  write_embedding_file(dir.path() / "e.jsonl", "pre", 2, records);
  auto pre = EmbeddingProvider::parse("precomputed:" + (dir.path() / "e.jsonl").string(), 2);
  CHECK(pre.kind() == EmbeddingProvider::Kind::Precomputed);
  CHECK(pre.fit(docs)->embed_one("a").values == std::vector<double>{1, 0});
}
