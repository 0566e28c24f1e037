#include "skillrec/bundle.hpp"

#include <fstream>
#include <sstream>

#include "skillrec/error.hpp"

namespace skillrec {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << '\n';
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, path.string() + ": " + e.what());
  }
}

std::string topic_file(SkillTopic t) { return "model-" + std::string(topic_name(t)) + ".json"; }

std::string baseline_file(BaselineKind k) {
  return "model-" + std::string(baseline_kind_name(k)) + ".json";
}

}  // namespace

std::shared_ptr<const Embedder> Bundle::embedder() const {
  if (provider == "tfidf") {
    if (!vocabulary) throw Error(ErrorCode::CorruptRecord, "tf-idf bundle without a vocabulary");
    return std::make_shared<TfIdfEmbedder>(*vocabulary);
  }
  return EmbeddingProvider::parse(provider, dim, timeout_s).fit({});
}

void save_bundle(const Bundle& bundle, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw Error(ErrorCode::IoError, "cannot create " + dir.string());
  for (const auto& entry : fs::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (name.starts_with("model-") && name.ends_with(".json")) fs::remove(entry.path());
  }
  fs::remove(dir / "vocabulary.json");

  const bool baselines = bundle.models.solution_time.has_value();
  write_json(dir / "bundle.json",
             {{"provider", bundle.provider},
              {"dim", bundle.dim},
              {"timeout", bundle.timeout_s},
              {"trained_upto",
               {{"year", bundle.trained_upto.offering_year}, {"lab", bundle.trained_upto.lab_index}}},
              {"seed", bundle.seed},
              {"config_digest", bundle.config_digest},
              {"baselines", baselines}});
  if (bundle.vocabulary) write_json(dir / "vocabulary.json", bundle.vocabulary->to_json());
  for (const auto& m : bundle.models.skills) write_json(dir / topic_file(m.topic), skill_model_to_json(m));
  if (baselines) {
    write_json(dir / baseline_file(BaselineKind::SolutionTime),
               baseline_model_to_json(*bundle.models.solution_time));
    write_json(dir / baseline_file(BaselineKind::Correctness),
               baseline_model_to_json(bundle.models.baseline(BaselineKind::Correctness)));
  }
}

Bundle load_bundle(const fs::path& dir) {
  const json meta = read_json(dir / "bundle.json");
  Bundle b;
  try {
    b.provider = meta.at("provider").get<std::string>();
    b.dim = meta.at("dim").get<std::size_t>();
    b.timeout_s = meta.at("timeout").get<double>();
    b.trained_upto = {meta.at("trained_upto").at("year").get<int>(),
                      meta.at("trained_upto").at("lab").get<int>()};
    b.seed = meta.at("seed").get<std::uint64_t>();
    b.config_digest = meta.at("config_digest").get<std::string>();
    if (b.provider == "tfidf") {
      b.vocabulary = TfIdfVocabulary::from_json(read_json(dir / "vocabulary.json"));
    }
    for (auto t : kAllTopics) {
      b.models.skills[topic_index(t)] = skill_model_from_json(read_json(dir / topic_file(t)));
      if (b.models.skills[topic_index(t)].topic != t) {
        throw Error(ErrorCode::CorruptRecord, topic_file(t) + " holds another topic");
      }
    }
    if (meta.at("baselines").get<bool>()) {
      b.models.solution_time =
          baseline_model_from_json(read_json(dir / baseline_file(BaselineKind::SolutionTime)));
      b.models.correctness =
          baseline_model_from_json(read_json(dir / baseline_file(BaselineKind::Correctness)));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::CorruptRecord, (dir / "bundle.json").string() + ": " + e.what());
  }
  for (const auto& m : b.models.skills) {
    if (m.input_dim() != b.dim) {
      throw Error(ErrorCode::DimMismatch, "model input dim differs from the bundle's");
    }
  }
  return b;
}

std::string bundle_digest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) {
    all += f.filename().string();
    all += '\0';
    all += read_file(f);
    all += '\0';
  }
  return sha256_hex(all);
}

}  // namespace skillrec
