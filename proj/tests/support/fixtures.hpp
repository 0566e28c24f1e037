#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>

#include "skillrec/embed.hpp"
#include "skillrec/ingest.hpp"

namespace skillrec::testing {

/// A three-week sample course (weeks 2-4, P1..P9 in labs, P51..P58 as
/// homework) with two students in 2025.
Corpus sample_corpus();

/// Checked-in copy of sample_corpus() on disk.
std::filesystem::path sample_dir();

/// Deletes itself on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "skillrec");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
};

/// Standard normal deviate from mt19937_64 via Box-Muller.
double gaussian(std::mt19937_64& rng);

/// A synthetic corpus whose sources are keyed to known embedding vectors.
struct SyntheticCorpus {
  Corpus corpus;
  std::size_t dim = 0;
  std::map<std::string, Embedding> embeddings;  ///< by source digest

  /// Writes the corpus plus `embeddings.jsonl` under `dir`.
  void write(const std::filesystem::path& dir) const;
  /// "precomputed:<dir>/embeddings.jsonl"
  static std::string provider_spec(const std::filesystem::path& dir);
};

enum class LabelMode {
  Encoded,   ///< embeddings one-hot encode the problem's levels, plus noise
  Random,    ///< embeddings are noise, labels drawn independently
  Constant,  ///< every lab problem has the same labels
};

/// Training offerings 2022..2024 and test offering 2025, eight labs of 60
/// problems each. Encoded and Random modes lecture every topic in week 1 and
/// draw levels uniformly; Encoded adds Gaussian noise of 0.05 A per component.
SyntheticCorpus accuracy_fixture(LabelMode mode, std::uint64_t seed, double amplitude = 50.0);

/// Six-lab offerings 2024 (train) and 2025 (test). Week w introduces topic
/// w-1; every lab and homework problem of week w requires level 2 on topics
/// 0..w-1, so the homework suitable at lab l is exactly that week's.
/// Solution times and correctness are drawn independently of the problem.
SyntheticCorpus suitability_fixture(std::uint64_t seed, double amplitude, int students = 6);

/// A random schedule of up to ten weeks with topics lectured at most once
/// (some never), a random problem and a random window inside the schedule.
struct SuitabilityCase {
  CourseSchedule schedule;
  Problem problem;
  int last_week = 0;
  int current_week = 0;
};
SuitabilityCase random_suitability_case(std::mt19937_64& rng);

inline constexpr int kSuitabilityLabs = 6;
inline constexpr int kSuitabilityHomeworkPerWeek = 3;

}  // namespace skillrec::testing
