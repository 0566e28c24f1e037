#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace skillrec {

inline constexpr std::size_t kTopicCount = 8;
inline constexpr int kLevelCount = 4;

/// Programming topics in canonical order. The numeric value is the index
/// used everywhere: model bundles, reports and skill vectors.
enum class SkillTopic : std::uint8_t {
  Math = 0,
  Conditional,
  Repetition,
  Array,
  Matrix,
  Function,
  String,
  Struct,
};

inline constexpr std::array<SkillTopic, kTopicCount> kAllTopics = {
    SkillTopic::Math,   SkillTopic::Conditional, SkillTopic::Repetition, SkillTopic::Array,
    SkillTopic::Matrix, SkillTopic::Function,    SkillTopic::String,     SkillTopic::Struct,
};

constexpr std::size_t topic_index(SkillTopic topic) noexcept {
  return static_cast<std::size_t>(topic);
}

SkillTopic topic_from_index(std::size_t index);

/// Lower-case wire name ("math", "conditional", ...).
std::string_view topic_name(SkillTopic topic) noexcept;
/// Title-case label for reports ("Math", "Conditional", ...).
std::string_view topic_label(SkillTopic topic) noexcept;
/// Accepts either the wire name or the label, case-insensitively.
SkillTopic parse_topic(std::string_view name);

/// Ordinal difficulty: 0 = not covered, 1 = easy, 2 = medium, 3 = hard.
class SkillLevel {
 public:
  constexpr SkillLevel() noexcept = default;
  explicit SkillLevel(int value);

  constexpr int value() const noexcept { return value_; }

  friend constexpr bool operator==(SkillLevel, SkillLevel) noexcept = default;
  friend constexpr auto operator<=>(SkillLevel, SkillLevel) noexcept = default;

 private:
  int value_ = 0;
};

class SkillVector {
 public:
  SkillVector() = default;
  /// Levels in canonical topic order; each must be in [0, 3].
  explicit SkillVector(const std::array<int, kTopicCount>& levels);

  SkillLevel operator[](SkillTopic topic) const noexcept { return levels_[topic_index(topic)]; }
  SkillLevel at(std::size_t index) const { return levels_.at(index); }
  void set(SkillTopic topic, SkillLevel level) noexcept { levels_[topic_index(topic)] = level; }

  std::array<int, kTopicCount> as_ints() const noexcept;
  /// Topics with level >= 1.
  std::set<SkillTopic> required_topics() const;

  friend bool operator==(const SkillVector&, const SkillVector&) = default;

 private:
  std::array<SkillLevel, kTopicCount> levels_{};
};

/// Identity embedding of the ordinal levels into reals.
std::array<double, kTopicCount> skill_vector_as_reals(const SkillVector& v) noexcept;

struct Submission {
  std::string student_id;
  int offering_year = 0;
  int lab_index = 1;
  std::string problem_id;
  int attempt_index = 1;
  std::string source;
  bool correct = false;
  /// Absent when the judge recorded no duration.
  std::optional<double> solution_time_s;
  /// Monotone per-student sequence number within an offering.
  std::int64_t submitted_at = 0;

  friend bool operator==(const Submission&, const Submission&) = default;
};

struct SubmissionSequence {
  std::string student_id;
  int offering_year = 0;
  std::vector<Submission> submissions;

  bool empty() const noexcept { return submissions.empty(); }
  std::size_t size() const noexcept { return submissions.size(); }

  friend bool operator==(const SubmissionSequence&, const SubmissionSequence&) = default;
};

enum class ProblemRole : std::uint8_t { Lab, Homework };

std::string_view role_name(ProblemRole role) noexcept;

struct Problem {
  std::string problem_id;
  std::optional<std::string> statement;
  std::string reference_solution;
  SkillVector skills;
  ProblemRole role = ProblemRole::Lab;
  int week = 0;

  friend bool operator==(const Problem&, const Problem&) = default;
};

struct CourseWeek {
  int week = 0;
  std::vector<SkillTopic> lecture_topics;
  std::vector<std::string> lab_problems;
  std::vector<std::string> homework_pool;

  friend bool operator==(const CourseWeek&, const CourseWeek&) = default;
};

/// Weekly course layout for one offering. Weeks are kept in ascending order;
/// lab index l (1-based) is the lab session held in the l-th listed week.
class CourseSchedule {
 public:
  CourseSchedule() = default;
  explicit CourseSchedule(std::vector<CourseWeek> weeks);

  const std::vector<CourseWeek>& weeks() const noexcept { return weeks_; }
  bool empty() const noexcept { return weeks_.empty(); }
  int first_week() const;
  int last_week() const;
  int lab_count() const noexcept { return static_cast<int>(weeks_.size()); }

  int week_of_lab(int lab_index) const;
  /// Latest lab held at or before `week`; 0 when none.
  int lab_of_week(int week) const noexcept;
  const CourseWeek& lab_week(int lab_index) const;

  /// Week in which a topic is lectured, if any.
  std::optional<int> introduction_week(SkillTopic topic) const noexcept;

  /// Homework candidates listed anywhere in the schedule, in schedule order.
  std::vector<std::string> homework_pool() const;

  friend bool operator==(const CourseSchedule&, const CourseSchedule&) = default;

 private:
  std::vector<CourseWeek> weeks_;
};

/// Topics lectured in weeks w with after_week < w <= upto_week. Both bounds
/// must lie in [0, last_week].
std::set<SkillTopic> topics_introduced_between(const CourseSchedule& schedule, int after_week,
                                               int upto_week);

}  // namespace skillrec
