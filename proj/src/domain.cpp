#include "skillrec/domain.hpp"

#include <algorithm>
#include <cctype>

#include "skillrec/error.hpp"

namespace skillrec {

namespace {

constexpr std::array<std::string_view, kTopicCount> kTopicNames = {
    "math", "conditional", "repetition", "array", "matrix", "function", "string", "struct",
};

constexpr std::array<std::string_view, kTopicCount> kTopicLabels = {
    "Math", "Conditional", "Repetition", "Array", "Matrix", "Function", "String", "Struct",
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MissingFile: return "MissingFile";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::OrderViolation: return "OrderViolation";
    case ErrorCode::UnknownStudent: return "UnknownStudent";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::EmptyAfterScope: return "EmptyAfterScope";
    case ErrorCode::EmbeddingFailure: return "EmbeddingFailure";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::EmptyPool: return "EmptyPool";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

SkillTopic topic_from_index(std::size_t index) {
  if (index >= kTopicCount) {
    throw Error(ErrorCode::InvalidArgument, "topic index out of range: " + std::to_string(index));
  }
  return kAllTopics[index];
}

std::string_view topic_name(SkillTopic topic) noexcept { return kTopicNames[topic_index(topic)]; }

std::string_view topic_label(SkillTopic topic) noexcept {
  return kTopicLabels[topic_index(topic)];
}

SkillTopic parse_topic(std::string_view name) {
  for (std::size_t i = 0; i < kTopicCount; ++i) {
    if (iequals(name, kTopicNames[i]) || iequals(name, kTopicLabels[i])) return kAllTopics[i];
  }
  throw Error(ErrorCode::SchemaViolation, "unknown topic '" + std::string(name) + "'");
}

SkillLevel::SkillLevel(int value) : value_(value) {
  if (value < 0 || value >= kLevelCount) {
    throw Error(ErrorCode::InvalidArgument,
                "skill level must be in [0, 3], got " + std::to_string(value));
  }
}

SkillVector::SkillVector(const std::array<int, kTopicCount>& levels) {
  for (std::size_t i = 0; i < kTopicCount; ++i) levels_[i] = SkillLevel(levels[i]);
}

std::array<int, kTopicCount> SkillVector::as_ints() const noexcept {
  std::array<int, kTopicCount> out{};
  for (std::size_t i = 0; i < kTopicCount; ++i) out[i] = levels_[i].value();
  return out;
}

std::set<SkillTopic> SkillVector::required_topics() const {
  std::set<SkillTopic> out;
  for (std::size_t i = 0; i < kTopicCount; ++i) {
    if (levels_[i].value() > 0) out.insert(kAllTopics[i]);
  }
  return out;
}

std::array<double, kTopicCount> skill_vector_as_reals(const SkillVector& v) noexcept {
  std::array<double, kTopicCount> out{};
  for (std::size_t i = 0; i < kTopicCount; ++i) out[i] = static_cast<double>(v.at(i).value());
  return out;
}

std::string_view role_name(ProblemRole role) noexcept {
  return role == ProblemRole::Lab ? "lab" : "homework";
}

CourseSchedule::CourseSchedule(std::vector<CourseWeek> weeks) : weeks_(std::move(weeks)) {
  for (std::size_t i = 1; i < weeks_.size(); ++i) {
    if (weeks_[i].week <= weeks_[i - 1].week) {
      throw Error(ErrorCode::SchemaViolation, "schedule weeks must be strictly increasing");
    }
  }
  std::set<SkillTopic> seen;
  for (const auto& w : weeks_) {
    if (w.week < 1) throw Error(ErrorCode::SchemaViolation, "week numbers start at 1");
    for (SkillTopic t : w.lecture_topics) {
      if (!seen.insert(t).second) {
        throw Error(ErrorCode::SchemaViolation,
                    "topic '" + std::string(topic_name(t)) + "' introduced in more than one week");
      }
    }
  }
}

int CourseSchedule::first_week() const {
  if (weeks_.empty()) throw Error(ErrorCode::InvalidArgument, "empty schedule");
  return weeks_.front().week;
}

int CourseSchedule::last_week() const {
  if (weeks_.empty()) throw Error(ErrorCode::InvalidArgument, "empty schedule");
  return weeks_.back().week;
}

int CourseSchedule::week_of_lab(int lab_index) const { return lab_week(lab_index).week; }

int CourseSchedule::lab_of_week(int week) const noexcept {
  int lab = 0;
  for (std::size_t i = 0; i < weeks_.size() && weeks_[i].week <= week; ++i) {
    lab = static_cast<int>(i) + 1;
  }
  return lab;
}

const CourseWeek& CourseSchedule::lab_week(int lab_index) const {
  if (lab_index < 1 || lab_index > lab_count()) {
    throw Error(ErrorCode::InvalidArgument, "lab index out of range: " + std::to_string(lab_index));
  }
  return weeks_[static_cast<std::size_t>(lab_index - 1)];
}

std::optional<int> CourseSchedule::introduction_week(SkillTopic topic) const noexcept {
  for (const auto& w : weeks_) {
    if (std::find(w.lecture_topics.begin(), w.lecture_topics.end(), topic) !=
        w.lecture_topics.end()) {
      return w.week;
    }
  }
  return std::nullopt;
}

std::vector<std::string> CourseSchedule::homework_pool() const {
  std::vector<std::string> out;
  for (const auto& w : weeks_) {
    for (const auto& id : w.homework_pool) {
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
  }
  return out;
}

std::set<SkillTopic> topics_introduced_between(const CourseSchedule& schedule, int after_week,
                                               int upto_week) {
  const int last = schedule.empty() ? 0 : schedule.last_week();
  if (after_week < 0 || upto_week < 0 || after_week > last || upto_week > last) {
    throw Error(ErrorCode::InvalidArgument, "week window [" + std::to_string(after_week) + ", " +
                                                std::to_string(upto_week) +
                                                "] outside schedule range [0, " +
                                                std::to_string(last) + "]");
  }
  if (after_week > upto_week) {
    throw Error(ErrorCode::InvalidArgument, "after_week must not exceed upto_week");
  }
  std::set<SkillTopic> out;
  for (const auto& w : schedule.weeks()) {
    if (w.week > after_week && w.week <= upto_week) {
      out.insert(w.lecture_topics.begin(), w.lecture_topics.end());
    }
  }
  return out;
}

}  // namespace skillrec
