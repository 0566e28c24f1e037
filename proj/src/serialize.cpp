#include "skillrec/serialize.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>

#include "skillrec/error.hpp"

namespace skillrec {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& message) {
  throw Error(ErrorCode::SchemaViolation, message);
}

void expect_object(const json& j, std::initializer_list<std::string_view> fields,
                   std::string_view what) {
  if (!j.is_object()) schema_error(std::string(what) + " must be a JSON object");
  for (auto field : fields) {
    if (!j.contains(field)) {
      schema_error(std::string(what) + " is missing field '" + std::string(field) + "'");
    }
  }
  for (const auto& [key, _] : j.items()) {
    if (std::find(fields.begin(), fields.end(), key) == fields.end()) {
      schema_error(std::string(what) + " has unexpected field '" + key + "'");
    }
  }
}

const json& field(const json& j, std::string_view name) { return j.at(std::string(name)); }

std::string get_string(const json& j, std::string_view name) {
  const auto& v = field(j, name);
  if (!v.is_string()) schema_error("field '" + std::string(name) + "' must be a string");
  return v.get<std::string>();
}

int get_int(const json& j, std::string_view name) {
  const auto& v = field(j, name);
  if (!v.is_number_integer()) schema_error("field '" + std::string(name) + "' must be an integer");
  const auto value = v.get<std::int64_t>();
  if (value < std::numeric_limits<int>::min() || value > std::numeric_limits<int>::max()) {
    schema_error("field '" + std::string(name) + "' out of range");
  }
  return static_cast<int>(value);
}

bool get_bool(const json& j, std::string_view name) {
  const auto& v = field(j, name);
  if (!v.is_boolean()) schema_error("field '" + std::string(name) + "' must be a boolean");
  return v.get<bool>();
}

std::vector<std::string> get_string_list(const json& j, std::string_view name) {
  const auto& v = field(j, name);
  if (!v.is_array()) schema_error("field '" + std::string(name) + "' must be an array");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) schema_error("field '" + std::string(name) + "' must hold strings");
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

json skill_vector_to_json(const SkillVector& v) {
  json j = json::object();
  for (SkillTopic t : kAllTopics) j[std::string(topic_name(t))] = v[t].value();
  return j;
}

SkillVector parse_skill_vector(const json& j) {
  expect_object(j, {"math", "conditional", "repetition", "array", "matrix", "function", "string",
                    "struct"},
                "skills");
  std::array<int, kTopicCount> levels{};
  for (SkillTopic t : kAllTopics) {
    const int level = get_int(j, topic_name(t));
    if (level < 0 || level >= kLevelCount) {
      schema_error("skill level for '" + std::string(topic_name(t)) + "' must be in [0, 3]");
    }
    levels[topic_index(t)] = level;
  }
  return SkillVector(levels);
}

json problem_to_json(const Problem& p) {
  json j;
  j["id"] = p.problem_id;
  j["role"] = std::string(role_name(p.role));
  j["week"] = p.week;
  j["skills"] = skill_vector_to_json(p.skills);
  j["statement"] = p.statement ? json(*p.statement) : json(nullptr);
  j["reference_solution"] = p.reference_solution;
  return j;
}

Problem parse_problem(const json& j) {
  expect_object(j, {"id", "role", "week", "skills", "statement", "reference_solution"}, "problem");
  Problem p;
  p.problem_id = get_string(j, "id");
  if (p.problem_id.empty()) schema_error("problem id must be non-empty");
  const auto role = get_string(j, "role");
  if (role == "lab") {
    p.role = ProblemRole::Lab;
  } else if (role == "homework") {
    p.role = ProblemRole::Homework;
  } else {
    schema_error("problem role must be \"lab\" or \"homework\", got \"" + role + "\"");
  }
  p.week = get_int(j, "week");
  p.skills = parse_skill_vector(field(j, "skills"));
  const auto& statement = field(j, "statement");
  if (statement.is_string()) {
    p.statement = statement.get<std::string>();
  } else if (!statement.is_null()) {
    schema_error("field 'statement' must be a string or null");
  }
  p.reference_solution = get_string(j, "reference_solution");
  if (p.reference_solution.empty()) schema_error("reference_solution must be non-empty");
  return p;
}

json submission_to_json(const Submission& s) {
  json j;
  j["student_id"] = s.student_id;
  j["year"] = s.offering_year;
  j["lab"] = s.lab_index;
  j["problem"] = s.problem_id;
  j["attempt"] = s.attempt_index;
  j["correct"] = s.correct;
  j["time_s"] = s.solution_time_s ? json(*s.solution_time_s) : json(nullptr);
  j["seq"] = s.submitted_at;
  j["source"] = s.source;
  return j;
}

Submission parse_submission(const json& j) {
  expect_object(j, {"student_id", "year", "lab", "problem", "attempt", "correct", "time_s", "seq",
                    "source"},
                "submission");
  Submission s;
  s.student_id = get_string(j, "student_id");
  s.offering_year = get_int(j, "year");
  s.lab_index = get_int(j, "lab");
  if (s.lab_index < 1) schema_error("field 'lab' must be >= 1");
  s.problem_id = get_string(j, "problem");
  s.attempt_index = get_int(j, "attempt");
  if (s.attempt_index < 1) schema_error("field 'attempt' must be >= 1");
  s.correct = get_bool(j, "correct");
  const auto& time = field(j, "time_s");
  if (time.is_number()) {
    const double t = time.get<double>();
    if (!std::isfinite(t) || t < 0.0) schema_error("field 'time_s' must be a non-negative number");
    s.solution_time_s = t;
  } else if (!time.is_null()) {
    schema_error("field 'time_s' must be a number or null");
  }
  const auto& seq = field(j, "seq");
  if (!seq.is_number_integer()) schema_error("field 'seq' must be an integer");
  s.submitted_at = seq.get<std::int64_t>();
  s.source = get_string(j, "source");
  return s;
}

json schedule_to_json(const CourseSchedule& schedule) {
  json weeks = json::array();
  for (const auto& w : schedule.weeks()) {
    json topics = json::array();
    for (SkillTopic t : w.lecture_topics) topics.push_back(std::string(topic_name(t)));
    weeks.push_back({{"week", w.week},
                     {"lecture_topics", topics},
                     {"lab_problems", w.lab_problems},
                     {"homework_pool", w.homework_pool}});
  }
  return {{"weeks", weeks}};
}

CourseSchedule parse_schedule(const json& j) {
  expect_object(j, {"weeks"}, "offering");
  const auto& weeks = field(j, "weeks");
  if (!weeks.is_array()) schema_error("field 'weeks' must be an array");
  std::vector<CourseWeek> out;
  for (const auto& wj : weeks) {
    expect_object(wj, {"week", "lecture_topics", "lab_problems", "homework_pool"}, "week");
    CourseWeek w;
    w.week = get_int(wj, "week");
    for (const auto& name : get_string_list(wj, "lecture_topics")) {
      w.lecture_topics.push_back(parse_topic(name));
    }
    w.lab_problems = get_string_list(wj, "lab_problems");
    w.homework_pool = get_string_list(wj, "homework_pool");
    out.push_back(std::move(w));
  }
  try {
    return CourseSchedule(std::move(out));
  } catch (const Error& e) {
    schema_error(e.what());
  }
}

json schedules_to_json(const std::map<int, CourseSchedule>& schedules) {
  json j = json::object();
  for (const auto& [year, schedule] : schedules) j[std::to_string(year)] = schedule_to_json(schedule);
  return j;
}

std::map<int, CourseSchedule> parse_schedules(const json& j) {
  if (!j.is_object()) schema_error("schedule root must be an object keyed by year");
  std::map<int, CourseSchedule> out;
  for (const auto& [key, value] : j.items()) {
    int year = 0;
    try {
      std::size_t consumed = 0;
      year = std::stoi(key, &consumed);
      if (consumed != key.size()) throw std::invalid_argument(key);
    } catch (const std::exception&) {
      schema_error("schedule key '" + key + "' is not a year");
    }
    try {
      out.emplace(year, parse_schedule(value));
    } catch (const Error& e) {
      schema_error("offering " + key + ": " + e.what());
    }
  }
  return out;
}

}  // namespace skillrec
