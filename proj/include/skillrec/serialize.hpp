#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "skillrec/domain.hpp"

namespace skillrec {

// JSON forms of the domain types. The field names are the on-disk corpus
// schema; parse_* functions reject missing, extra or mistyped fields.

nlohmann::json skill_vector_to_json(const SkillVector& v);
SkillVector parse_skill_vector(const nlohmann::json& j);

nlohmann::json problem_to_json(const Problem& p);
Problem parse_problem(const nlohmann::json& j);

nlohmann::json submission_to_json(const Submission& s);
Submission parse_submission(const nlohmann::json& j);

nlohmann::json schedule_to_json(const CourseSchedule& schedule);
CourseSchedule parse_schedule(const nlohmann::json& j);

/// `{"<year>": {"weeks": [...]}}` as stored in schedule.json.
nlohmann::json schedules_to_json(const std::map<int, CourseSchedule>& schedules);
std::map<int, CourseSchedule> parse_schedules(const nlohmann::json& j);

}  // namespace skillrec
