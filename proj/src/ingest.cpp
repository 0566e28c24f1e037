#include "skillrec/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "skillrec/error.hpp"
#include "skillrec/serialize.hpp"

namespace skillrec {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void validate_schedule(int year, const CourseSchedule& schedule,
                       const std::map<std::string, Problem>& problems) {
  const std::string where = "schedule.json: offering " + std::to_string(year) + ": ";
  std::set<SkillTopic> introduced;
  std::set<SkillTopic> used;
  for (const auto& w : schedule.weeks()) {
    introduced.insert(w.lecture_topics.begin(), w.lecture_topics.end());
    for (const auto& id : w.lab_problems) {
      auto it = problems.find(id);
      if (it == problems.end()) {
        throw Error(ErrorCode::DanglingReference, where + "unknown lab problem '" + id + "'");
      }
      if (it->second.role != ProblemRole::Lab) {
        throw Error(ErrorCode::SchemaViolation,
                    where + "problem '" + id + "' is listed as a lab problem but has role homework");
      }
      for (SkillTopic t : it->second.skills.required_topics()) {
        if (!introduced.contains(t)) {
          throw Error(ErrorCode::SchemaViolation,
                      where + "lab problem '" + id + "' in week " + std::to_string(w.week) +
                          " requires '" + std::string(topic_name(t)) +
                          "' before it is introduced");
        }
        used.insert(t);
      }
    }
    for (const auto& id : w.homework_pool) {
      auto it = problems.find(id);
      if (it == problems.end()) {
        throw Error(ErrorCode::DanglingReference, where + "unknown homework problem '" + id + "'");
      }
      if (it->second.role != ProblemRole::Homework) {
        throw Error(ErrorCode::SchemaViolation,
                    where + "problem '" + id + "' is in a homework pool but has role lab");
      }
    }
  }
  for (SkillTopic t : introduced) {
    if (!used.contains(t)) {
      throw Error(ErrorCode::SchemaViolation, where + "topic '" + std::string(topic_name(t)) +
                                                  "' is lectured but no lab problem requires it");
    }
  }
}

std::string origin_of(const std::vector<std::string>* origins, std::size_t index) {
  if (origins == nullptr || index >= origins->size()) return {};
  return (*origins)[index] + ": ";
}

std::vector<SubmissionSequence> build_sequences(const std::map<int, CourseSchedule>& schedules,
                                                const std::map<std::string, Problem>& problems,
                                                std::vector<Submission> submissions,
                                                const std::vector<std::string>* origins) {
  for (std::size_t i = 0; i < submissions.size(); ++i) {
    const auto& s = submissions[i];
    auto sched = schedules.find(s.offering_year);
    if (sched == schedules.end()) {
      throw Error(ErrorCode::DanglingReference,
                  origin_of(origins, i) + "submission refers to unknown offering " +
                      std::to_string(s.offering_year));
    }
    if (!problems.contains(s.problem_id)) {
      throw Error(ErrorCode::DanglingReference,
                  origin_of(origins, i) + "submission refers to unknown problem '" +
                      s.problem_id + "'");
    }
    if (s.lab_index > sched->second.lab_count()) {
      throw Error(ErrorCode::SchemaViolation,
                  origin_of(origins, i) + "lab " + std::to_string(s.lab_index) +
                      " exceeds the " + std::to_string(sched->second.lab_count()) +
                      " labs of offering " + std::to_string(s.offering_year));
    }
  }

  std::vector<std::size_t> order(submissions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = submissions[a];
    const auto& y = submissions[b];
    return std::tie(x.offering_year, x.student_id, x.submitted_at) <
           std::tie(y.offering_year, y.student_id, y.submitted_at);
  });

  std::vector<SubmissionSequence> sequences;
  std::map<std::string, int> next_attempt;
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    const std::size_t i = order[pos];
    auto& s = submissions[i];
    if (sequences.empty() || sequences.back().student_id != s.student_id ||
        sequences.back().offering_year != s.offering_year) {
      sequences.push_back({s.student_id, s.offering_year, {}});
      next_attempt.clear();
    } else if (sequences.back().submissions.back().submitted_at == s.submitted_at) {
      throw Error(ErrorCode::OrderViolation,
                  origin_of(origins, i) + "duplicate seq " + std::to_string(s.submitted_at) +
                      " for student '" + s.student_id + "'");
    }
    int& expected = next_attempt.try_emplace(s.problem_id, 1).first->second;
    if (s.attempt_index != expected) {
      throw Error(ErrorCode::OrderViolation,
                  origin_of(origins, i) + "student '" + s.student_id + "' problem '" +
                      s.problem_id + "': expected attempt " + std::to_string(expected) + ", got " +
                      std::to_string(s.attempt_index));
    }
    ++expected;
    sequences.back().submissions.push_back(std::move(s));
  }
  return sequences;
}

json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

bool within(const Submission& s, int upto_offering, int upto_lab) {
  return s.offering_year < upto_offering ||
         (s.offering_year == upto_offering && s.lab_index <= upto_lab);
}

}  // namespace

Corpus::Corpus(std::map<int, CourseSchedule> schedules, std::map<std::string, Problem> problems,
               std::vector<Submission> submissions)
    : schedules_(std::move(schedules)), problems_(std::move(problems)) {
  for (const auto& [id, p] : problems_) {
    if (id != p.problem_id) {
      throw Error(ErrorCode::SchemaViolation, "problem key '" + id + "' != id '" + p.problem_id + "'");
    }
    if (p.reference_solution.empty()) {
      throw Error(ErrorCode::SchemaViolation, "problem '" + id + "' has no reference solution");
    }
  }
  for (const auto& [year, schedule] : schedules_) validate_schedule(year, schedule, problems_);
  sequences_ = build_sequences(schedules_, problems_, std::move(submissions), nullptr);
}

const CourseSchedule& Corpus::schedule(int offering_year) const {
  auto it = schedules_.find(offering_year);
  if (it == schedules_.end()) {
    throw Error(ErrorCode::InvalidArgument, "no offering " + std::to_string(offering_year));
  }
  return it->second;
}

const Problem& Corpus::problem(const std::string& problem_id) const {
  auto it = problems_.find(problem_id);
  if (it == problems_.end()) {
    throw Error(ErrorCode::DanglingReference, "unknown problem '" + problem_id + "'");
  }
  return it->second;
}

bool Corpus::has_student(const std::string& student_id, int offering_year) const noexcept {
  return std::any_of(sequences_.begin(), sequences_.end(), [&](const SubmissionSequence& s) {
    return s.student_id == student_id && s.offering_year == offering_year;
  });
}

std::size_t Corpus::submission_count() const noexcept {
  std::size_t n = 0;
  for (const auto& s : sequences_) n += s.size();
  return n;
}

std::size_t Corpus::distinct_student_count() const {
  std::set<std::string> ids;
  for (const auto& s : sequences_) ids.insert(s.student_id);
  return ids.size();
}

std::vector<Submission> Corpus::all_submissions() const {
  std::vector<Submission> out;
  out.reserve(submission_count());
  for (const auto& seq : sequences_) {
    out.insert(out.end(), seq.submissions.begin(), seq.submissions.end());
  }
  return out;
}

Corpus load_corpus(const fs::path& root) {
  const auto schedule_path = root / "schedule.json";
  const auto problems_dir = root / "problems";
  const auto submissions_path = root / "submissions.jsonl";
  if (!fs::exists(schedule_path)) {
    throw Error(ErrorCode::MissingFile, schedule_path.string() + ": not found");
  }
  if (!fs::is_directory(problems_dir)) {
    throw Error(ErrorCode::MissingFile, problems_dir.string() + ": not found");
  }
  if (!fs::exists(submissions_path)) {
    throw Error(ErrorCode::MissingFile, submissions_path.string() + ": not found");
  }

  std::map<int, CourseSchedule> schedules;
  try {
    schedules = parse_schedules(read_json_file(schedule_path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SchemaViolation) throw;
    throw Error(e.code(), schedule_path.string() + ": " + e.what());
  }

  std::vector<fs::path> problem_files;
  for (const auto& entry : fs::directory_iterator(problems_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      problem_files.push_back(entry.path());
    }
  }
  std::sort(problem_files.begin(), problem_files.end());
  std::map<std::string, Problem> problems;
  for (const auto& path : problem_files) {
    Problem p;
    try {
      p = parse_problem(read_json_file(path));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SchemaViolation) throw;
      throw Error(e.code(), path.string() + ": " + e.what());
    }
    if (p.problem_id != path.stem().string()) {
      throw Error(ErrorCode::SchemaViolation,
                  path.string() + ": id '" + p.problem_id + "' does not match file name");
    }
    problems.emplace(p.problem_id, std::move(p));
  }

  std::ifstream in(submissions_path);
  if (!in) throw Error(ErrorCode::MissingFile, "cannot open " + submissions_path.string());
  std::vector<Submission> submissions;
  std::vector<std::string> origins;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string origin = submissions_path.string() + ":" + std::to_string(line_no);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      submissions.push_back(parse_submission(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::SchemaViolation, origin + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), origin + ": " + e.what());
    }
    origins.push_back(origin);
  }

  // Validate once with line origins so errors point at the file, then build.
  Corpus corpus(std::move(schedules), std::move(problems), {});
  auto sequences =
      build_sequences(corpus.schedules(), corpus.problems(), std::move(submissions), &origins);
  std::vector<Submission> flat;
  for (auto& seq : sequences) {
    for (auto& s : seq.submissions) flat.push_back(std::move(s));
  }
  return Corpus(corpus.schedules(), corpus.problems(), std::move(flat));
}

void save_corpus(const Corpus& corpus, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root / "problems", ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + (root / "problems").string());
  write_text(root / "schedule.json", schedules_to_json(corpus.schedules()).dump(2) + "\n");
  for (const auto& [id, p] : corpus.problems()) {
    write_text(root / "problems" / (id + ".json"), problem_to_json(p).dump(2) + "\n");
  }
  std::ostringstream lines;
  for (const auto& seq : corpus.sequences()) {
    for (const auto& s : seq.submissions) lines << submission_to_json(s).dump() << '\n';
  }
  write_text(root / "submissions.jsonl", lines.str());
}

std::vector<LabeledSubmission> correct_submissions(const Corpus& corpus, int upto_offering,
                                                   int upto_lab) {
  std::vector<LabeledSubmission> out;
  for (const auto& seq : corpus.sequences()) {
    for (const auto& s : seq.submissions) {
      if (!s.correct || !within(s, upto_offering, upto_lab)) continue;
      const auto& p = corpus.problem(s.problem_id);
      if (p.role != ProblemRole::Lab) continue;
      out.push_back({s, p.skills});
    }
  }
  return out;
}

std::vector<Submission> lab_submissions(const Corpus& corpus, int upto_offering, int upto_lab) {
  std::vector<Submission> out;
  for (const auto& seq : corpus.sequences()) {
    for (const auto& s : seq.submissions) {
      if (!within(s, upto_offering, upto_lab)) continue;
      if (corpus.problem(s.problem_id).role != ProblemRole::Lab) continue;
      out.push_back(s);
    }
  }
  return out;
}

SubmissionSequence student_sequence(const Corpus& corpus, const std::string& student_id,
                                    int offering_year, int upto_lab) {
  for (const auto& seq : corpus.sequences()) {
    if (seq.student_id != student_id || seq.offering_year != offering_year) continue;
    SubmissionSequence out{seq.student_id, seq.offering_year, {}};
    for (const auto& s : seq.submissions) {
      if (s.lab_index <= upto_lab) out.submissions.push_back(s);
    }
    return out;
  }
  throw Error(ErrorCode::UnknownStudent, "no student '" + student_id + "' in offering " +
                                             std::to_string(offering_year));
}

}  // namespace skillrec
