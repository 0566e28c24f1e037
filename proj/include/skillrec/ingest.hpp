#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "skillrec/domain.hpp"

namespace skillrec {

/// A validated set of course offerings. Immutable after load; sequences are
/// ordered by (offering_year, student_id) and each by submitted_at.
class Corpus {
 public:
  Corpus() = default;
  /// Validates every cross-reference; throws Error on the first violation.
  Corpus(std::map<int, CourseSchedule> schedules, std::map<std::string, Problem> problems,
         std::vector<Submission> submissions);

  const std::map<int, CourseSchedule>& schedules() const noexcept { return schedules_; }
  const std::map<std::string, Problem>& problems() const noexcept { return problems_; }
  const std::vector<SubmissionSequence>& sequences() const noexcept { return sequences_; }

  const CourseSchedule& schedule(int offering_year) const;
  const Problem& problem(const std::string& problem_id) const;
  bool has_student(const std::string& student_id, int offering_year) const noexcept;

  std::size_t submission_count() const noexcept;
  std::size_t distinct_student_count() const;

  /// Every submission in iteration order.
  std::vector<Submission> all_submissions() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;

 private:
  std::map<int, CourseSchedule> schedules_;
  std::map<std::string, Problem> problems_;
  std::vector<SubmissionSequence> sequences_;
};

/// Reads `schedule.json`, `problems/*.json` and `submissions.jsonl` under
/// `root`. Errors carry the offending file and, for jsonl, the line number.
Corpus load_corpus(const std::filesystem::path& root);

/// Canonical on-disk form: sorted keys, problems one file each, submissions
/// in iteration order. load_corpus(save_corpus(c)) == c.
void save_corpus(const Corpus& corpus, const std::filesystem::path& root);

struct LabeledSubmission {
  Submission submission;
  SkillVector skills;
};

/// Correct lab-problem submissions no later than (upto_offering, upto_lab),
/// each paired with its problem's instructor labels.
std::vector<LabeledSubmission> correct_submissions(const Corpus& corpus, int upto_offering,
                                                   int upto_lab);

/// Lab submissions (correct or not) no later than (upto_offering, upto_lab).
std::vector<Submission> lab_submissions(const Corpus& corpus, int upto_offering, int upto_lab);

SubmissionSequence student_sequence(const Corpus& corpus, const std::string& student_id,
                                    int offering_year, int upto_lab);

}  // namespace skillrec
