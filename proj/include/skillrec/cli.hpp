#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "skillrec/bundle.hpp"
#include "skillrec/error.hpp"
#include "skillrec/ingest.hpp"
#include "skillrec/recommend.hpp"

namespace skillrec::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kValidation = 2,
  kInsufficientData = 3,
  kUnknownStudent = 4,
  kEmptyAfterScope = 5,
  kFailure = 6,
};

int exit_code_for(ErrorCode code) noexcept;

/// Runs one subcommand. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// The recommendation list as compact JSON, shared by `recommend` and the
/// HTTP endpoint. The bundle must have been trained up to the lab held at
/// `week` of its offering.
std::string recommend_json(const Corpus& corpus, const Bundle& bundle, const Embedder& embedder,
                           const std::string& student_id, int week,
                           const RecommendOptions& options);

}  // namespace skillrec::cli
