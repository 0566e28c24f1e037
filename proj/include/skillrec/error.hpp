#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace skillrec {

enum class ErrorCode {
  InvalidArgument,
  MissingFile,
  SchemaViolation,
  DanglingReference,
  OrderViolation,
  UnknownStudent,
  EmptyCorpus,
  EmptyInput,
  DimMismatch,
  CorruptRecord,
  Timeout,
  HttpError,
  NonFiniteLoss,
  EmptyAfterScope,
  EmbeddingFailure,
  InsufficientData,
  EmptyPool,
  IoError,
};

std::string_view error_code_name(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so the
/// command line can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class HttpStatusError : public Error {
 public:
  HttpStatusError(int status, const std::string& message)
      : Error(ErrorCode::HttpError, "status " + std::to_string(status) + ": " + message),
        status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace skillrec
