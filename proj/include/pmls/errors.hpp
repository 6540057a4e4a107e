#pragma once

#include <stdexcept>
#include <string>

namespace pmls {

enum class ErrorCode {
  kRankDeficient,
  kNonFinite,
  kTooFewRows,
  kNTooSmall,
  kEmptyFold,
  kSchemaMismatch,
  kUnparseableCell,
  kMissingLowerExpectation,
  kMTooLarge,
  kZeroDenominator,
  kInvalidArgument,
  kIoError,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

// Exit-code classes used by the CLI: 2 config, 3 data, 4 numerical.
int exit_code_for(ErrorCode code);

}  // namespace pmls
