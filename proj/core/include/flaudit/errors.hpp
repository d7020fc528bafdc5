#pragma once

#include <stdexcept>
#include <string>

namespace flaudit {

enum class ErrorCode {
  empty_input,
  index_out_of_range,
  shape_mismatch,
  invalid_spec,
  invalid_record,
  missing_prior_commitment,
  unknown_leaf,
  insufficient_deposit,
  already_joined,
  not_active,
  bad_signature,
  refused_dishonest,
  domain_error,
  config_error,
  no_endorsed_updates,
};

/// Library-wide exception carrying a machine-checkable code.
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

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace flaudit
