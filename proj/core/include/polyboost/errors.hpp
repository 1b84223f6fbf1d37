#pragma once

#include <stdexcept>
#include <string>

namespace polyboost {

/// Input data (corpus files, configs, records) violates a documented rule.
/// Maps to CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Model output could not be split back into an instruction record.
class ParseFailure : public std::runtime_error {
 public:
  ParseFailure(std::string reason, std::string excerpt = {})
      : std::runtime_error(reason), reason_(std::move(reason)), excerpt_(std::move(excerpt)) {}

  const std::string& reason() const { return reason_; }
  const std::string& excerpt() const { return excerpt_; }

 private:
  std::string reason_;
  std::string excerpt_;
};

/// Network-level failure after all retries were exhausted.
/// Maps to CLI exit code 3.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Backend answered with a non-retryable error status.
class BackendError : public std::runtime_error {
 public:
  BackendError(int status, const std::string& body_excerpt)
      : std::runtime_error("backend returned status " + std::to_string(status) + ": " +
                           body_excerpt),
        status_(status),
        body_excerpt_(body_excerpt) {}

  int status() const { return status_; }
  const std::string& body_excerpt() const { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

/// Entity-matching judge failed to answer Yes/No after the allowed re-ask.
class EntityJudgeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem failure (missing file, unwritable path). Maps to CLI exit code 4.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polyboost
