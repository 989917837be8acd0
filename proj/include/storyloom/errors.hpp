#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace storyloom {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed corpus or session document. `field_path` is a dotted path such
// as `triggers[2].level`; `line` is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(std::string field_path, int line, const std::string& message);

  const std::string& field_path() const noexcept { return field_path_; }
  int line() const noexcept { return line_; }

 private:
  std::string field_path_;
  int line_;
};

struct ValidationIssue {
  std::string field_path;
  std::string identifier;
  std::string message;
};

// Every violated corpus invariant, not just the first one found.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<ValidationIssue> issues);

  const std::vector<ValidationIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ValidationIssue> issues_;
};

class OutOfRange : public Error {
 public:
  using Error::Error;
};

class SessionNotActive : public Error {
 public:
  using Error::Error;
};

class EmptyMessage : public Error {
 public:
  using Error::Error;
};

// A session document bound to a different corpus version than the one offered.
class CorpusMismatch : public Error {
 public:
  using Error::Error;
};

class GatewayError : public Error {
 public:
  using Error::Error;
};

class GatewayTimeout : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

class GatewayRejected : public GatewayError {
 public:
  GatewayRejected(int status, const std::string& message)
      : GatewayError(message), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class GatewayExhausted : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// The judge reply did not begin with YES or NO.
class JudgeUnparseable : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

// The scripted gateway ran out of replies or has no verdict for a rubric.
class ScriptExhausted : public GatewayError {
 public:
  using GatewayError::GatewayError;
};

}  // namespace storyloom
