#include "storyloom/errors.hpp"

namespace storyloom {

namespace {

std::string describe_parse(const std::string& path, int line, const std::string& message) {
  std::string out;
  if (line > 0) out += "line " + std::to_string(line) + ": ";
  if (!path.empty()) out += path + ": ";
  return out + message;
}

std::string describe_issues(const std::vector<ValidationIssue>& issues) {
  std::string out = std::to_string(issues.size()) + " validation issue(s)";
  for (const auto& issue : issues) {
    out += "\n  " + issue.field_path;
    if (!issue.identifier.empty()) out += " [" + issue.identifier + "]";
    out += ": " + issue.message;
  }
  return out;
}

}  // namespace

ParseError::ParseError(std::string field_path, int line, const std::string& message)
    : Error(describe_parse(field_path, line, message)), field_path_(std::move(field_path)), line_(line) {}

ValidationError::ValidationError(std::vector<ValidationIssue> issues)
    : Error(describe_issues(issues)), issues_(std::move(issues)) {}

}  // namespace storyloom
