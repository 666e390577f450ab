#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpsec {

enum class Severity { warning, error };

struct Diagnostic {
  Severity severity = Severity::error;
  std::string code;  // stable tag, e.g. "duplicate-id", "upward-edge"
  std::string message;
  std::vector<std::string> subjects;  // ids of the nodes/edges/entries involved
  std::optional<int> line;

  bool operator==(const Diagnostic&) const = default;
};

std::string to_string(const Diagnostic& diagnostic);
bool has_errors(const std::vector<Diagnostic>& diagnostics);

/// A parsed value plus the non-fatal diagnostics collected while parsing it.
template <typename T>
struct Parsed {
  T value;
  std::vector<Diagnostic> diagnostics;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input (XML, JSON, archive). Carries the 1-based line when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line = 0);
  int line() const noexcept { return line_; }
  /// The message without the line prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  int line_;
  std::string detail_;
};

/// Well-formed input that violates a model invariant.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<Diagnostic> diagnostics);
  const std::vector<Diagnostic>& diagnostics() const noexcept { return diagnostics_; }

 private:
  std::vector<Diagnostic> diagnostics_;
};

/// A referenced id (node, edge, attack entry, session) does not exist.
class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& id);
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

/// A well-formed request that cannot be applied in the current state.
class InvalidOperation : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cpsec
