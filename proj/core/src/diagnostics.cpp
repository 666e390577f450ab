#include "cpsec/diagnostics.hpp"

#include <algorithm>

namespace cpsec {

std::string to_string(const Diagnostic& diagnostic) {
  std::string out = diagnostic.severity == Severity::error ? "error" : "warning";
  if (diagnostic.line) out += " (line " + std::to_string(*diagnostic.line) + ")";
  out += " [" + diagnostic.code + "]: " + diagnostic.message;
  return out;
}

bool has_errors(const std::vector<Diagnostic>& diagnostics) {
  return std::any_of(diagnostics.begin(), diagnostics.end(),
                     [](const Diagnostic& d) { return d.severity == Severity::error; });
}

ParseError::ParseError(const std::string& message, int line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line), detail_(message) {}

namespace {
std::string summarize(const std::vector<Diagnostic>& diagnostics) {
  std::string out;
  for (const auto& d : diagnostics) {
    if (d.severity != Severity::error) continue;
    if (!out.empty()) out += "; ";
    out += d.message;
  }
  return out.empty() ? "validation failed" : out;
}
}  // namespace

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(summarize(diagnostics)), diagnostics_(std::move(diagnostics)) {}

NotFoundError::NotFoundError(const std::string& id) : Error("unknown id \"" + id + "\""), id_(id) {}

}  // namespace cpsec
