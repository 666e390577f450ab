#pragma once

// Small read-only DOM over expat. Element and attribute names have any
// namespace prefix stripped; CAPEC/CWE/GraphML all live in one namespace.

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cpsec::xml {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Element> children;
  std::vector<std::string> texts;  // character-data runs, interleaved with children per `order`
  std::vector<int> order;          // >= 0: child index, < 0: text index (-1 - i)
  int line = 0;

  const std::string* attribute(std::string_view key) const;
  const Element* child(std::string_view child_name) const;
  std::vector<const Element*> children_named(std::string_view child_name) const;

  /// Direct character data only, whitespace-trimmed.
  std::string text() const;
  /// All descendant character data in document order, runs separated by one
  /// space and whitespace collapsed.
  std::string deep_text() const;
};

/// Throws ParseError (with line) on malformed documents.
Element parse(std::string_view document);

std::string escape(std::string_view text);

}  // namespace cpsec::xml
