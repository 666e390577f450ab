#include "xml.hpp"

#include <expat.h>

#include <memory>
#include <type_traits>

#include "cpsec/diagnostics.hpp"

namespace cpsec::xml {

namespace {

std::string_view local_name(const char* qualified) {
  std::string_view name(qualified);
  // Expat is created without namespace processing, so prefixes arrive as "p:name".
  if (auto colon = name.rfind(':'); colon != std::string_view::npos) name.remove_prefix(colon + 1);
  return name;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return std::string(s);
}

struct Builder {
  XML_Parser parser = nullptr;
  Element root;
  std::vector<Element*> stack;
  bool have_root = false;
};

void on_start(void* user, const XML_Char* name, const XML_Char** attrs) {
  auto* b = static_cast<Builder*>(user);
  Element element;
  element.name = local_name(name);
  element.line = static_cast<int>(XML_GetCurrentLineNumber(b->parser));
  for (int i = 0; attrs[i]; i += 2)
    element.attributes.emplace_back(std::string(local_name(attrs[i])), attrs[i + 1]);

  if (b->stack.empty()) {
    b->root = std::move(element);
    b->have_root = true;
    b->stack.push_back(&b->root);
    return;
  }
  Element* parent = b->stack.back();
  parent->order.push_back(static_cast<int>(parent->children.size()));
  parent->children.push_back(std::move(element));
  b->stack.push_back(&parent->children.back());
}

void on_end(void* user, const XML_Char*) {
  static_cast<Builder*>(user)->stack.pop_back();
}

void on_text(void* user, const XML_Char* s, int len) {
  auto* b = static_cast<Builder*>(user);
  if (b->stack.empty()) return;
  Element* e = b->stack.back();
  // Expat may split one text run across several callbacks.
  if (!e->order.empty() && e->order.back() < 0) {
    e->texts.back().append(s, static_cast<std::size_t>(len));
    return;
  }
  e->order.push_back(-1 - static_cast<int>(e->texts.size()));
  e->texts.emplace_back(s, static_cast<std::size_t>(len));
}

void collect(const Element& e, std::string& out) {
  for (int slot : e.order) {
    if (slot >= 0) {
      collect(e.children[static_cast<std::size_t>(slot)], out);
      continue;
    }
    for (char c : e.texts[static_cast<std::size_t>(-1 - slot)]) {
      if (is_space(c)) {
        if (!out.empty() && out.back() != ' ') out.push_back(' ');
      } else {
        out.push_back(c);
      }
    }
    if (!out.empty() && out.back() != ' ') out.push_back(' ');
  }
}

}  // namespace

const std::string* Element::attribute(std::string_view key) const {
  for (const auto& [k, v] : attributes)
    if (k == key) return &v;
  return nullptr;
}

const Element* Element::child(std::string_view child_name) const {
  for (const auto& c : children)
    if (c.name == child_name) return &c;
  return nullptr;
}

std::vector<const Element*> Element::children_named(std::string_view child_name) const {
  std::vector<const Element*> out;
  for (const auto& c : children)
    if (c.name == child_name) out.push_back(&c);
  return out;
}

std::string Element::text() const {
  std::string joined;
  for (const auto& t : texts) joined += t;
  return trim(joined);
}

std::string Element::deep_text() const {
  std::string out;
  collect(*this, out);
  return trim(out);
}

Element parse(std::string_view document) {
  // Stack pointers stay valid: a vector only grows while its owner is the
  // innermost open element, and closed siblings are never referenced again.
  Builder builder;
  std::unique_ptr<std::remove_pointer_t<XML_Parser>, decltype(&XML_ParserFree)> parser(
      XML_ParserCreate("UTF-8"), &XML_ParserFree);
  if (!parser) throw ParseError("cannot allocate XML parser");
  builder.parser = parser.get();
  XML_SetUserData(parser.get(), &builder);
  XML_SetElementHandler(parser.get(), on_start, on_end);
  XML_SetCharacterDataHandler(parser.get(), on_text);

  if (XML_Parse(parser.get(), document.data(), static_cast<int>(document.size()), XML_TRUE) ==
      XML_STATUS_ERROR) {
    throw ParseError(std::string("malformed XML: ") + XML_ErrorString(XML_GetErrorCode(parser.get())),
                     static_cast<int>(XML_GetCurrentLineNumber(parser.get())));
  }
  if (!builder.have_root) throw ParseError("empty XML document", 1);
  return std::move(builder.root);
}

std::string escape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

}  // namespace cpsec::xml
