#include "cpsec/corpus.hpp"

namespace cpsec {

namespace {
bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
}  // namespace

std::vector<std::string> tokenize(std::string_view text, std::size_t min_len) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= min_len) tokens.push_back(current);
    current.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (is_word_byte(c)) {
      current.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
    } else if (c == '.' && !current.empty() && is_digit(static_cast<unsigned char>(current.back())) &&
               i + 1 < text.size() && is_digit(static_cast<unsigned char>(text[i + 1]))) {
      current.push_back('.');
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

}  // namespace cpsec
