#include "pairctx/text_util.h"

#include <algorithm>
#include <cctype>

namespace pairctx {

std::size_t utf8_sequence_length(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c & 0xE0) == 0xC0) return 2;
  if ((c & 0xF0) == 0xE0) return 3;
  if ((c & 0xF8) == 0xF0) return 4;
  return 1;
}

std::vector<std::size_t> utf8_boundaries(std::string_view text) {
  std::vector<std::size_t> out;
  out.reserve(text.size() + 1);
  std::size_t i = 0;
  while (i < text.size()) {
    out.push_back(i);
    std::size_t n = utf8_sequence_length(static_cast<unsigned char>(text[i]));
    i = std::min(text.size(), i + n);
  }
  out.push_back(text.size());
  return out;
}

std::size_t utf8_length(std::string_view text) {
  return utf8_boundaries(text).size() - 1;
}

std::optional<std::string_view> utf8_slice(std::string_view text,
                                           std::size_t start,
                                           std::size_t end) {
  auto b = utf8_boundaries(text);
  if (start > end || end >= b.size()) return std::nullopt;
  return text.substr(b[start], b[end] - b[start]);
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string normalize_surface(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(
        static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.emplace_back(s.substr(pos));
      return out;
    }
    out.emplace_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

}  // namespace pairctx
