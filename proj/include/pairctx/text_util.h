#ifndef PAIRCTX_TEXT_UTIL_H_
#define PAIRCTX_TEXT_UTIL_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pairctx {

// Byte offset of every code point start in a UTF-8 string, plus a final entry
// equal to text.size(). Invalid lead bytes count as one-byte code points.
std::vector<std::size_t> utf8_boundaries(std::string_view text);

std::size_t utf8_length(std::string_view text);

// Slice by code point offsets [start, end). nullopt when out of range.
std::optional<std::string_view> utf8_slice(std::string_view text,
                                           std::size_t start, std::size_t end);

// Number of bytes in the code point starting with lead byte `c`.
std::size_t utf8_sequence_length(unsigned char c);

std::string ascii_lower(std::string_view s);

// Case-folds (ASCII) and collapses runs of whitespace into one space; leading
// and trailing whitespace is dropped.
std::string normalize_surface(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);

}  // namespace pairctx

#endif  // PAIRCTX_TEXT_UTIL_H_
