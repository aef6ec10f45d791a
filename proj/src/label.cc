#include "pairctx/label.h"

#include <stdexcept>

namespace pairctx {

Label label_from_index(int index) {
  if (index < 0 || index >= static_cast<int>(kNumLabels)) {
    throw std::out_of_range("label index out of range: " +
                            std::to_string(index));
  }
  return static_cast<Label>(index);
}

std::string_view label_token(Label l) {
  switch (l) {
    case Label::kNoRel: return "NO_REL";
    case Label::kLof: return "LOF";
    case Label::kGof: return "GOF";
    case Label::kReg: return "REG";
    case Label::kCom: return "COM";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view token) {
  for (Label l : kAllLabels) {
    if (label_token(l) == token) return l;
  }
  return std::nullopt;
}

std::string_view label_caption(Label l) {
  return l == Label::kNoRel ? "No rel" : label_token(l);
}

}  // namespace pairctx
