#ifndef PAIRCTX_LABEL_H_
#define PAIRCTX_LABEL_H_

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace pairctx {

// Relation class between a gene and a disease. The integer codes are the
// canonical class indices used by the network and every metric table.
enum class Label : int { kNoRel = 0, kLof = 1, kGof = 2, kReg = 3, kCom = 4 };

inline constexpr std::size_t kNumLabels = 5;

inline constexpr std::array<Label, kNumLabels> kAllLabels = {
    Label::kNoRel, Label::kLof, Label::kGof, Label::kReg, Label::kCom};

inline constexpr std::array<Label, 4> kPositiveLabels = {
    Label::kLof, Label::kGof, Label::kReg, Label::kCom};

// Row order of the published result tables.
inline constexpr std::array<Label, kNumLabels> kReportOrder = {
    Label::kNoRel, Label::kReg, Label::kCom, Label::kLof, Label::kGof};

constexpr int label_index(Label l) { return static_cast<int>(l); }

constexpr bool is_positive(Label l) { return l != Label::kNoRel; }

// Throws std::out_of_range for codes outside 0..4.
Label label_from_index(int index);

// "NO_REL", "LOF", "GOF", "REG", "COM".
std::string_view label_token(Label l);

// Inverse of label_token. Returns nullopt for anything else.
std::optional<Label> parse_label(std::string_view token);

// Row caption used in report tables ("No rel", "REG", ...).
std::string_view label_caption(Label l);

}  // namespace pairctx

#endif  // PAIRCTX_LABEL_H_
