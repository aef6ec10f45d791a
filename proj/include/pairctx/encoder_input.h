#ifndef PAIRCTX_ENCODER_INPUT_H_
#define PAIRCTX_ENCODER_INPUT_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pairctx/corpus.h"
#include "pairctx/label.h"

namespace pairctx {

using TokenId = std::int32_t;

inline constexpr std::string_view kClsToken = "[CLS]";
inline constexpr std::string_view kSepToken = "[SEP]";
inline constexpr std::string_view kUnkToken = "[UNK]";
inline constexpr std::string_view kPadToken = "[PAD]";
inline constexpr std::string_view kContinuationPrefix = "##";
inline constexpr std::size_t kMaxSequenceLength = 350;

// Subword vocabulary; a token's id is its position in the list. The special
// token ids are resolved once at construction.
class Vocab {
 public:
  // Throws ValidationError on duplicate tokens or a missing special token.
  static Vocab from_tokens(std::vector<std::string> tokens);
  // One token per line, line number (0-based) = id.
  static Vocab load(const std::filesystem::path& path);
  static Vocab read(std::istream& in);

  std::optional<TokenId> find(std::string_view token) const;
  bool contains(std::string_view token) const { return find(token).has_value(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::size_t size() const { return tokens_.size(); }

  TokenId cls() const { return cls_; }
  TokenId sep() const { return sep_; }
  TokenId unk() const { return unk_; }
  TokenId pad() const { return pad_; }

 private:
  Vocab() = default;

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  TokenId cls_ = 0, sep_ = 0, unk_ = 0, pad_ = 0;
};

struct TokenizerOptions {
  bool lowercase = false;
  // Longer words map straight to [UNK].
  std::size_t max_chars_per_word = 100;
};

// Whitespace split, then every ASCII punctuation character becomes its own
// word. Control characters are dropped.
std::vector<std::string> pre_tokenize(std::string_view text,
                                      const TokenizerOptions& options = {});

// Greedy longest-match-first segmentation of each pre-split word. A word with
// no complete segmentation becomes a single [UNK].
std::vector<std::string> wordpiece_tokenize(
    std::string_view text, const Vocab& vocab,
    const TokenizerOptions& options = {});

std::vector<TokenId> to_ids(std::span<const std::string> tokens,
                            const Vocab& vocab);

struct EncodedExample {
  std::vector<TokenId> token_ids;
  // 0 through the first [SEP], 1 afterwards.
  std::vector<std::uint8_t> segment_ids;
  Label label = Label::kNoRel;
  std::string doc_id;
  std::string gene_id;
  std::string disease_id;
  // Number of abstract subwords removed by truncation.
  std::size_t truncated = 0;

  std::size_t size() const { return token_ids.size(); }
  bool operator==(const EncodedExample&) const = default;
};

// [CLS] gene disease [SEP] abstract [SEP]. The abstract is cut from the tail
// so the total never exceeds max_len. Throws std::invalid_argument for empty
// surfaces and ValidationError when the pair segment alone does not fit.
EncodedExample build_sequence(std::string_view gene_surface,
                              std::string_view disease_surface,
                              std::string_view abstract_text,
                              const Vocab& vocab,
                              std::size_t max_len = kMaxSequenceLength,
                              const TokenizerOptions& options = {});

struct EncodeOptions {
  std::size_t max_len = kMaxSequenceLength;
  bool include_title = true;
  TokenizerOptions tokenizer;
};

EncodedExample encode_instance(const RelationInstance& inst,
                               const AbstractDoc& doc, const Vocab& vocab,
                               const EncodeOptions& options = {});

// Lists every broken EncodedExample invariant; empty when valid.
std::vector<std::string> check_encoded(const EncodedExample& ex,
                                       const Vocab& vocab,
                                       std::size_t max_len = kMaxSequenceLength);

// Examples padded with [PAD] to the longest one. Row-major B x T layout.
struct Batch {
  std::size_t batch_size = 0;
  std::size_t seq_len = 0;
  std::vector<TokenId> token_ids;
  std::vector<std::uint8_t> segment_ids;
  std::vector<std::uint8_t> attention_mask;  // 1 = real token, 0 = padding
  std::vector<Label> labels;

  TokenId token(std::size_t b, std::size_t t) const {
    return token_ids[b * seq_len + t];
  }
  // Number of leading unmasked positions of row b.
  std::size_t length(std::size_t b) const;
};

Batch make_batch(std::span<const EncodedExample> examples, TokenId pad_id);
Batch make_batch(std::span<const EncodedExample> examples,
                 std::span<const std::size_t> indices, TokenId pad_id);

// Encoded dataset: one JSON object per line.
void write_encoded(std::span<const EncodedExample> examples, std::ostream& out);
std::vector<EncodedExample> read_encoded(std::istream& in,
                                         std::string_view source);

}  // namespace pairctx

#endif  // PAIRCTX_ENCODER_INPUT_H_
