#include "pairctx/encoder_input.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "json.hpp"
#include "pairctx/errors.h"
#include "pairctx/text_util.h"

namespace pairctx {

using nlohmann::json;

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens_ = std::move(tokens);
  v.index_.reserve(v.tokens_.size());
  for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
    if (!v.index_.emplace(v.tokens_[i], static_cast<TokenId>(i)).second) {
      throw ValidationError("duplicate vocabulary token '" + v.tokens_[i] +
                            "' at line " + std::to_string(i + 1));
    }
  }
  auto special = [&](std::string_view tok) {
    auto id = v.find(tok);
    if (!id) {
      throw ValidationError("vocabulary lacks special token " +
                            std::string(tok));
    }
    return *id;
  };
  v.cls_ = special(kClsToken);
  v.sep_ = special(kSepToken);
  v.unk_ = special(kUnkToken);
  v.pad_ = special(kPadToken);
  return v;
}

Vocab Vocab::read(std::istream& in) {
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    tokens.push_back(line);
  }
  return from_tokens(std::move(tokens));
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open vocabulary " + path.string());
  return read(in);
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> pre_tokenize(std::string_view text,
                                      const TokenizerOptions& options) {
  std::vector<std::string> words;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) words.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::iscntrl(c)) {
      continue;
    } else if (c < 0x80 && std::ispunct(c)) {
      flush();
      words.emplace_back(1, ch);
    } else {
      cur.push_back(options.lowercase && c < 0x80
                        ? static_cast<char>(std::tolower(c))
                        : ch);
    }
  }
  flush();
  return words;
}

namespace {

void segment_word(const std::string& word, const Vocab& vocab,
                  const TokenizerOptions& options,
                  std::vector<std::string>& out) {
  const auto bounds = utf8_boundaries(word);
  const std::size_t n = bounds.size() - 1;
  if (n > options.max_chars_per_word) {
    out.emplace_back(kUnkToken);
    return;
  }
  std::vector<std::string> pieces;
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = n;
    std::string match;
    while (start < end) {
      std::string piece = word.substr(bounds[start], bounds[end] - bounds[start]);
      if (start > 0) piece.insert(0, kContinuationPrefix);
      if (vocab.contains(piece)) {
        match = std::move(piece);
        break;
      }
      --end;
    }
    if (match.empty()) {
      out.emplace_back(kUnkToken);
      return;
    }
    pieces.push_back(std::move(match));
    start = end;
  }
  out.insert(out.end(), std::make_move_iterator(pieces.begin()),
             std::make_move_iterator(pieces.end()));
}

}  // namespace

std::vector<std::string> wordpiece_tokenize(std::string_view text,
                                            const Vocab& vocab,
                                            const TokenizerOptions& options) {
  std::vector<std::string> out;
  for (const auto& word : pre_tokenize(text, options)) {
    segment_word(word, vocab, options, out);
  }
  return out;
}

std::vector<TokenId> to_ids(std::span<const std::string> tokens,
                            const Vocab& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.find(t).value_or(vocab.unk()));
  return ids;
}

EncodedExample build_sequence(std::string_view gene_surface,
                              std::string_view disease_surface,
                              std::string_view abstract_text,
                              const Vocab& vocab, std::size_t max_len,
                              const TokenizerOptions& options) {
  if (gene_surface.empty() || disease_surface.empty()) {
    throw std::invalid_argument("gene and disease surfaces must be non-empty");
  }
  std::string pair_text(gene_surface);
  pair_text.push_back(' ');
  pair_text.append(disease_surface);
  const auto pair = to_ids(wordpiece_tokenize(pair_text, vocab, options), vocab);
  if (pair.size() + 3 > max_len) {
    throw ValidationError("pair segment of " + std::to_string(pair.size()) +
                          " subwords does not fit in " +
                          std::to_string(max_len) + " positions");
  }
  auto abstract =
      to_ids(wordpiece_tokenize(abstract_text, vocab, options), vocab);
  const std::size_t room = max_len - pair.size() - 3;

  EncodedExample ex;
  if (abstract.size() > room) {
    ex.truncated = abstract.size() - room;
    abstract.resize(room);
  }
  ex.token_ids.reserve(pair.size() + abstract.size() + 3);
  ex.token_ids.push_back(vocab.cls());
  ex.token_ids.insert(ex.token_ids.end(), pair.begin(), pair.end());
  ex.token_ids.push_back(vocab.sep());
  const std::size_t first_segment = ex.token_ids.size();
  ex.token_ids.insert(ex.token_ids.end(), abstract.begin(), abstract.end());
  ex.token_ids.push_back(vocab.sep());
  ex.segment_ids.assign(ex.token_ids.size(), 1);
  std::fill_n(ex.segment_ids.begin(), first_segment, 0);
  return ex;
}

EncodedExample encode_instance(const RelationInstance& inst,
                               const AbstractDoc& doc, const Vocab& vocab,
                               const EncodeOptions& options) {
  EncodedExample ex = build_sequence(
      inst.gene_surface, inst.disease_surface,
      doc.encoding_text(options.include_title), vocab, options.max_len,
      options.tokenizer);
  ex.label = inst.label;
  ex.doc_id = inst.doc_id;
  ex.gene_id = inst.gene_id;
  ex.disease_id = inst.disease_id;
  return ex;
}

std::vector<std::string> check_encoded(const EncodedExample& ex,
                                       const Vocab& vocab,
                                       std::size_t max_len) {
  std::vector<std::string> bad;
  const auto& ids = ex.token_ids;
  if (ids.size() > max_len) bad.push_back("longer than max_len");
  if (ids.size() != ex.segment_ids.size()) {
    bad.push_back("segment_ids length differs from token_ids");
    return bad;
  }
  if (ids.empty() || ids.front() != vocab.cls()) {
    bad.push_back("does not start with [CLS]");
  }
  if (std::count(ids.begin(), ids.end(), vocab.sep()) != 2) {
    bad.push_back("does not contain exactly two [SEP]");
  }
  if (std::count(ids.begin(), ids.end(), vocab.cls()) != 1) {
    bad.push_back("[CLS] appears more than once");
  }
  auto last_real = std::find_if(ids.rbegin(), ids.rend(),
                                [&](TokenId t) { return t != vocab.pad(); });
  if (last_real == ids.rend() || *last_real != vocab.sep()) {
    bad.push_back("final non-PAD token is not [SEP]");
  }
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab.size()) {
      bad.push_back("token id out of vocabulary range");
      break;
    }
  }
  bool seen_one = false;
  for (std::size_t i = 0; i < ex.segment_ids.size(); ++i) {
    const auto s = ex.segment_ids[i];
    if (s > 1 || (seen_one && s == 0)) {
      bad.push_back("segment_ids not monotone in {0,1}");
      break;
    }
    seen_one = seen_one || s == 1;
  }
  auto first_sep = std::find(ids.begin(), ids.end(), vocab.sep());
  if (first_sep != ids.end()) {
    const auto pos = static_cast<std::size_t>(first_sep - ids.begin());
    if (ex.segment_ids[pos] != 0 ||
        (pos + 1 < ids.size() && ex.segment_ids[pos + 1] != 1)) {
      bad.push_back("segment boundary not at the first [SEP]");
    }
  }
  return bad;
}

std::size_t Batch::length(std::size_t b) const {
  std::size_t n = 0;
  while (n < seq_len && attention_mask[b * seq_len + n] != 0) ++n;
  return n;
}

Batch make_batch(std::span<const EncodedExample> examples,
                 std::span<const std::size_t> indices, TokenId pad_id) {
  Batch batch;
  batch.batch_size = indices.size();
  for (std::size_t i : indices) {
    batch.seq_len = std::max(batch.seq_len, examples[i].size());
  }
  const std::size_t cells = batch.batch_size * batch.seq_len;
  batch.token_ids.assign(cells, pad_id);
  batch.segment_ids.assign(cells, 0);
  batch.attention_mask.assign(cells, 0);
  batch.labels.reserve(indices.size());
  for (std::size_t b = 0; b < indices.size(); ++b) {
    const auto& ex = examples[indices[b]];
    std::copy(ex.token_ids.begin(), ex.token_ids.end(),
              batch.token_ids.begin() + b * batch.seq_len);
    std::copy(ex.segment_ids.begin(), ex.segment_ids.end(),
              batch.segment_ids.begin() + b * batch.seq_len);
    std::fill_n(batch.attention_mask.begin() + b * batch.seq_len, ex.size(), 1);
    batch.labels.push_back(ex.label);
  }
  return batch;
}

Batch make_batch(std::span<const EncodedExample> examples, TokenId pad_id) {
  std::vector<std::size_t> all(examples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return make_batch(examples, all, pad_id);
}

void write_encoded(std::span<const EncodedExample> examples,
                   std::ostream& out) {
  for (const auto& ex : examples) {
    json rec = {{"doc_id", ex.doc_id},
                {"gene_id", ex.gene_id},
                {"disease_id", ex.disease_id},
                {"label", label_token(ex.label)},
                {"token_ids", ex.token_ids},
                {"segment_ids", ex.segment_ids}};
    if (ex.truncated > 0) rec["truncated"] = ex.truncated;
    out << rec.dump() << '\n';
  }
}

std::vector<EncodedExample> read_encoded(std::istream& in,
                                         std::string_view source) {
  std::vector<EncodedExample> out;
  std::string line;
  std::size_t lineno = 0;
  const std::string src(source);
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      json rec = json::parse(line);
      EncodedExample ex;
      ex.doc_id = rec.at("doc_id").get<std::string>();
      ex.gene_id = rec.at("gene_id").get<std::string>();
      ex.disease_id = rec.at("disease_id").get<std::string>();
      auto label = parse_label(rec.at("label").get<std::string>());
      if (!label) throw ParseError(src, lineno, "unknown label");
      ex.label = *label;
      ex.token_ids = rec.at("token_ids").get<std::vector<TokenId>>();
      ex.segment_ids = rec.at("segment_ids").get<std::vector<std::uint8_t>>();
      ex.truncated = rec.value("truncated", std::size_t{0});
      if (ex.token_ids.size() != ex.segment_ids.size()) {
        throw ParseError(src, lineno, "token_ids/segment_ids length mismatch");
      }
      out.push_back(std::move(ex));
    } catch (const json::exception& e) {
      throw ParseError(src, lineno, e.what());
    }
  }
  return out;
}

}  // namespace pairctx
