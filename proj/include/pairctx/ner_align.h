#ifndef PAIRCTX_NER_ALIGN_H_
#define PAIRCTX_NER_ALIGN_H_

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairctx/corpus.h"

namespace pairctx {

// A mention produced by an external NER + entity linking tool.
struct NerMention : EntityMention {
  static constexpr std::string_view kSource = "EXTERNAL_NER";
};

enum class AlignmentKind { kExact, kFuzzy, kNone };

std::string_view alignment_kind_token(AlignmentKind k);

struct AlignmentOutcome {
  AlignmentKind kind = AlignmentKind::kNone;
  // Points into the gold span passed to align_mention; null iff kind is kNone.
  const EntityMention* matched_gold = nullptr;
};

// EXACT: some gold mention has the same grounding id and the same surface
// after normalize_surface(). FUZZY: same grounding id only. Mentions without
// a grounding id never align.
AlignmentOutcome align_mention(const NerMention& m,
                               std::span<const EntityMention> gold);

// A distinct (gene id, disease id) combination found by NER in one document.
// Surfaces are those of the first mention of each id in document order.
struct CandidatePair {
  std::string doc_id;
  std::string gene_id;
  std::string gene_surface;
  std::string disease_id;
  std::string disease_surface;

  bool operator==(const CandidatePair&) const = default;
};

// Pairs are returned sorted by (gene_id, disease_id). Mentions without a
// grounding id are ignored. Throws std::invalid_argument if a mention belongs
// to another document.
std::vector<CandidatePair> generate_candidate_pairs(
    const AbstractDoc& doc, std::span<const NerMention> ner);

struct LabeledPairs {
  std::vector<RelationInstance> instances;
  // Gold triples no candidate pair covers; excluded from the dataset.
  std::vector<RelationInstance> unrecoverable;
};

// Pairs matching a gold (gene_id, disease_id) key take its label with GOLD
// provenance; everything else becomes NO_REL / GENERATED_NEGATIVE. Throws
// ConflictError when two gold triples share a key with different labels.
LabeledPairs label_pairs(std::span<const CandidatePair> pairs,
                         std::span<const RelationInstance> gold_relations);

// Runs candidate generation and labeling over every document of the store,
// in doc id order.
LabeledPairs build_dataset(const CorpusStore& store,
                           std::span<const NerMention> ner);

struct AlignmentReport {
  std::size_t total_positive_pairs = 0;
  std::size_t both_exact = 0;
  std::size_t aligned_not_exact = 0;
  std::size_t entity_missing = 0;

  bool operator==(const AlignmentReport&) const = default;
};

// Buckets every gold positive pair by how well NER recovered its two
// entities. When `doc_filter` is given only those documents are audited.
AlignmentReport alignment_report(
    const CorpusStore& store, std::span<const NerMention> ner,
    const std::set<std::string>* doc_filter = nullptr);

std::string alignment_report_json(const AlignmentReport& r);

// Tab-separated NER export: doc_id, start, end, surface, etype, grounding_id.
// etype is `Gene` or `Disease`; rows with other entity types are skipped.
// An empty or "-" grounding id means none. Spans are validated against the
// store's documents.
std::vector<NerMention> read_ner_mentions(std::istream& in,
                                          std::string_view source,
                                          const CorpusStore& store);
std::vector<NerMention> load_ner_mentions(const std::filesystem::path& path,
                                          const CorpusStore& store);
void write_ner_mentions(std::span<const NerMention> ner, std::ostream& out);

}  // namespace pairctx

#endif  // PAIRCTX_NER_ALIGN_H_
