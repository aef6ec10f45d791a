#ifndef PAIRCTX_CORPUS_H_
#define PAIRCTX_CORPUS_H_

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairctx/label.h"

namespace pairctx {

enum class EntityType { kGene, kDisease };

std::string_view entity_type_token(EntityType t);  // "GENE" / "DISEASE"
std::optional<EntityType> parse_entity_type(std::string_view token);

// One abstract. `text` is the title and body joined by a single space when a
// title exists; `title_length` is the number of code points of that prefix
// including the joining space (0 without a title).
struct AbstractDoc {
  std::string doc_id;
  std::string text;
  std::size_t title_length = 0;

  std::string title() const;
  std::string body() const;
  // Text handed to the encoder.
  std::string encoding_text(bool include_title) const;

  bool operator==(const AbstractDoc&) const = default;
};

// A typed span inside one abstract. Offsets are code point offsets into
// AbstractDoc::text, end exclusive.
struct EntityMention {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string surface;
  EntityType etype = EntityType::kGene;
  std::optional<std::string> grounding_id;

  bool operator==(const EntityMention&) const = default;
};

enum class Provenance { kGold, kGeneratedNegative };

std::string_view provenance_token(Provenance p);
std::optional<Provenance> parse_provenance(std::string_view token);

struct RelationKey {
  std::string doc_id;
  std::string gene_id;
  std::string disease_id;

  auto operator<=>(const RelationKey&) const = default;
};

struct RelationInstance {
  std::string doc_id;
  std::string gene_id;
  std::string gene_surface;
  std::string disease_id;
  std::string disease_surface;
  Label label = Label::kNoRel;
  Provenance provenance = Provenance::kGold;

  RelationKey key() const { return {doc_id, gene_id, disease_id}; }
  bool operator==(const RelationInstance&) const = default;
};

// Abstracts plus their gold annotations. Treated as immutable once loaded.
struct CorpusStore {
  std::map<std::string, AbstractDoc> documents;
  std::vector<EntityMention> gold_mentions;
  std::vector<RelationInstance> gold_relations;

  const AbstractDoc* find(std::string_view doc_id) const;
  std::vector<EntityMention> mentions_for(std::string_view doc_id) const;
  std::vector<RelationInstance> relations_for(std::string_view doc_id) const;

  bool operator==(const CorpusStore&) const = default;
};

// Loads the document file and, optionally, the annotation file. Throws
// ParseError (with line number) for malformed records and ValidationError for
// duplicate doc ids, unknown doc references and out-of-range offsets.
CorpusStore load_corpus(const std::filesystem::path& corpus_path,
                        const std::optional<std::filesystem::path>&
                            annotations_path = std::nullopt);

// Stream variants; `source` names the input in error messages.
CorpusStore read_corpus(std::istream& corpus, std::string_view source);
void read_annotations(std::istream& in, std::string_view source,
                      CorpusStore& store);

void write_corpus(const CorpusStore& store,
                  const std::filesystem::path& corpus_path,
                  const std::filesystem::path& annotations_path);
void write_documents(const CorpusStore& store, std::ostream& out);
void write_annotations(const CorpusStore& store, std::ostream& out);

enum class ViolationKind {
  kUnknownDocument,
  kEmptyIdentifier,
  kProvenance,      // generated negative with a positive label
  kGoldNegative,    // gold provenance with NO_REL
  kDuplicateKey,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

// Checks `inst` against the store as if it were about to be added to it:
// duplicate keys are reported relative to store.gold_relations. An empty
// result means the instance is valid.
std::vector<Violation> validate_instance(const RelationInstance& inst,
                                         const CorpusStore& store);

// Validates every instance of a dataset, including key uniqueness across the
// dataset itself.
std::vector<Violation> validate_dataset(
    std::span<const RelationInstance> instances, const CorpusStore& store);

// Relation datasets (one JSON object per line).
void write_instances(std::span<const RelationInstance> instances,
                     std::ostream& out);
std::vector<RelationInstance> read_instances(std::istream& in,
                                             std::string_view source);

}  // namespace pairctx

#endif  // PAIRCTX_CORPUS_H_
