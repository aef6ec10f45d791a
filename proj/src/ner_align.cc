#include "pairctx/ner_align.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pairctx/errors.h"
#include "pairctx/text_util.h"

namespace pairctx {

std::string_view alignment_kind_token(AlignmentKind k) {
  switch (k) {
    case AlignmentKind::kExact: return "EXACT";
    case AlignmentKind::kFuzzy: return "FUZZY";
    case AlignmentKind::kNone: return "NONE";
  }
  return "?";
}

AlignmentOutcome align_mention(const NerMention& m,
                               std::span<const EntityMention> gold) {
  if (!m.grounding_id) return {};
  const std::string surface = normalize_surface(m.surface);
  const EntityMention* fuzzy = nullptr;
  for (const auto& g : gold) {
    if (g.grounding_id != m.grounding_id) continue;
    if (normalize_surface(g.surface) == surface) {
      return {AlignmentKind::kExact, &g};
    }
    if (fuzzy == nullptr) fuzzy = &g;
  }
  if (fuzzy != nullptr) return {AlignmentKind::kFuzzy, fuzzy};
  return {};
}

std::vector<CandidatePair> generate_candidate_pairs(
    const AbstractDoc& doc, std::span<const NerMention> ner) {
  std::vector<const NerMention*> ordered;
  for (const auto& m : ner) {
    if (m.doc_id != doc.doc_id) {
      throw std::invalid_argument("mention of document " + m.doc_id +
                                  " passed with document " + doc.doc_id);
    }
    if (m.grounding_id) ordered.push_back(&m);
  }
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const NerMention* a, const NerMention* b) {
                     return a->start < b->start;
                   });

  // grounding id -> surface of its first occurrence
  std::map<std::string, std::string> genes;
  std::map<std::string, std::string> diseases;
  for (const NerMention* m : ordered) {
    auto& target = m->etype == EntityType::kGene ? genes : diseases;
    target.emplace(*m->grounding_id, m->surface);
  }

  std::vector<CandidatePair> pairs;
  pairs.reserve(genes.size() * diseases.size());
  for (const auto& [gene_id, gene_surface] : genes) {
    for (const auto& [disease_id, disease_surface] : diseases) {
      pairs.push_back(
          {doc.doc_id, gene_id, gene_surface, disease_id, disease_surface});
    }
  }
  return pairs;
}

LabeledPairs label_pairs(std::span<const CandidatePair> pairs,
                         std::span<const RelationInstance> gold_relations) {
  std::map<RelationKey, const RelationInstance*> gold;
  for (const auto& r : gold_relations) {
    auto [it, inserted] = gold.emplace(r.key(), &r);
    if (!inserted && it->second->label != r.label) {
      throw ConflictError("conflicting gold labels for (" + r.doc_id + ", " +
                          r.gene_id + ", " + r.disease_id + "): " +
                          std::string(label_token(it->second->label)) +
                          " vs " + std::string(label_token(r.label)));
    }
  }

  std::vector<CandidatePair> sorted(pairs.begin(), pairs.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::tie(a.doc_id, a.gene_id, a.disease_id) <
           std::tie(b.doc_id, b.gene_id, b.disease_id);
  });

  LabeledPairs out;
  std::set<RelationKey> covered;
  for (const auto& p : sorted) {
    RelationInstance inst{p.doc_id,          p.gene_id,    p.gene_surface,
                          p.disease_id,      p.disease_surface,
                          Label::kNoRel,     Provenance::kGeneratedNegative};
    if (auto it = gold.find(inst.key()); it != gold.end()) {
      inst.label = it->second->label;
      inst.provenance = Provenance::kGold;
      covered.insert(it->first);
    }
    out.instances.push_back(std::move(inst));
  }
  for (const auto& [key, rel] : gold) {
    if (!covered.contains(key)) out.unrecoverable.push_back(*rel);
  }
  return out;
}

namespace {

std::map<std::string, std::vector<NerMention>> group_by_doc(
    std::span<const NerMention> ner) {
  std::map<std::string, std::vector<NerMention>> by_doc;
  for (const auto& m : ner) by_doc[m.doc_id].push_back(m);
  return by_doc;
}

enum class EntityRecovery { kExact, kAligned, kMissing };

EntityRecovery recover_entity(const std::string& grounding_id,
                              const std::string& gold_surface,
                              EntityType etype,
                              std::span<const EntityMention> doc_gold_mentions,
                              std::span<const NerMention> doc_ner) {
  std::vector<EntityMention> gold;
  EntityMention from_relation;
  from_relation.surface = gold_surface;
  from_relation.etype = etype;
  from_relation.grounding_id = grounding_id;
  gold.push_back(from_relation);
  for (const auto& g : doc_gold_mentions) {
    if (g.grounding_id == grounding_id) gold.push_back(g);
  }
  EntityRecovery best = EntityRecovery::kMissing;
  for (const auto& m : doc_ner) {
    AlignmentKind k = align_mention(m, gold).kind;
    if (k == AlignmentKind::kExact) return EntityRecovery::kExact;
    if (k == AlignmentKind::kFuzzy) best = EntityRecovery::kAligned;
  }
  return best;
}

}  // namespace

LabeledPairs build_dataset(const CorpusStore& store,
                           std::span<const NerMention> ner) {
  auto by_doc = group_by_doc(ner);
  LabeledPairs out;
  for (const auto& [id, doc] : store.documents) {
    std::vector<CandidatePair> pairs;
    if (auto it = by_doc.find(id); it != by_doc.end()) {
      pairs = generate_candidate_pairs(doc, it->second);
    }
    auto gold = store.relations_for(id);
    LabeledPairs labeled = label_pairs(pairs, gold);
    std::move(labeled.instances.begin(), labeled.instances.end(),
              std::back_inserter(out.instances));
    std::move(labeled.unrecoverable.begin(), labeled.unrecoverable.end(),
              std::back_inserter(out.unrecoverable));
  }
  return out;
}

AlignmentReport alignment_report(const CorpusStore& store,
                                 std::span<const NerMention> ner,
                                 const std::set<std::string>* doc_filter) {
  auto by_doc = group_by_doc(ner);
  const std::vector<NerMention> none;
  AlignmentReport report;
  for (const auto& rel : store.gold_relations) {
    if (!is_positive(rel.label)) continue;
    if (doc_filter != nullptr && !doc_filter->contains(rel.doc_id)) continue;
    auto it = by_doc.find(rel.doc_id);
    const auto& doc_ner = it == by_doc.end() ? none : it->second;
    auto doc_gold = store.mentions_for(rel.doc_id);
    auto gene = recover_entity(rel.gene_id, rel.gene_surface,
                               EntityType::kGene, doc_gold, doc_ner);
    auto disease = recover_entity(rel.disease_id, rel.disease_surface,
                                  EntityType::kDisease, doc_gold, doc_ner);
    ++report.total_positive_pairs;
    if (gene == EntityRecovery::kMissing ||
        disease == EntityRecovery::kMissing) {
      ++report.entity_missing;
    } else if (gene == EntityRecovery::kExact &&
               disease == EntityRecovery::kExact) {
      ++report.both_exact;
    } else {
      ++report.aligned_not_exact;
    }
  }
  return report;
}

std::string alignment_report_json(const AlignmentReport& r) {
  nlohmann::ordered_json j = {{"total_positive_pairs", r.total_positive_pairs},
                              {"both_exact", r.both_exact},
                              {"aligned_not_exact", r.aligned_not_exact},
                              {"entity_missing", r.entity_missing}};
  return j.dump(2) + "\n";
}

std::vector<NerMention> read_ner_mentions(std::istream& in,
                                          std::string_view source,
                                          const CorpusStore& store) {
  std::vector<NerMention> out;
  std::string line;
  std::size_t lineno = 0;
  const std::string src(source);
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() < 5 || fields.size() > 6) {
      throw ParseError(src, lineno,
                       "expected 6 tab-separated fields, got " +
                           std::to_string(fields.size()));
    }
    const std::string& etype = fields[4];
    NerMention m;
    if (etype == "Gene") {
      m.etype = EntityType::kGene;
    } else if (etype == "Disease") {
      m.etype = EntityType::kDisease;
    } else {
      continue;
    }
    m.doc_id = fields[0];
    try {
      std::size_t pos = 0;
      long long start = std::stoll(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("start");
      long long end = std::stoll(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("end");
      if (start < 0 || end < 0) throw std::invalid_argument("negative");
      m.start = static_cast<std::size_t>(start);
      m.end = static_cast<std::size_t>(end);
    } catch (const std::logic_error&) {
      throw ParseError(src, lineno, "offsets must be non-negative integers");
    }
    m.surface = fields[3];
    if (fields.size() == 6 && !fields[5].empty() && fields[5] != "-") {
      m.grounding_id = fields[5];
    }
    const AbstractDoc* doc = store.find(m.doc_id);
    const std::string where = src + ":" + std::to_string(lineno) + ": ";
    if (doc == nullptr) {
      throw ValidationError(where + "unknown doc_id " + m.doc_id);
    }
    auto slice = utf8_slice(doc->text, m.start, m.end);
    if (m.start >= m.end || !slice) {
      throw ValidationError(where + "mention offsets out of range");
    }
    if (*slice != m.surface) {
      throw ValidationError(where + "surface '" + m.surface +
                            "' does not match document text '" +
                            std::string(*slice) + "'");
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<NerMention> load_ner_mentions(const std::filesystem::path& path,
                                          const CorpusStore& store) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_ner_mentions(in, path.string(), store);
}

void write_ner_mentions(std::span<const NerMention> ner, std::ostream& out) {
  for (const auto& m : ner) {
    out << m.doc_id << '\t' << m.start << '\t' << m.end << '\t' << m.surface
        << '\t' << (m.etype == EntityType::kGene ? "Gene" : "Disease") << '\t'
        << m.grounding_id.value_or("") << '\n';
  }
}

}  // namespace pairctx
