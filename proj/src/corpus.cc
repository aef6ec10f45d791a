#include "pairctx/corpus.h"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "json.hpp"
#include "pairctx/errors.h"
#include "pairctx/text_util.h"

namespace pairctx {

using nlohmann::json;

namespace {

std::string utf8_prefix(const std::string& text, std::size_t code_points) {
  auto b = utf8_boundaries(text);
  return text.substr(0, b[std::min(code_points, b.size() - 1)]);
}

const json& require(const json& obj, const char* key, std::string_view source,
                    std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(std::string(source), line,
                     std::string("missing key '") + key + "'");
  }
  return *it;
}

std::string require_string(const json& obj, const char* key,
                           std::string_view source, std::size_t line) {
  const json& v = require(obj, key, source, line);
  if (!v.is_string()) {
    throw ParseError(std::string(source), line,
                     std::string("key '") + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::size_t require_offset(const json& obj, const char* key,
                           std::string_view source, std::size_t line) {
  const json& v = require(obj, key, source, line);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw ParseError(std::string(source), line,
                     std::string("key '") + key +
                         "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

// Parses each non-blank line as a JSON object and hands it to `fn`.
template <typename Fn>
void for_each_record(std::istream& in, std::string_view source, Fn&& fn) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string(source), lineno, e.what());
    }
    if (!rec.is_object()) {
      throw ParseError(std::string(source), lineno, "record is not an object");
    }
    fn(rec, lineno);
  }
}

std::ifstream open_input(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + p.string());
  return out;
}

}  // namespace

std::string_view entity_type_token(EntityType t) {
  return t == EntityType::kGene ? "GENE" : "DISEASE";
}

std::optional<EntityType> parse_entity_type(std::string_view token) {
  if (token == "GENE") return EntityType::kGene;
  if (token == "DISEASE") return EntityType::kDisease;
  return std::nullopt;
}

std::string_view provenance_token(Provenance p) {
  return p == Provenance::kGold ? "GOLD" : "GENERATED_NEGATIVE";
}

std::optional<Provenance> parse_provenance(std::string_view token) {
  if (token == "GOLD") return Provenance::kGold;
  if (token == "GENERATED_NEGATIVE") return Provenance::kGeneratedNegative;
  return std::nullopt;
}

std::string AbstractDoc::title() const {
  if (title_length == 0) return {};
  return utf8_prefix(text, title_length - 1);
}

std::string AbstractDoc::body() const {
  return text.substr(utf8_prefix(text, title_length).size());
}

std::string AbstractDoc::encoding_text(bool include_title) const {
  return include_title ? text : body();
}

const AbstractDoc* CorpusStore::find(std::string_view doc_id) const {
  auto it = documents.find(std::string(doc_id));
  return it == documents.end() ? nullptr : &it->second;
}

std::vector<EntityMention> CorpusStore::mentions_for(
    std::string_view doc_id) const {
  std::vector<EntityMention> out;
  for (const auto& m : gold_mentions) {
    if (m.doc_id == doc_id) out.push_back(m);
  }
  return out;
}

std::vector<RelationInstance> CorpusStore::relations_for(
    std::string_view doc_id) const {
  std::vector<RelationInstance> out;
  for (const auto& r : gold_relations) {
    if (r.doc_id == doc_id) out.push_back(r);
  }
  return out;
}

CorpusStore read_corpus(std::istream& in, std::string_view source) {
  CorpusStore store;
  for_each_record(in, source, [&](const json& rec, std::size_t line) {
    AbstractDoc doc;
    doc.doc_id = require_string(rec, "doc_id", source, line);
    std::string body = require_string(rec, "text", source, line);
    std::string title;
    if (auto it = rec.find("title"); it != rec.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw ParseError(std::string(source), line,
                         "key 'title' must be a string");
      }
      title = it->get<std::string>();
    }
    if (doc.doc_id.empty()) {
      throw ValidationError(std::string(source) + ":" + std::to_string(line) +
                            ": empty doc_id");
    }
    if (!title.empty() && !body.empty()) {
      doc.text = title + " " + body;
      doc.title_length = utf8_length(title) + 1;
    } else {
      doc.text = title.empty() ? body : title;
    }
    if (doc.text.empty()) {
      throw ValidationError(std::string(source) + ":" + std::to_string(line) +
                            ": document " + doc.doc_id + " has empty text");
    }
    std::string id = doc.doc_id;
    if (!store.documents.emplace(id, std::move(doc)).second) {
      throw ValidationError(std::string(source) + ":" + std::to_string(line) +
                            ": duplicate doc_id " + id);
    }
  });
  return store;
}

void read_annotations(std::istream& in, std::string_view source,
                      CorpusStore& store) {
  std::set<std::string> seen_docs;
  std::set<RelationKey> seen_keys;
  for (const auto& r : store.gold_relations) seen_keys.insert(r.key());

  for_each_record(in, source, [&](const json& rec, std::size_t line) {
    auto where = [&] {
      return std::string(source) + ":" + std::to_string(line) + ": ";
    };
    std::string doc_id = require_string(rec, "doc_id", source, line);
    const AbstractDoc* doc = store.find(doc_id);
    if (doc == nullptr) {
      throw ValidationError(where() + "annotations reference unknown doc_id " +
                            doc_id);
    }
    if (!seen_docs.insert(doc_id).second) {
      throw ValidationError(where() + "duplicate annotation record for " +
                            doc_id);
    }
    const std::size_t text_len = utf8_length(doc->text);

    if (auto it = rec.find("mentions"); it != rec.end()) {
      if (!it->is_array()) {
        throw ParseError(std::string(source), line, "'mentions' must be a list");
      }
      for (const json& m : *it) {
        EntityMention em;
        em.doc_id = doc_id;
        em.start = require_offset(m, "start", source, line);
        em.end = require_offset(m, "end", source, line);
        em.surface = require_string(m, "surface", source, line);
        auto etype = parse_entity_type(require_string(m, "etype", source, line));
        if (!etype) {
          throw ParseError(std::string(source), line,
                           "etype must be GENE or DISEASE");
        }
        em.etype = *etype;
        if (auto g = m.find("grounding_id");
            g != m.end() && g->is_string() && !g->get<std::string>().empty()) {
          em.grounding_id = g->get<std::string>();
        }
        if (!(em.start < em.end && em.end <= text_len)) {
          throw ValidationError(where() + "mention offsets [" +
                                std::to_string(em.start) + "," +
                                std::to_string(em.end) +
                                ") out of range for text of length " +
                                std::to_string(text_len));
        }
        if (*utf8_slice(doc->text, em.start, em.end) != em.surface) {
          throw ValidationError(where() + "mention surface '" + em.surface +
                                "' does not match document text");
        }
        store.gold_mentions.push_back(std::move(em));
      }
    }

    if (auto it = rec.find("relations"); it != rec.end()) {
      if (!it->is_array()) {
        throw ParseError(std::string(source), line,
                         "'relations' must be a list");
      }
      for (const json& r : *it) {
        RelationInstance ri;
        ri.doc_id = doc_id;
        ri.gene_id = require_string(r, "gene_id", source, line);
        ri.gene_surface = require_string(r, "gene_surface", source, line);
        ri.disease_id = require_string(r, "disease_id", source, line);
        ri.disease_surface = require_string(r, "disease_surface", source, line);
        std::string token = require_string(r, "label", source, line);
        auto label = parse_label(token);
        if (!label) {
          throw ParseError(std::string(source), line,
                           "unknown label '" + token + "'");
        }
        if (!is_positive(*label)) {
          throw ValidationError(where() +
                                "gold relations must carry LOF|GOF|REG|COM");
        }
        if (ri.gene_id.empty() || ri.disease_id.empty()) {
          throw ValidationError(where() + "relation with empty grounding id");
        }
        ri.label = *label;
        ri.provenance = Provenance::kGold;
        if (!seen_keys.insert(ri.key()).second) {
          throw ValidationError(where() + "duplicate relation key (" +
                                ri.gene_id + ", " + ri.disease_id + ")");
        }
        store.gold_relations.push_back(std::move(ri));
      }
    }
  });
  // Canonical order: grouped by document, file order within a document.
  auto by_doc = [](const auto& a, const auto& b) { return a.doc_id < b.doc_id; };
  std::stable_sort(store.gold_mentions.begin(), store.gold_mentions.end(),
                   by_doc);
  std::stable_sort(store.gold_relations.begin(), store.gold_relations.end(),
                   by_doc);
}

CorpusStore load_corpus(
    const std::filesystem::path& corpus_path,
    const std::optional<std::filesystem::path>& annotations_path) {
  auto in = open_input(corpus_path);
  CorpusStore store = read_corpus(in, corpus_path.string());
  if (annotations_path) {
    auto ann = open_input(*annotations_path);
    read_annotations(ann, annotations_path->string(), store);
  }
  return store;
}

void write_documents(const CorpusStore& store, std::ostream& out) {
  for (const auto& [id, doc] : store.documents) {
    json rec = json::object();
    rec["doc_id"] = id;
    if (doc.title_length > 0) rec["title"] = doc.title();
    rec["text"] = doc.body();
    out << rec.dump() << '\n';
  }
}

void write_annotations(const CorpusStore& store, std::ostream& out) {
  for (const auto& [id, doc] : store.documents) {
    auto mentions = store.mentions_for(id);
    auto relations = store.relations_for(id);
    if (mentions.empty() && relations.empty()) continue;
    json rec = json::object();
    rec["doc_id"] = id;
    rec["mentions"] = json::array();
    for (const auto& m : mentions) {
      rec["mentions"].push_back(
          {{"start", m.start},
           {"end", m.end},
           {"surface", m.surface},
           {"etype", entity_type_token(m.etype)},
           {"grounding_id", m.grounding_id ? json(*m.grounding_id) : json()}});
    }
    rec["relations"] = json::array();
    for (const auto& r : relations) {
      rec["relations"].push_back({{"gene_id", r.gene_id},
                                  {"gene_surface", r.gene_surface},
                                  {"disease_id", r.disease_id},
                                  {"disease_surface", r.disease_surface},
                                  {"label", label_token(r.label)}});
    }
    out << rec.dump() << '\n';
  }
}

void write_corpus(const CorpusStore& store,
                  const std::filesystem::path& corpus_path,
                  const std::filesystem::path& annotations_path) {
  auto docs = open_output(corpus_path);
  write_documents(store, docs);
  auto ann = open_output(annotations_path);
  write_annotations(store, ann);
}

std::vector<Violation> validate_instance(const RelationInstance& inst,
                                         const CorpusStore& store) {
  std::vector<Violation> out;
  if (store.find(inst.doc_id) == nullptr) {
    out.push_back({ViolationKind::kUnknownDocument,
                   "unknown doc_id '" + inst.doc_id + "'"});
  }
  if (inst.gene_id.empty() || inst.disease_id.empty()) {
    out.push_back({ViolationKind::kEmptyIdentifier,
                   "gene and disease grounding ids must be non-empty"});
  }
  if (inst.provenance == Provenance::kGeneratedNegative &&
      inst.label != Label::kNoRel) {
    out.push_back({ViolationKind::kProvenance,
                   "generated negative carries label " +
                       std::string(label_token(inst.label))});
  }
  if (inst.provenance == Provenance::kGold && inst.label == Label::kNoRel) {
    out.push_back(
        {ViolationKind::kGoldNegative, "gold instance carries NO_REL"});
  }
  const RelationKey key = inst.key();
  for (const auto& r : store.gold_relations) {
    if (r.key() == key) {
      out.push_back({ViolationKind::kDuplicateKey,
                     "key (" + key.doc_id + ", " + key.gene_id + ", " +
                         key.disease_id + ") already present"});
      break;
    }
  }
  return out;
}

std::vector<Violation> validate_dataset(
    std::span<const RelationInstance> instances, const CorpusStore& store) {
  std::vector<Violation> out;
  std::set<RelationKey> seen;
  CorpusStore docs_only;
  docs_only.documents = store.documents;
  for (const auto& inst : instances) {
    auto v = validate_instance(inst, docs_only);
    out.insert(out.end(), v.begin(), v.end());
    if (!seen.insert(inst.key()).second) {
      out.push_back({ViolationKind::kDuplicateKey,
                     "key (" + inst.doc_id + ", " + inst.gene_id + ", " +
                         inst.disease_id + ") repeated in dataset"});
    }
  }
  return out;
}

void write_instances(std::span<const RelationInstance> instances,
                     std::ostream& out) {
  for (const auto& r : instances) {
    json rec = {{"doc_id", r.doc_id},
                {"gene_id", r.gene_id},
                {"gene_surface", r.gene_surface},
                {"disease_id", r.disease_id},
                {"disease_surface", r.disease_surface},
                {"label", label_token(r.label)},
                {"provenance", provenance_token(r.provenance)}};
    out << rec.dump() << '\n';
  }
}

std::vector<RelationInstance> read_instances(std::istream& in,
                                             std::string_view source) {
  std::vector<RelationInstance> out;
  for_each_record(in, source, [&](const json& rec, std::size_t line) {
    RelationInstance r;
    r.doc_id = require_string(rec, "doc_id", source, line);
    r.gene_id = require_string(rec, "gene_id", source, line);
    r.gene_surface = require_string(rec, "gene_surface", source, line);
    r.disease_id = require_string(rec, "disease_id", source, line);
    r.disease_surface = require_string(rec, "disease_surface", source, line);
    auto label = parse_label(require_string(rec, "label", source, line));
    auto prov = parse_provenance(require_string(rec, "provenance", source, line));
    if (!label || !prov) {
      throw ParseError(std::string(source), line, "bad label or provenance");
    }
    r.label = *label;
    r.provenance = *prov;
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace pairctx
