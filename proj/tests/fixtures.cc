#include "fixtures.h"

#include <algorithm>
#include <cmath>
#include <random>

namespace pairctx::testing {

namespace {

// Appends text pieces while remembering where named pieces start and end.
class TextBuilder {
 public:
  std::pair<std::size_t, std::size_t> add(const std::string& piece) {
    const std::size_t start = text_.size();
    text_ += piece;
    return {start, text_.size()};
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

EntityMention mention(const std::string& doc_id,
                      std::pair<std::size_t, std::size_t> span,
                      const std::string& surface, EntityType t,
                      const std::string& id) {
  return {doc_id, span.first, span.second, surface, t, id};
}

NerMention ner(const EntityMention& m) {
  NerMention out;
  static_cast<EntityMention&>(out) = m;
  return out;
}

}  // namespace

AlignmentFixture alignment_audit_fixture() {
  AlignmentFixture f;
  for (int i = 0; i < 44; ++i) {
    const std::string doc_id = std::to_string(30000000 + i);
    const std::string gene_id = "NCBIGene:" + std::to_string(100 + i);
    const std::string disease_id = "MESH:D" + std::to_string(900000 + i);
    const std::string gene_gold = "GENE" + std::to_string(i);
    const std::string gene_alt = "GENE-" + std::to_string(i);
    const std::string dis_gold = "disease " + std::to_string(i) + " syndrome";
    const std::string dis_alt = "syndrome " + std::to_string(i);
    const std::string noise = "NOISE" + std::to_string(i);

    TextBuilder tb;
    auto g_gold = tb.add(gene_gold);
    tb.add(" (");
    auto g_alt = tb.add(gene_alt);
    tb.add(") mutations cause ");
    auto d_gold = tb.add(dis_gold);
    tb.add(", also called ");
    auto d_alt = tb.add(dis_alt);
    tb.add(", in carriers of ");
    auto n_span = tb.add(noise);
    tb.add(".");
    f.store.documents.emplace(doc_id, AbstractDoc{doc_id, tb.text(), 0});

    const auto gold_gene =
        mention(doc_id, g_gold, gene_gold, EntityType::kGene, gene_id);
    const auto gold_dis =
        mention(doc_id, d_gold, dis_gold, EntityType::kDisease, disease_id);
    f.store.gold_mentions.push_back(gold_gene);
    f.store.gold_mentions.push_back(gold_dis);
    static constexpr Label kCycle[] = {Label::kLof, Label::kGof, Label::kReg,
                                       Label::kCom};
    f.store.gold_relations.push_back({doc_id, gene_id, gene_gold, disease_id,
                                      dis_gold, kCycle[i % 4],
                                      Provenance::kGold});

    const auto alt_gene =
        ner(mention(doc_id, g_alt, gene_alt, EntityType::kGene, gene_id));
    const auto alt_dis =
        ner(mention(doc_id, d_alt, dis_alt, EntityType::kDisease, disease_id));
    f.ner.push_back(ner(mention(doc_id, n_span, noise, EntityType::kGene,
                                "NCBIGene:" + std::to_string(9000 + i))));
    if (i < 24) {
      f.ner.push_back(ner(gold_gene));
      f.ner.push_back(ner(gold_dis));
      // A second, non-exact mention of an exactly matched entity.
      if (i % 3 == 0) f.ner.push_back(alt_gene);
    } else if (i < 38) {
      switch (i % 3) {
        case 0: f.ner.push_back(alt_gene); f.ner.push_back(ner(gold_dis)); break;
        case 1: f.ner.push_back(ner(gold_gene)); f.ner.push_back(alt_dis); break;
        default: f.ner.push_back(alt_gene); f.ner.push_back(alt_dis); break;
      }
    } else if (i < 41) {
      f.ner.push_back(ner(gold_dis));  // gene not found
    } else if (i < 43) {
      f.ner.push_back(ner(gold_gene));  // disease not found
    } else {
      // Gene found by surface but linked to the wrong identifier.
      NerMention wrong = ner(gold_gene);
      wrong.grounding_id = "NCBIGene:1";
      f.ner.push_back(wrong);
      f.ner.push_back(ner(gold_dis));
    }
  }
  return f;
}

Vocab toy_vocab(std::size_t filler_words) {
  std::vector<std::string> tokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  for (int k = 0; k < 5; ++k) tokens.push_back("mk" + std::to_string(k));
  for (std::size_t w = 0; w < filler_words; ++w) {
    tokens.push_back("w" + std::to_string(w));
  }
  tokens.push_back(".");
  return Vocab::from_tokens(std::move(tokens));
}

std::vector<EncodedExample> separable_examples(const Vocab& vocab,
                                               std::size_t count,
                                               std::uint64_t seed) {
  std::size_t fillers = 0;
  while (vocab.contains("w" + std::to_string(fillers))) ++fillers;
  std::mt19937_64 rng(seed);
  auto filler = [&] { return "w" + std::to_string(rng() % fillers); };
  std::vector<EncodedExample> out;
  for (std::size_t i = 0; i < count; ++i) {
    const Label label = label_from_index(static_cast<int>(i % kNumLabels));
    const std::string marker = "mk" + std::to_string(label_index(label));
    std::string abstract;
    const std::size_t words = 3 + rng() % 4;
    for (std::size_t w = 0; w < words; ++w) abstract += filler() + " ";
    abstract += ".";
    EncodedExample ex = build_sequence(marker, filler(), abstract, vocab);
    ex.label = label;
    ex.doc_id = "doc" + std::to_string(i);
    ex.gene_id = marker;
    ex.disease_id = "d" + std::to_string(i);
    out.push_back(std::move(ex));
  }
  return out;
}

std::map<std::string, std::vector<Label>> skewed_doc_labels(
    std::size_t docs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> draw({0.90, 0.03, 0.03, 0.025, 0.015});
  std::map<std::string, std::vector<Label>> out;
  for (std::size_t d = 0; d < docs; ++d) {
    auto& labels = out[std::to_string(20000 + d)];
    const std::size_t n = rng() % 9;
    for (std::size_t k = 0; k < n; ++k) {
      labels.push_back(label_from_index(draw(rng)));
    }
  }
  return out;
}

ModelConfig toy_model_config() {
  ModelConfig cfg;
  cfg.num_layers = 2;
  cfg.num_heads = 2;
  cfg.hidden_dim = 16;
  cfg.ffn_dim = 32;
  cfg.vocab_size = 50;
  return cfg;
}

TrainConfig separable_train_config() {
  TrainConfig cfg;
  cfg.learning_rate = 0.03;
  cfg.classifier_dropout = 0.0;
  cfg.criterion = StoppingCriterion::kMacroF1Pos;
  return cfg;
}

GradCheck grad_check(const ModelParams& params, const Batch& batch,
                     std::size_t coords, std::uint64_t seed, double step) {
  const GradResult analytic = grad(params, batch);
  ModelParams probe = params;
  auto views = probe.tensors();
  auto grads = analytic.grad.tensors();
  std::mt19937_64 rng(seed);
  GradCheck out;
  // Cover every tensor, then spread the rest uniformly over scalars.
  for (std::size_t k = 0; k < std::max(coords, views.size()); ++k) {
    std::size_t t = k < views.size() ? k : rng() % views.size();
    if (k >= views.size()) {
      // Weight tensors by size so large matrices get their share.
      std::size_t r = rng() % probe.num_scalars();
      for (t = 0; r >= static_cast<std::size_t>(views[t].value->size()); ++t) {
        r -= views[t].value->size();
      }
    }
    Matrix& m = *views[t].value;
    const std::size_t i = rng() % m.size();
    double& x = m.data()[i];
    const double saved = x;
    x = saved + step;
    const double up = nll_loss(forward(probe, batch), batch.labels);
    x = saved - step;
    const double down = nll_loss(forward(probe, batch), batch.labels);
    x = saved;
    const double numeric = (up - down) / (2 * step);
    const double a = grads[t].value->data()[i];
    const double scale = std::max({std::abs(a), std::abs(numeric), 1e-6});
    const double rel = std::abs(a - numeric) / scale;
    if (rel > out.max_rel_error) {
      out.max_rel_error = rel;
      out.worst_tensor = views[t].name;
    }
    ++out.coords;
  }
  return out;
}

}  // namespace pairctx::testing
