#ifndef PAIRCTX_TESTS_FIXTURES_H_
#define PAIRCTX_TESTS_FIXTURES_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pairctx/corpus.h"
#include "pairctx/encoder_input.h"
#include "pairctx/ner_align.h"
#include "pairctx/net.h"
#include "pairctx/trainer.h"

namespace pairctx::testing {

struct AlignmentFixture {
  CorpusStore store;
  std::vector<NerMention> ner;
};

// 44 gold positive pairs: NER recovers 24 with exact surfaces, 14 with the
// right identifiers but different surfaces, and misses an entity for 6.
AlignmentFixture alignment_audit_fixture();

// Vocabulary with the special tokens, a handful of whole words, and the
// marker tokens "mk0".."mk4" used by the separable training fixture.
Vocab toy_vocab(std::size_t filler_words = 40);

// Examples whose label is fixed by a marker token in the first segment; the
// abstract is random filler. Every class gets count / 5 examples.
std::vector<EncodedExample> separable_examples(const Vocab& vocab,
                                               std::size_t count,
                                               std::uint64_t seed);

// A document -> labels map with `docs` documents and a skewed label mix.
std::map<std::string, std::vector<Label>> skewed_doc_labels(std::size_t docs,
                                                            std::uint64_t seed);

// 2 layers, 2 heads, hidden 16, vocabulary of 50.
ModelConfig toy_model_config();

// Settings under which plain SGD fits separable_examples within 40 epochs.
TrainConfig separable_train_config();

struct GradCheck {
  std::size_t coords = 0;
  double max_rel_error = 0.0;
  std::string worst_tensor;
};

// Compares grad() against central differences of nll_loss on `coords`
// sampled scalars (at least one per tensor). Relative error is
// |a - n| / max(|a|, |n|, 1e-6).
GradCheck grad_check(const ModelParams& params, const Batch& batch,
                     std::size_t coords, std::uint64_t seed,
                     double step = 1e-4);

}  // namespace pairctx::testing

#endif  // PAIRCTX_TESTS_FIXTURES_H_
