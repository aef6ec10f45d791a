#ifndef PAIRCTX_SPLITTER_H_
#define PAIRCTX_SPLITTER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairctx/corpus.h"
#include "pairctx/label.h"

namespace pairctx {

// Probability per label, indexed by label_index(). Always sums to 1.
class LabelDistribution {
 public:
  // Throws std::invalid_argument unless every entry is in [0,1] and the sum
  // is 1 within 1e-9.
  explicit LabelDistribution(const std::array<double, kNumLabels>& p);

  // Rescales nonnegative weights to sum to 1.
  static LabelDistribution normalized(
      const std::array<double, kNumLabels>& weights);

  double operator[](Label l) const { return p_[label_index(l)]; }
  const std::array<double, kNumLabels>& probabilities() const { return p_; }

 private:
  std::array<double, kNumLabels> p_;
};

// Throws std::invalid_argument on an empty input.
LabelDistribution label_distribution(std::span<const Label> labels);
LabelDistribution label_distribution(
    std::span<const RelationInstance> instances);

double entropy_bits(const LabelDistribution& d);

// D(p || q) in bits. Throws std::domain_error when q is zero somewhere p is
// not.
double kl_divergence_bits(const LabelDistribution& p,
                          const LabelDistribution& q);

struct SplitOptions {
  double ratio = 0.8;
  std::uint64_t max_seed_trials = 10000;
  double kl_threshold_bits = 0.02;
};

struct Split {
  std::set<std::string> train_doc_ids;
  std::set<std::string> dev_doc_ids;
  std::uint64_t seed_used = 0;
  double kl_bits = 0.0;

  bool operator==(const Split&) const = default;
};

// Document-level train/dev split. For seed = 0, 1, ... the sorted doc ids are
// shuffled and the first floor(ratio * n) go to train. Seeds leaving a train
// label absent from dev are skipped. Returns the first seed whose
// D(train || dev) is within the threshold, otherwise the seed with the
// smallest divergence. Documents without instances still take part.
Split split_corpus(const std::map<std::string, std::vector<Label>>& doc_labels,
                   const SplitOptions& options = {});

// Groups instance labels by document; every store document gets an entry.
std::map<std::string, std::vector<Label>> labels_by_document(
    const CorpusStore& store, std::span<const RelationInstance> instances);

// "# seed_used=<n>\tkl_bits=<x.xxxxxx>" then "train|dev\t<doc_id>" lines.
void write_split_manifest(const Split& split, std::ostream& out);
Split read_split_manifest(std::istream& in, std::string_view source);

}  // namespace pairctx

#endif  // PAIRCTX_SPLITTER_H_
