#ifndef PAIRCTX_METRICS_H_
#define PAIRCTX_METRICS_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "pairctx/label.h"
#include "pairctx/splitter.h"

namespace pairctx {

// One-vs-all counts, indexed by label_index().
struct ClassCounts {
  std::array<std::size_t, kNumLabels> tp{};
  std::array<std::size_t, kNumLabels> fp{};
  std::array<std::size_t, kNumLabels> fn{};
  std::array<std::size_t, kNumLabels> support{};  // tp + fn
};

// Throws std::invalid_argument when the lists differ in length or are empty.
ClassCounts confusion_counts(std::span<const Label> preds,
                             std::span<const Label> golds);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Any 0/0 ratio is taken as 0.
Prf prf(std::size_t tp, std::size_t fp, std::size_t fn);

// Unweighted mean of each column.
Prf macro_average(std::span<const Prf> rows);

struct MetricsReport {
  std::array<Prf, kNumLabels> per_class{};
  std::array<std::size_t, kNumLabels> support{};
  Prf micro_all;
  Prf macro_all;
  Prf micro_pos;  // restricted to LOF, GOF, REG, COM
  Prf macro_pos;

  const Prf& operator[](Label l) const { return per_class[label_index(l)]; }
};

MetricsReport metrics_report(std::span<const Label> preds,
                             std::span<const Label> golds);

// Categorical sampling baseline: each run draws one label per dev instance
// from `train_dist`; returned values are the per-cell mean over runs. Run r
// uses its own generator seeded from (seed, r).
MetricsReport random_baseline(const LabelDistribution& train_dist,
                              std::span<const Label> dev_golds,
                              std::size_t n_runs = 1000,
                              std::uint64_t seed = 0);

// Tab-separated table in the row order No rel, REG, COM, LOF, GOF,
// Micro-all, Macro-all, Micro-pos, Macro-pos; values rounded to 3 decimals.
std::string format_report_table(const MetricsReport& r);

// Full-precision JSON rendering.
std::string format_report_json(const MetricsReport& r);

}  // namespace pairctx

#endif  // PAIRCTX_METRICS_H_
