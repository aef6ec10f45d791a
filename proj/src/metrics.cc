#include "pairctx/metrics.h"

#include <cstdio>
#include <random>
#include <stdexcept>
#include <vector>

#include "json.hpp"

namespace pairctx {

ClassCounts confusion_counts(std::span<const Label> preds,
                             std::span<const Label> golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("predictions and golds differ in length: " +
                                std::to_string(preds.size()) + " vs " +
                                std::to_string(golds.size()));
  }
  if (preds.empty()) throw std::invalid_argument("no predictions");
  ClassCounts c;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const int p = label_index(preds[i]);
    const int g = label_index(golds[i]);
    ++c.support[g];
    if (p == g) {
      ++c.tp[g];
    } else {
      ++c.fp[p];
      ++c.fn[g];
    }
  }
  return c;
}

Prf prf(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf r;
  if (tp + fp > 0) r.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) r.recall = static_cast<double>(tp) / (tp + fn);
  // Same value as the harmonic mean of P and R, computed from the counts so
  // that P == R gives F1 == P bit for bit.
  if (tp > 0) r.f1 = static_cast<double>(2 * tp) / (2 * tp + fp + fn);
  return r;
}

Prf macro_average(std::span<const Prf> rows) {
  Prf m;
  if (rows.empty()) return m;
  for (const auto& r : rows) {
    m.precision += r.precision;
    m.recall += r.recall;
    m.f1 += r.f1;
  }
  const double n = static_cast<double>(rows.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

namespace {

template <std::size_t N>
void aggregate(const ClassCounts& c, const std::array<Label, N>& labels,
               const std::array<Prf, kNumLabels>& per_class, Prf& micro,
               Prf& macro) {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::array<Prf, N> rows;
  for (std::size_t i = 0; i < N; ++i) {
    const int k = label_index(labels[i]);
    tp += c.tp[k];
    fp += c.fp[k];
    fn += c.fn[k];
    rows[i] = per_class[k];
  }
  micro = prf(tp, fp, fn);
  macro = macro_average(rows);
}

void accumulate(Prf& sum, const Prf& x) {
  sum.precision += x.precision;
  sum.recall += x.recall;
  sum.f1 += x.f1;
}

void scale(Prf& x, double s) {
  x.precision *= s;
  x.recall *= s;
  x.f1 *= s;
}

}  // namespace

MetricsReport metrics_report(std::span<const Label> preds,
                             std::span<const Label> golds) {
  const ClassCounts c = confusion_counts(preds, golds);
  MetricsReport r;
  for (std::size_t k = 0; k < kNumLabels; ++k) {
    r.per_class[k] = prf(c.tp[k], c.fp[k], c.fn[k]);
    r.support[k] = c.support[k];
  }
  aggregate(c, kAllLabels, r.per_class, r.micro_all, r.macro_all);
  aggregate(c, kPositiveLabels, r.per_class, r.micro_pos, r.macro_pos);
  return r;
}

MetricsReport random_baseline(const LabelDistribution& train_dist,
                              std::span<const Label> dev_golds,
                              std::size_t n_runs, std::uint64_t seed) {
  if (dev_golds.empty()) throw std::invalid_argument("empty dev set");
  if (n_runs == 0) throw std::invalid_argument("n_runs must be positive");
  const auto& p = train_dist.probabilities();
  std::discrete_distribution<int> draw(p.begin(), p.end());

  MetricsReport mean;
  std::vector<Label> preds(dev_golds.size());
  for (std::size_t run = 0; run < n_runs; ++run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run)};
    std::mt19937_64 rng(seq);
    draw.reset();
    for (auto& l : preds) l = label_from_index(draw(rng));
    const MetricsReport r = metrics_report(preds, dev_golds);
    for (std::size_t k = 0; k < kNumLabels; ++k) {
      accumulate(mean.per_class[k], r.per_class[k]);
    }
    accumulate(mean.micro_all, r.micro_all);
    accumulate(mean.macro_all, r.macro_all);
    accumulate(mean.micro_pos, r.micro_pos);
    accumulate(mean.macro_pos, r.macro_pos);
    mean.support = r.support;
  }
  const double s = 1.0 / static_cast<double>(n_runs);
  for (auto& row : mean.per_class) scale(row, s);
  scale(mean.micro_all, s);
  scale(mean.macro_all, s);
  scale(mean.micro_pos, s);
  scale(mean.macro_pos, s);
  return mean;
}

std::string format_report_table(const MetricsReport& r) {
  std::string out = "\tP\tR\tF1\tSupport\n";
  char buf[160];
  auto row = [&](std::string_view name, const Prf& v, const std::string& supp) {
    std::snprintf(buf, sizeof(buf), "%.*s\t%.3f\t%.3f\t%.3f\t%s\n",
                  static_cast<int>(name.size()), name.data(), v.precision,
                  v.recall, v.f1, supp.c_str());
    out += buf;
  };
  for (Label l : kReportOrder) {
    row(label_caption(l), r[l], std::to_string(r.support[label_index(l)]));
  }
  row("Micro-all", r.micro_all, "");
  row("Macro-all", r.macro_all, "");
  row("Micro-pos", r.micro_pos, "");
  row("Macro-pos", r.macro_pos, "");
  return out;
}

std::string format_report_json(const MetricsReport& r) {
  using nlohmann::ordered_json;
  auto cell = [](const Prf& v) {
    return ordered_json{{"P", v.precision}, {"R", v.recall}, {"F1", v.f1}};
  };
  ordered_json j;
  ordered_json per_class = ordered_json::object();
  for (Label l : kReportOrder) {
    ordered_json c = cell(r[l]);
    c["support"] = r.support[label_index(l)];
    per_class[std::string(label_token(l))] = c;
  }
  j["per_class"] = per_class;
  j["micro_all"] = cell(r.micro_all);
  j["macro_all"] = cell(r.macro_all);
  j["micro_pos"] = cell(r.micro_pos);
  j["macro_pos"] = cell(r.macro_pos);
  return j.dump(2) + "\n";
}

}  // namespace pairctx
