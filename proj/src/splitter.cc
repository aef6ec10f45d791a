#include "pairctx/splitter.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>

#include "pairctx/errors.h"
#include "pairctx/text_util.h"

namespace pairctx {

namespace {

using Counts = std::array<std::size_t, kNumLabels>;

std::optional<LabelDistribution> distribution_of(const Counts& c) {
  std::size_t total = 0;
  for (auto v : c) total += v;
  if (total == 0) return std::nullopt;
  std::array<double, kNumLabels> w{};
  for (std::size_t i = 0; i < kNumLabels; ++i) w[i] = static_cast<double>(c[i]);
  return LabelDistribution::normalized(w);
}

}  // namespace

LabelDistribution::LabelDistribution(const std::array<double, kNumLabels>& p)
    : p_(p) {
  double sum = 0.0;
  for (double v : p_) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw std::invalid_argument("probability outside [0,1]");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("probabilities sum to " + std::to_string(sum));
  }
}

LabelDistribution LabelDistribution::normalized(
    const std::array<double, kNumLabels>& weights) {
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weights must be finite and nonnegative");
    }
    sum += w;
  }
  if (sum <= 0.0) throw std::invalid_argument("weights sum to zero");
  std::array<double, kNumLabels> p{};
  for (std::size_t i = 0; i < kNumLabels; ++i) p[i] = weights[i] / sum;
  return LabelDistribution(p);
}

LabelDistribution label_distribution(std::span<const Label> labels) {
  if (labels.empty()) {
    throw std::invalid_argument("label distribution of an empty list");
  }
  Counts c{};
  for (Label l : labels) ++c[label_index(l)];
  return *distribution_of(c);
}

LabelDistribution label_distribution(
    std::span<const RelationInstance> instances) {
  std::vector<Label> labels;
  labels.reserve(instances.size());
  for (const auto& r : instances) labels.push_back(r.label);
  return label_distribution(labels);
}

double entropy_bits(const LabelDistribution& d) {
  double h = 0.0;
  for (double p : d.probabilities()) {
    if (p > 0.0) h -= p * std::log2(p);
  }
  return h;
}

double kl_divergence_bits(const LabelDistribution& p,
                          const LabelDistribution& q) {
  double d = 0.0;
  for (std::size_t i = 0; i < kNumLabels; ++i) {
    const double pi = p.probabilities()[i];
    const double qi = q.probabilities()[i];
    if (pi == 0.0) continue;
    if (qi == 0.0) {
      throw std::domain_error("KL divergence is infinite: q(" +
                              std::string(label_token(label_from_index(
                                  static_cast<int>(i)))) +
                              ") = 0");
    }
    d += pi * std::log2(pi / qi);
  }
  // Rounding can leave tiny negatives for p == q.
  return std::max(0.0, d);
}

Split split_corpus(const std::map<std::string, std::vector<Label>>& doc_labels,
                   const SplitOptions& options) {
  const std::size_t n = doc_labels.size();
  if (n < 2) throw std::invalid_argument("split needs at least 2 documents");
  if (!(options.ratio > 0.0 && options.ratio < 1.0)) {
    throw std::invalid_argument("split ratio must be in (0,1)");
  }
  const auto n_train = static_cast<std::size_t>(
      std::floor(options.ratio * static_cast<double>(n)));

  std::vector<std::string> ids;
  std::vector<Counts> counts;
  for (const auto& [id, labels] : doc_labels) {
    ids.push_back(id);
    Counts c{};
    for (Label l : labels) ++c[label_index(l)];
    counts.push_back(c);
  }

  std::vector<std::size_t> order(n);
  std::optional<Split> best;
  for (std::uint64_t seed = 0; seed < options.max_seed_trials; ++seed) {
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    Counts train{}, dev{};
    for (std::size_t k = 0; k < n; ++k) {
      Counts& dst = k < n_train ? train : dev;
      for (std::size_t i = 0; i < kNumLabels; ++i) dst[i] += counts[order[k]][i];
    }
    auto p = distribution_of(train);
    auto q = distribution_of(dev);
    if (!p || !q) continue;
    bool support_ok = true;
    for (std::size_t i = 0; i < kNumLabels; ++i) {
      if (train[i] > 0 && dev[i] == 0) support_ok = false;
    }
    if (!support_ok) continue;

    const double d = kl_divergence_bits(*p, *q);
    if (!best || d < best->kl_bits) {
      Split s;
      for (std::size_t k = 0; k < n; ++k) {
        (k < n_train ? s.train_doc_ids : s.dev_doc_ids).insert(ids[order[k]]);
      }
      s.seed_used = seed;
      s.kl_bits = d;
      best = std::move(s);
    }
    if (d <= options.kl_threshold_bits) break;
  }
  if (!best) {
    throw Error("no seed in [0, " + std::to_string(options.max_seed_trials) +
                ") yields a finite train/dev divergence");
  }
  return *best;
}

std::map<std::string, std::vector<Label>> labels_by_document(
    const CorpusStore& store, std::span<const RelationInstance> instances) {
  std::map<std::string, std::vector<Label>> out;
  for (const auto& [id, doc] : store.documents) out[id];
  for (const auto& r : instances) out[r.doc_id].push_back(r.label);
  return out;
}

void write_split_manifest(const Split& split, std::ostream& out) {
  char kl[64];
  std::snprintf(kl, sizeof(kl), "%.6f", split.kl_bits);
  out << "# seed_used=" << split.seed_used << "\tkl_bits=" << kl << '\n';
  for (const auto& id : split.train_doc_ids) out << "train\t" << id << '\n';
  for (const auto& id : split.dev_doc_ids) out << "dev\t" << id << '\n';
}

Split read_split_manifest(std::istream& in, std::string_view source) {
  Split s;
  std::string line;
  std::size_t lineno = 0;
  const std::string src(source);
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.starts_with("#")) {
      unsigned long long seed = 0;
      double kl = 0.0;
      if (std::sscanf(line.c_str(), "# seed_used=%llu\tkl_bits=%lf", &seed,
                      &kl) != 2) {
        throw ParseError(src, lineno, "malformed split header");
      }
      s.seed_used = seed;
      s.kl_bits = kl;
      header = true;
      continue;
    }
    auto fields = split(line, '\t');
    if (fields.size() != 2 || fields[1].empty()) {
      throw ParseError(src, lineno, "expected '<train|dev>\\t<doc_id>'");
    }
    std::set<std::string>* dst = nullptr;
    if (fields[0] == "train") dst = &s.train_doc_ids;
    if (fields[0] == "dev") dst = &s.dev_doc_ids;
    if (dst == nullptr) throw ParseError(src, lineno, "unknown partition");
    dst->insert(fields[1]);
  }
  if (!header) throw ParseError(src, 1, "missing split header");
  return s;
}

}  // namespace pairctx
