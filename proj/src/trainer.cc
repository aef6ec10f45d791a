#include "pairctx/trainer.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace pairctx {

namespace {

// Masked positions are never looked up, so any id works for padding here.
constexpr TokenId kBatchPad = 0;

}  // namespace

std::string_view criterion_token(StoppingCriterion c) {
  return c == StoppingCriterion::kMacroF1All ? "macro_f1_all" : "macro_f1_pos";
}

std::optional<StoppingCriterion> parse_criterion(std::string_view token) {
  if (token == "macro_f1_all") return StoppingCriterion::kMacroF1All;
  if (token == "macro_f1_pos") return StoppingCriterion::kMacroF1Pos;
  return std::nullopt;
}

double criterion_score(const MetricsReport& report, StoppingCriterion c) {
  return c == StoppingCriterion::kMacroF1All ? report.macro_all.f1
                                             : report.macro_pos.f1;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) {
    throw std::invalid_argument("invalid train config: " + what);
  };
  if (batch_size < kNumLabels) fail("batch_size must be >= 5");
  if (max_epochs < 1) fail("max_epochs must be >= 1");
  if (patience < 1) fail("patience must be >= 1");
  if (num_restarts < 1) fail("num_restarts must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail("learning_rate must be positive");
  }
  if (classifier_dropout < 0.0 || classifier_dropout >= 1.0) {
    fail("classifier_dropout must be in [0,1)");
  }
}

BalancedBatchSampler::BalancedBatchSampler(std::span<const Label> labels,
                                           std::size_t batch_size)
    : dataset_size_(labels.size()), batch_size_(batch_size) {
  if (labels.empty()) throw std::invalid_argument("empty training set");
  if (batch_size == 0) throw std::invalid_argument("batch_size must be > 0");
  std::array<std::vector<std::size_t>, kNumLabels> buckets;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    buckets[label_index(labels[i])].push_back(i);
  }
  for (Label l : kAllLabels) {
    auto& b = buckets[label_index(l)];
    if (b.empty()) continue;
    present_.push_back(l);
    by_class_.push_back(std::move(b));
  }
}

std::vector<std::size_t> BalancedBatchSampler::next_batch(
    std::mt19937_64& rng) const {
  std::uniform_int_distribution<std::size_t> pick_class(0, present_.size() - 1);
  std::vector<std::size_t> batch;
  batch.reserve(batch_size_);
  for (std::size_t s = 0; s < batch_size_; ++s) {
    const auto& members = by_class_[pick_class(rng)];
    std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
    batch.push_back(members[pick(rng)]);
  }
  return batch;
}

std::size_t BalancedBatchSampler::batches_per_epoch() const {
  return (dataset_size_ + batch_size_ - 1) / batch_size_;
}

std::vector<std::vector<std::size_t>> BalancedBatchSampler::epoch(
    std::mt19937_64& rng) const {
  std::vector<std::vector<std::size_t>> out;
  out.reserve(batches_per_epoch());
  for (std::size_t i = 0; i < batches_per_epoch(); ++i) {
    out.push_back(next_batch(rng));
  }
  return out;
}

std::vector<std::vector<std::size_t>> make_balanced_batches(
    std::span<const Label> labels, std::size_t batch_size,
    std::mt19937_64& rng) {
  return BalancedBatchSampler(labels, batch_size).epoch(rng);
}

bool early_stop_check(std::span<const double> scores, std::size_t patience,
                      std::size_t max_epochs) {
  if (scores.empty()) return false;
  if (scores.size() >= max_epochs) return true;
  std::size_t best_epoch = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > best) {
      best = scores[i];
      best_epoch = i + 1;
    }
  }
  return scores.size() - best_epoch >= patience;
}

double TrainHistory::best_score() const {
  if (best_epoch == 0) return -std::numeric_limits<double>::infinity();
  return epochs[best_epoch - 1].score;
}

std::vector<double> TrainHistory::scores() const {
  std::vector<double> s;
  s.reserve(epochs.size());
  for (const auto& e : epochs) s.push_back(e.score);
  return s;
}

std::vector<Label> predict_all(const ModelParams& params,
                               std::span<const EncodedExample> examples,
                               std::size_t chunk) {
  std::vector<Label> out;
  out.reserve(examples.size());
  for (std::size_t start = 0; start < examples.size(); start += chunk) {
    const auto part =
        examples.subspan(start, std::min(chunk, examples.size() - start));
    auto labels = predict(params, make_batch(part, kBatchPad));
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

TrainResult train_one(const TrainConfig& cfg, const ModelConfig& model_cfg,
                      std::span<const EncodedExample> train,
                      std::span<const EncodedExample> dev, std::uint64_t seed,
                      const ModelParams* pretrained,
                      const EpochCallback& on_epoch) {
  cfg.validate();
  if (dev.empty()) throw std::invalid_argument("dev set is empty");
  std::vector<Label> train_labels;
  train_labels.reserve(train.size());
  for (const auto& ex : train) train_labels.push_back(ex.label);
  std::vector<Label> dev_golds;
  dev_golds.reserve(dev.size());
  for (const auto& ex : dev) dev_golds.push_back(ex.label);
  const BalancedBatchSampler sampler(train_labels, cfg.batch_size);

  ModelParams params;
  if (pretrained != nullptr) {
    params = *pretrained;
    reinit_classifier(params, seed);
  } else {
    params = init_params(model_cfg, seed);
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32), 0x5a31u};
  std::mt19937_64 rng(seq);
  GradOptions grad_options{cfg.classifier_dropout, &rng};

  TrainResult result{params, {}};
  TrainHistory& history = result.history;
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t steps = 0;
    bool diverged = false;
    for (const auto& indices : sampler.epoch(rng)) {
      const Batch batch = make_batch(train, indices, kBatchPad);
      GradResult g;
      try {
        g = grad(params, batch, grad_options);
      } catch (const NonFiniteGradient&) {
        diverged = true;
        break;
      }
      if (!std::isfinite(g.loss)) {
        diverged = true;
        break;
      }
      sgd_step(params, g.grad, cfg.learning_rate);
      loss_sum += g.loss;
      ++steps;
    }
    if (diverged) {
      history.diverged = true;
      history.stop_epoch = epoch;
      return result;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = steps > 0 ? loss_sum / static_cast<double>(steps) : 0.0;
    rec.dev = metrics_report(predict_all(params, dev, cfg.batch_size),
                             dev_golds);
    rec.score = criterion_score(rec.dev, cfg.criterion);
    if (history.best_epoch == 0 || rec.score > history.best_score()) {
      history.best_epoch = epoch;
      result.params = params;
    }
    history.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    history.stop_epoch = epoch;
    if (early_stop_check(history.scores(), cfg.patience, cfg.max_epochs)) break;
  }
  return result;
}

std::optional<std::size_t> select_best_restart(
    std::span<const TrainHistory> histories) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < histories.size(); ++i) {
    const auto& h = histories[i];
    if (h.diverged || h.best_epoch == 0) continue;
    if (!best || h.best_score() > histories[*best].best_score()) best = i;
  }
  return best;
}

RestartResult run_restarts(const TrainConfig& cfg, const ModelConfig& model_cfg,
                           std::span<const EncodedExample> train,
                           std::span<const EncodedExample> dev,
                           const ModelParams* pretrained) {
  cfg.validate();
  const std::size_t n = cfg.num_restarts;
  std::vector<std::optional<TrainResult>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        results[i] = train_one(cfg, model_cfg, train, dev,
                               cfg.master_seed + i, pretrained);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(cfg.num_threads, 1, n);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  RestartResult out;
  for (auto& r : results) out.histories.push_back(r->history);
  auto best = select_best_restart(out.histories);
  if (!best) throw Error("all " + std::to_string(n) + " restarts diverged");
  out.restart_index = *best;
  out.params = std::move(results[*best]->params);
  out.history = out.histories[*best];
  return out;
}

void write_training_log(const TrainHistory& history,
                        StoppingCriterion criterion, std::size_t restart_index,
                        std::ostream& out) {
  char buf[512];
  for (const auto& e : history.epochs) {
    std::snprintf(buf, sizeof(buf),
                  "epoch=%zu\ttrain_loss=%.6f\tcriterion=%.*s\tscore=%.6f\t"
                  "micro_all_f1=%.6f\tmacro_all_f1=%.6f\tmicro_pos_f1=%.6f\t"
                  "macro_pos_f1=%.6f\n",
                  e.epoch, e.train_loss,
                  static_cast<int>(criterion_token(criterion).size()),
                  criterion_token(criterion).data(), e.score,
                  e.dev.micro_all.f1, e.dev.macro_all.f1, e.dev.micro_pos.f1,
                  e.dev.macro_pos.f1);
    out << buf;
  }
  out << "best_epoch=" << history.best_epoch
      << "\tstop_epoch=" << history.stop_epoch
      << "\trestart_index=" << restart_index
      << (history.diverged ? "\tdiverged=1" : "") << '\n';
}

}  // namespace pairctx
