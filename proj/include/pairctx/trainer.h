#ifndef PAIRCTX_TRAINER_H_
#define PAIRCTX_TRAINER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "pairctx/encoder_input.h"
#include "pairctx/label.h"
#include "pairctx/metrics.h"
#include "pairctx/net.h"

namespace pairctx {

enum class StoppingCriterion { kMacroF1All, kMacroF1Pos };

std::string_view criterion_token(StoppingCriterion c);  // "macro_f1_all" ...
std::optional<StoppingCriterion> parse_criterion(std::string_view token);

double criterion_score(const MetricsReport& report, StoppingCriterion c);

struct TrainConfig {
  std::size_t batch_size = 32;
  std::size_t max_epochs = 40;
  std::size_t patience = 10;
  std::size_t num_restarts = 20;
  StoppingCriterion criterion = StoppingCriterion::kMacroF1Pos;
  double learning_rate = 1e-3;
  double classifier_dropout = 0.1;
  std::uint64_t master_seed = 0;
  // Restarts run on up to this many threads; results do not depend on it.
  std::size_t num_threads = 1;

  void validate() const;
};

// Per-slot class-balanced sampling: each slot picks a class uniformly among
// those present, then an instance of that class uniformly with replacement.
class BalancedBatchSampler {
 public:
  // Throws std::invalid_argument on an empty dataset or batch_size 0.
  BalancedBatchSampler(std::span<const Label> labels, std::size_t batch_size);

  std::vector<std::size_t> next_batch(std::mt19937_64& rng) const;
  // ceil(|dataset| / batch_size) batches.
  std::vector<std::vector<std::size_t>> epoch(std::mt19937_64& rng) const;

  std::size_t batches_per_epoch() const;
  const std::vector<Label>& classes_present() const { return present_; }

 private:
  std::size_t dataset_size_;
  std::size_t batch_size_;
  std::vector<Label> present_;
  std::vector<std::vector<std::size_t>> by_class_;  // indexed like present_
};

std::vector<std::vector<std::size_t>> make_balanced_batches(
    std::span<const Label> labels, std::size_t batch_size,
    std::mt19937_64& rng);

// True when training should stop after the last scored epoch: either
// max_epochs were run or none of the last `patience` epochs strictly beat the
// best score before it.
bool early_stop_check(std::span<const double> scores, std::size_t patience,
                      std::size_t max_epochs);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  MetricsReport dev;
  double score = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 when no epoch finished
  std::size_t stop_epoch = 0;
  bool diverged = false;

  double best_score() const;
  std::vector<double> scores() const;
};

struct TrainResult {
  ModelParams params;  // snapshot at best_epoch
  TrainHistory history;
};

// Optional observer called after every epoch.
using EpochCallback = std::function<void(const EpochRecord&)>;

// One training run: SGD on balanced batches, full dev evaluation after every
// epoch, early stopping on the configured criterion. A non-finite loss ends
// the run with history.diverged set. When `pretrained` is given its encoder
// weights are used and only the classifier is drawn from `seed`.
TrainResult train_one(const TrainConfig& cfg, const ModelConfig& model_cfg,
                      std::span<const EncodedExample> train,
                      std::span<const EncodedExample> dev, std::uint64_t seed,
                      const ModelParams* pretrained = nullptr,
                      const EpochCallback& on_epoch = {});

struct RestartResult {
  ModelParams params;
  TrainHistory history;
  std::size_t restart_index = 0;
  std::vector<TrainHistory> histories;  // every restart, by index
};

// Restart i trains with seed master_seed + i. Picks the best dev criterion
// score, lowest index on ties; diverged restarts are skipped. Throws Error
// when every restart diverged.
RestartResult run_restarts(const TrainConfig& cfg, const ModelConfig& model_cfg,
                           std::span<const EncodedExample> train,
                           std::span<const EncodedExample> dev,
                           const ModelParams* pretrained = nullptr);

// Index of the best history by best_score(), skipping diverged ones; ties go
// to the lowest index. nullopt when all diverged.
std::optional<std::size_t> select_best_restart(
    std::span<const TrainHistory> histories);

// Dev predictions in input order, evaluated in chunks of `chunk` examples.
std::vector<Label> predict_all(const ModelParams& params,
                               std::span<const EncodedExample> examples,
                               std::size_t chunk = 32);

void write_training_log(const TrainHistory& history,
                        StoppingCriterion criterion, std::size_t restart_index,
                        std::ostream& out);

}  // namespace pairctx

#endif  // PAIRCTX_TRAINER_H_
