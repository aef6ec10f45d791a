#include "pairctx/trainer.h"

#include <sstream>

#include "doctest.h"
#include "fixtures.h"

namespace pairctx {
namespace {

std::vector<Label> imbalanced_labels() {
  std::vector<Label> labels(600, Label::kNoRel);
  labels.insert(labels.end(), 19, Label::kLof);
  labels.insert(labels.end(), 12, Label::kGof);
  labels.insert(labels.end(), 11, Label::kReg);
  labels.insert(labels.end(), 2, Label::kCom);
  return labels;
}

TEST_CASE("balanced sampler draws classes uniformly") {
  const auto labels = imbalanced_labels();
  BalancedBatchSampler sampler(labels, 32);
  CHECK(sampler.classes_present().size() == 5);
  CHECK(sampler.batches_per_epoch() == (labels.size() + 31) / 32);
  std::mt19937_64 rng(1);
  std::array<double, kNumLabels> slots{};
  for (int b = 0; b < 1000; ++b) {
    auto batch = sampler.next_batch(rng);
    REQUIRE(batch.size() == 32);
    for (std::size_t i : batch) slots[label_index(labels[i])] += 1;
  }
  for (double s : slots) CHECK(std::abs(s / 1000 - 6.4) <= 0.3);
}

TEST_CASE("balanced sampler edge cases") {
  std::mt19937_64 rng(2);
  SUBCASE("single class") {
    std::vector<Label> labels(10, Label::kReg);
    BalancedBatchSampler sampler(labels, 4);
    for (const auto& batch : sampler.epoch(rng)) {
      CHECK(batch.size() == 4);
      for (std::size_t i : batch) CHECK(labels[i] == Label::kReg);
    }
    CHECK(sampler.epoch(rng).size() == 3);
  }
  SUBCASE("two COM instances are reused") {
    const auto labels = imbalanced_labels();
    BalancedBatchSampler sampler(labels, 32);
    std::set<std::size_t> com;
    std::size_t com_slots = 0;
    for (int b = 0; b < 50; ++b) {
      for (std::size_t i : sampler.next_batch(rng)) {
        if (labels[i] == Label::kCom) {
          com.insert(i);
          ++com_slots;
        }
      }
    }
    CHECK(com.size() == 2);
    CHECK(com_slots > 2);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(BalancedBatchSampler({}, 4), std::invalid_argument);
    std::vector<Label> one = {Label::kLof};
    CHECK_THROWS_AS(BalancedBatchSampler(one, 0), std::invalid_argument);
  }
}

// Runs the stopping rule epoch by epoch and returns the stop epoch.
std::size_t simulate_stop(const std::vector<double>& scores,
                          std::size_t patience = 10,
                          std::size_t max_epochs = 40) {
  for (std::size_t e = 1; e <= scores.size(); ++e) {
    if (early_stop_check(std::span(scores).first(e), patience, max_epochs)) {
      return e;
    }
  }
  return 0;
}

TEST_CASE("early_stop_check") {
  std::vector<double> rising(60);
  for (std::size_t i = 0; i < rising.size(); ++i) rising[i] = 0.01 * i;
  CHECK(simulate_stop(rising) == 40);

  std::vector<double> best_first(60, 0.2);
  best_first[0] = 0.5;
  CHECK(simulate_stop(best_first) == 11);

  // Flat epochs 1-8, improvement at 9, flat afterwards.
  std::vector<double> mid(60, 0.3);
  mid[8] = 0.4;
  std::fill(mid.begin() + 9, mid.end(), 0.4);
  CHECK(!early_stop_check(std::span(mid).first(9), 10, 40));
  CHECK(simulate_stop(mid) == 19);

  // Equal scores do not count as improvement.
  std::vector<double> flat(60, 0.3);
  CHECK(simulate_stop(flat) == 11);
  CHECK(simulate_stop(flat, 3, 40) == 4);
}

TEST_CASE("train_one fits the separable fixture") {
  const Vocab vocab = testing::toy_vocab();
  const auto train = testing::separable_examples(vocab, 50, 1);
  const auto dev = testing::separable_examples(vocab, 50, 2);
  const TrainConfig cfg = testing::separable_train_config();
  const ModelConfig mc = testing::toy_model_config();

  std::size_t callbacks = 0;
  TrainResult r = train_one(cfg, mc, train, dev, 0, nullptr,
                            [&](const EpochRecord&) { ++callbacks; });
  CHECK(!r.history.diverged);
  CHECK(r.history.best_score() == 1.0);
  CHECK(r.history.stop_epoch <= 40);
  CHECK(callbacks == r.history.epochs.size());
  CHECK(r.history.epochs.size() == r.history.stop_epoch);

  // Best epoch holds the running maximum, first occurrence.
  const auto scores = r.history.scores();
  const std::size_t best = r.history.best_epoch;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (e + 1 < best) CHECK(scores[e] < scores[best - 1]);
    CHECK(scores[e] <= scores[best - 1]);
  }
  // Returned parameters are the best-epoch snapshot.
  auto preds = predict_all(r.params, dev);
  std::vector<Label> golds;
  for (const auto& ex : dev) golds.push_back(ex.label);
  CHECK(criterion_score(metrics_report(preds, golds), cfg.criterion) ==
        scores[best - 1]);

  TrainResult again = train_one(cfg, mc, train, dev, 0);
  CHECK(again.history.scores() == scores);
  CHECK(again.params.classifier_w == r.params.classifier_w);
}

TEST_CASE("predict_all covers each example once in order") {
  const Vocab vocab = testing::toy_vocab();
  const auto dev = testing::separable_examples(vocab, 37, 3);
  const ModelParams p = init_params(testing::toy_model_config(), 1);
  const auto chunked = predict_all(p, dev, 5);
  REQUIRE(chunked.size() == dev.size());
  CHECK(chunked == predict_all(p, dev, 100));
  for (std::size_t i = 0; i < dev.size(); i += 9) {
    std::vector<std::size_t> one = {i};
    CHECK(predict(p, make_batch(dev, one, vocab.pad()))[0] == chunked[i]);
  }
}

TEST_CASE("select_best_restart") {
  auto hist = [](std::vector<double> scores, bool diverged = false) {
    TrainHistory h;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      EpochRecord r;
      r.epoch = i + 1;
      r.score = scores[i];
      h.epochs.push_back(r);
    }
    h.best_epoch = 1;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] > scores[h.best_epoch - 1]) h.best_epoch = i + 1;
    }
    h.stop_epoch = scores.size();
    h.diverged = diverged;
    return h;
  };
  std::vector<TrainHistory> hs = {hist({0.2, 0.5}), hist({0.7}),
                                  hist({0.1, 0.7}), hist({0.9}, true)};
  CHECK(select_best_restart(hs) == 1);
  std::vector<TrainHistory> dead = {hist({0.1}, true)};
  CHECK(!select_best_restart(dead).has_value());
}

TEST_CASE("run_restarts") {
  const Vocab vocab = testing::toy_vocab();
  const auto train = testing::separable_examples(vocab, 50, 1);
  const auto dev = testing::separable_examples(vocab, 50, 2);
  TrainConfig cfg = testing::separable_train_config();
  cfg.max_epochs = 6;
  cfg.patience = 3;
  cfg.master_seed = 10;
  const ModelConfig mc = testing::toy_model_config();

  cfg.num_restarts = 1;
  RestartResult single = run_restarts(cfg, mc, train, dev);
  TrainResult direct = train_one(cfg, mc, train, dev, 10);
  CHECK(single.restart_index == 0);
  CHECK(single.history.scores() == direct.history.scores());
  CHECK(single.params.classifier_w == direct.params.classifier_w);

  cfg.num_restarts = 4;
  RestartResult serial = run_restarts(cfg, mc, train, dev);
  REQUIRE(serial.histories.size() == 4);
  double best = -1;
  for (const auto& h : serial.histories) best = std::max(best, h.best_score());
  CHECK(serial.history.best_score() == best);
  CHECK(select_best_restart(serial.histories) == serial.restart_index);
  CHECK(serial.histories[0].scores() == direct.history.scores());

  cfg.num_threads = 3;
  RestartResult parallel = run_restarts(cfg, mc, train, dev);
  CHECK(parallel.restart_index == serial.restart_index);
  CHECK(parallel.params.classifier_w == serial.params.classifier_w);
}

TEST_CASE("diverging runs are flagged") {
  const Vocab vocab = testing::toy_vocab();
  const auto train = testing::separable_examples(vocab, 20, 1);
  TrainConfig cfg = testing::separable_train_config();
  cfg.learning_rate = 1e6;
  cfg.num_restarts = 2;
  TrainResult r = train_one(cfg, testing::toy_model_config(), train, train, 0);
  CHECK(r.history.diverged);
  CHECK_THROWS_AS(run_restarts(cfg, testing::toy_model_config(), train, train),
                  Error);
}

TEST_CASE("config validation and criterion tokens") {
  TrainConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  CHECK(parse_criterion("macro_f1_all") == StoppingCriterion::kMacroF1All);
  CHECK(parse_criterion("macro_f1_pos") == StoppingCriterion::kMacroF1Pos);
  CHECK(!parse_criterion("f1"));
}

TEST_CASE("training log") {
  TrainHistory h;
  EpochRecord r;
  r.epoch = 1;
  r.score = 0.25;
  h.epochs.push_back(r);
  h.best_epoch = 1;
  h.stop_epoch = 1;
  std::ostringstream out;
  write_training_log(h, StoppingCriterion::kMacroF1All, 3, out);
  const std::string log = out.str();
  CHECK(log.find("epoch=1\t") != std::string::npos);
  CHECK(log.find("criterion=macro_f1_all") != std::string::npos);
  CHECK(log.find("restart_index=3") != std::string::npos);
}

}  // namespace
}  // namespace pairctx
