#include "cli.h"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "pairctx/corpus.h"
#include "pairctx/encoder_input.h"
#include "pairctx/errors.h"
#include "pairctx/metrics.h"
#include "pairctx/ner_align.h"
#include "pairctx/net.h"
#include "pairctx/splitter.h"
#include "pairctx/text_util.h"
#include "pairctx/trainer.h"
#include "run_config.h"

namespace pairctx::cli {

namespace fs = std::filesystem;

namespace {

// Stage artifact names inside the output directory.
constexpr const char* kCorpus = "corpus.jsonl";
constexpr const char* kAnnotations = "annotations.jsonl";
constexpr const char* kNer = "ner_mentions.tsv";
constexpr const char* kInstances = "instances.jsonl";
constexpr const char* kUnrecoverable = "unrecoverable.jsonl";
constexpr const char* kReport = "alignment_report.json";
constexpr const char* kDevReport = "alignment_report_dev.json";
constexpr const char* kSplit = "split.tsv";
constexpr const char* kTrainEncoded = "train.encoded.jsonl";
constexpr const char* kDevEncoded = "dev.encoded.jsonl";

class MissingArtifact : public Error {
 public:
  MissingArtifact(const fs::path& path, const std::string& stage)
      : Error("missing " + path.string() + "; run the '" + stage +
              "' stage first") {}
};

// Flag values; unset ones leave the config untouched.
struct Overrides {
  std::string config;
  std::optional<std::string> output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> corpus, annotations, ner, vocab;
  std::optional<double> ratio, kl_threshold;
  std::optional<std::uint64_t> max_trials;
  std::optional<std::size_t> max_len;
  std::optional<std::string> criterion;
  std::optional<std::size_t> restarts, epochs, patience, batch_size, threads;
  std::optional<double> lr, dropout;
  std::optional<std::string> init_checkpoint, model, predictions;
  std::optional<std::size_t> runs;
  std::optional<std::uint64_t> baseline_seed;
};

fs::path require(const fs::path& p, const std::string& stage) {
  if (!fs::exists(p)) throw MissingArtifact(p, stage);
  return p;
}

fs::path require_input(const fs::path& p, const char* what) {
  if (p.empty()) {
    throw ValidationError(std::string("no ") + what +
                          " path given (config paths." + what + " or --" +
                          what + ")");
  }
  if (!fs::exists(p)) throw IoError(std::string(what) + " file not found: " +
                                    p.string());
  return p;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot open " + p.string());
  return in;
}

// Writes through a temporary file so a failed stage never leaves a partial
// artifact behind.
template <typename Fn>
void write_artifact(const fs::path& p, Fn&& fn) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    fn(out);
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  fs::rename(tmp, p);
}

RunConfig effective_config(const Overrides& o) {
  RunConfig cfg = load_run_config(o.config);
  apply_seed_env(cfg);
  if (o.seed) cfg.train.master_seed = *o.seed;
  if (o.output_dir) cfg.paths.output_dir = *o.output_dir;
  if (o.corpus) cfg.paths.corpus = *o.corpus;
  if (o.annotations) cfg.paths.annotations = *o.annotations;
  if (o.ner) cfg.paths.ner = *o.ner;
  if (o.vocab) cfg.paths.vocab = *o.vocab;
  if (o.ratio) cfg.split.ratio = *o.ratio;
  if (o.kl_threshold) cfg.split.kl_threshold_bits = *o.kl_threshold;
  if (o.max_trials) cfg.split.max_seed_trials = *o.max_trials;
  if (o.max_len) cfg.encode.max_len = *o.max_len;
  if (o.restarts) cfg.train.num_restarts = *o.restarts;
  if (o.epochs) cfg.train.max_epochs = *o.epochs;
  if (o.patience) cfg.train.patience = *o.patience;
  if (o.batch_size) cfg.train.batch_size = *o.batch_size;
  if (o.threads) cfg.train.num_threads = *o.threads;
  if (o.lr) cfg.train.learning_rate = *o.lr;
  if (o.dropout) cfg.train.classifier_dropout = *o.dropout;
  if (o.runs) cfg.baseline_runs = *o.runs;
  if (o.baseline_seed) cfg.baseline_seed = *o.baseline_seed;
  cfg.train.validate();
  fs::create_directories(cfg.paths.output_dir);
  return cfg;
}

void echo_config(const RunConfig& cfg, const std::string& stage) {
  auto j = cfg.to_json();
  j["stage"] = stage;
  write_artifact(cfg.paths.output_dir / ("run_" + stage + ".json"),
                 [&](std::ostream& out) { out << j.dump(2) << '\n'; });
}

CorpusStore load_ingested(const RunConfig& cfg) {
  const fs::path& dir = cfg.paths.output_dir;
  return load_corpus(require(dir / kCorpus, "ingest"),
                     require(dir / kAnnotations, "ingest"));
}

std::vector<RelationInstance> load_instances(const fs::path& p,
                                             const std::string& stage) {
  auto in = open_in(require(p, stage));
  return read_instances(in, p.string());
}

std::vector<EncodedExample> load_encoded(const fs::path& p) {
  auto in = open_in(require(p, "encode"));
  return read_encoded(in, p.string());
}

Vocab load_vocab(const RunConfig& cfg) {
  return Vocab::load(require_input(cfg.paths.vocab, "vocab"));
}

std::vector<Label> labels_of(std::span<const EncodedExample> exs) {
  std::vector<Label> out;
  out.reserve(exs.size());
  for (const auto& e : exs) out.push_back(e.label);
  return out;
}

std::vector<StoppingCriterion> criteria_from(const std::optional<std::string>& flag,
                                             StoppingCriterion fallback) {
  if (!flag) return {fallback};
  if (*flag == "both") {
    return {StoppingCriterion::kMacroF1Pos, StoppingCriterion::kMacroF1All};
  }
  auto c = parse_criterion(*flag);
  if (!c) throw ValidationError("unknown criterion '" + *flag + "'");
  return {*c};
}

// ---------------------------------------------------------------- stages

void run_ingest(const RunConfig& cfg, std::ostream& out) {
  const auto corpus = require_input(cfg.paths.corpus, "corpus");
  std::optional<fs::path> ann;
  if (!cfg.paths.annotations.empty()) {
    ann = require_input(cfg.paths.annotations, "annotations");
  }
  CorpusStore store = load_corpus(corpus, ann);
  const fs::path& dir = cfg.paths.output_dir;
  write_artifact(dir / kCorpus,
                 [&](std::ostream& o) { write_documents(store, o); });
  write_artifact(dir / kAnnotations,
                 [&](std::ostream& o) { write_annotations(store, o); });
  out << store.documents.size() << " documents, "
      << store.gold_mentions.size() << " gold mentions, "
      << store.gold_relations.size() << " gold relations\n";
}

void run_prepare(const RunConfig& cfg, std::ostream& out) {
  CorpusStore store = load_ingested(cfg);
  const auto ner =
      load_ner_mentions(require_input(cfg.paths.ner, "ner"), store);
  LabeledPairs ds = build_dataset(store, ner);
  auto violations = validate_dataset(ds.instances, store);
  if (!violations.empty()) {
    throw ValidationError("prepared dataset is invalid: " +
                          violations.front().message);
  }
  const AlignmentReport report = alignment_report(store, ner);
  const fs::path& dir = cfg.paths.output_dir;
  write_artifact(dir / kNer, [&](std::ostream& o) { write_ner_mentions(ner, o); });
  write_artifact(dir / kInstances,
                 [&](std::ostream& o) { write_instances(ds.instances, o); });
  write_artifact(dir / kUnrecoverable,
                 [&](std::ostream& o) { write_instances(ds.unrecoverable, o); });
  write_artifact(dir / kReport,
                 [&](std::ostream& o) { o << alignment_report_json(report); });
  std::size_t positives = 0;
  for (const auto& r : ds.instances) positives += is_positive(r.label);
  out << ds.instances.size() << " instances (" << positives << " positive, "
      << ds.instances.size() - positives << " generated negatives), "
      << ds.unrecoverable.size() << " gold relations not recoverable\n";
  out << "alignment: total=" << report.total_positive_pairs
      << " both_exact=" << report.both_exact
      << " aligned_not_exact=" << report.aligned_not_exact
      << " entity_missing=" << report.entity_missing << '\n';
}

void run_split(const RunConfig& cfg, std::ostream& out) {
  const fs::path& dir = cfg.paths.output_dir;
  CorpusStore store = load_ingested(cfg);
  const auto instances = load_instances(dir / kInstances, "prepare");
  Split split =
      split_corpus(labels_by_document(store, instances), cfg.split);
  write_artifact(dir / kSplit,
                 [&](std::ostream& o) { write_split_manifest(split, o); });

  // The NER export saved by `prepare` lets us audit the dev documents.
  {
    auto in = open_in(require(dir / kNer, "prepare"));
    const auto ner = read_ner_mentions(in, (dir / kNer).string(), store);
    const AlignmentReport dev =
        alignment_report(store, ner, &split.dev_doc_ids);
    write_artifact(dir / kDevReport,
                   [&](std::ostream& o) { o << alignment_report_json(dev); });
  }
  char kl[64];
  std::snprintf(kl, sizeof(kl), "%.6f", split.kl_bits);
  out << "split: " << split.train_doc_ids.size() << " train / "
      << split.dev_doc_ids.size() << " dev documents, seed "
      << split.seed_used << ", D(train||dev) = " << kl << " bits\n";
  if (split.kl_bits > cfg.split.kl_threshold_bits) {
    out << "warning: no seed met the " << cfg.split.kl_threshold_bits
        << " bit threshold; using the minimum found\n";
  }
}

void run_encode(const RunConfig& cfg, std::ostream& out) {
  const fs::path& dir = cfg.paths.output_dir;
  CorpusStore store = load_ingested(cfg);
  const auto instances = load_instances(dir / kInstances, "prepare");
  Split split;
  {
    auto in = open_in(require(dir / kSplit, "split"));
    split = read_split_manifest(in, (dir / kSplit).string());
  }
  const Vocab vocab = load_vocab(cfg);

  std::vector<EncodedExample> train, dev;
  auto encode = [&](const RelationInstance& r) {
    auto it = store.documents.find(r.doc_id);
    if (it == store.documents.end()) {
      throw ValidationError("instance refers to unknown document " + r.doc_id);
    }
    return encode_instance(r, it->second, vocab, cfg.encode);
  };
  std::size_t truncated = 0;
  for (const auto& r : instances) {
    const bool in_train = split.train_doc_ids.contains(r.doc_id);
    if (!in_train && !split.dev_doc_ids.contains(r.doc_id)) {
      throw ValidationError("document " + r.doc_id + " is in neither split");
    }
    auto ex = encode(r);
    truncated += ex.truncated > 0;
    (in_train ? train : dev).push_back(std::move(ex));
  }
  std::size_t restored = 0;
  if (cfg.dev_include_unrecoverable) {
    for (const auto& r :
         load_instances(dir / kUnrecoverable, "prepare")) {
      if (!split.dev_doc_ids.contains(r.doc_id)) continue;
      dev.push_back(encode(r));
      ++restored;
    }
  }
  if (train.empty() || dev.empty()) {
    throw ValidationError("encoding produced an empty train or dev set");
  }
  write_artifact(dir / kTrainEncoded,
                 [&](std::ostream& o) { write_encoded(train, o); });
  write_artifact(dir / kDevEncoded,
                 [&](std::ostream& o) { write_encoded(dev, o); });
  out << "encoded " << train.size() << " train / " << dev.size()
      << " dev examples (" << restored
      << " dev gold relations restored, " << truncated
      << " truncated to " << cfg.encode.max_len << " subwords)\n";
}

void run_train(const RunConfig& cfg, const Overrides& o, std::ostream& out) {
  const fs::path& dir = cfg.paths.output_dir;
  const auto train = load_encoded(dir / kTrainEncoded);
  const auto dev = load_encoded(dir / kDevEncoded);

  ModelConfig model_cfg = cfg.model;
  std::optional<ModelParams> pretrained;
  if (o.init_checkpoint) {
    pretrained = load_checkpoint(require_input(*o.init_checkpoint, "init-checkpoint"));
    model_cfg = pretrained->config;
  } else {
    model_cfg.vocab_size = load_vocab(cfg).size();
  }
  for (const auto& ex : train) {
    for (TokenId id : ex.token_ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= model_cfg.vocab_size) {
        throw ValidationError("encoded token id " + std::to_string(id) +
                              " is outside the model vocabulary");
      }
    }
  }

  for (StoppingCriterion c : criteria_from(o.criterion, cfg.train.criterion)) {
    TrainConfig tc = cfg.train;
    tc.criterion = c;
    RestartResult r = run_restarts(tc, model_cfg, train, dev,
                                   pretrained ? &*pretrained : nullptr);
    const std::string name(criterion_token(c));
    save_checkpoint(r.params, dir / ("model_" + name + ".ckpt"));
    write_artifact(dir / ("train_" + name + ".log"), [&](std::ostream& log) {
      char buf[256];
      for (std::size_t i = 0; i < r.histories.size(); ++i) {
        const auto& h = r.histories[i];
        std::snprintf(buf, sizeof(buf),
                      "restart=%zu\tseed=%llu\tbest_score=%.6f\tbest_epoch=%zu"
                      "\tstop_epoch=%zu%s\n",
                      i,
                      static_cast<unsigned long long>(tc.master_seed + i),
                      h.diverged ? 0.0 : h.best_score(), h.best_epoch,
                      h.stop_epoch, h.diverged ? "\tdiverged=1" : "");
        log << buf;
      }
      write_training_log(r.history, c, r.restart_index, log);
    });
    char score[32];
    std::snprintf(score, sizeof(score), "%.4f", r.history.best_score());
    out << name << ": restart " << r.restart_index << " of "
        << r.histories.size() << ", best epoch " << r.history.best_epoch
        << ", dev " << name << " = " << score << '\n';
  }
}

using PairKey = std::tuple<std::string, std::string, std::string>;

std::map<PairKey, Label> read_predictions(const fs::path& p) {
  auto in = open_in(p);
  std::map<PairKey, Label> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.starts_with("#")) continue;
    auto f = split(line, '\t');
    if (f.size() != 4) {
      throw ParseError(p.string(), lineno,
                       "expected doc_id, gene_id, disease_id, label");
    }
    auto label = parse_label(f[3]);
    if (!label) throw ParseError(p.string(), lineno, "unknown label " + f[3]);
    if (!out.emplace(PairKey{f[0], f[1], f[2]}, *label).second) {
      throw ParseError(p.string(), lineno, "duplicate prediction");
    }
  }
  return out;
}

void write_eval(const fs::path& dir, const std::string& name,
                std::span<const EncodedExample> dev,
                std::span<const Label> preds, std::ostream& out) {
  const auto golds = labels_of(dev);
  const MetricsReport r = metrics_report(preds, golds);
  write_artifact(dir / ("eval_" + name + ".tsv"),
                 [&](std::ostream& o) { o << format_report_table(r); });
  write_artifact(dir / ("eval_" + name + ".json"),
                 [&](std::ostream& o) { o << format_report_json(r); });
  write_artifact(dir / ("predictions_" + name + ".tsv"), [&](std::ostream& o) {
    for (std::size_t i = 0; i < dev.size(); ++i) {
      o << dev[i].doc_id << '\t' << dev[i].gene_id << '\t'
        << dev[i].disease_id << '\t' << label_token(preds[i]) << '\n';
    }
  });
  out << "== " << name << " ==\n" << format_report_table(r);
}

void run_evaluate(const RunConfig& cfg, const Overrides& o, std::ostream& out) {
  const fs::path& dir = cfg.paths.output_dir;
  const auto dev = load_encoded(dir / kDevEncoded);

  if (o.predictions) {
    const auto table = read_predictions(require_input(*o.predictions, "predictions"));
    std::vector<Label> preds;
    for (const auto& ex : dev) {
      auto it = table.find({ex.doc_id, ex.gene_id, ex.disease_id});
      if (it == table.end()) {
        throw ValidationError("no prediction for dev pair " + ex.doc_id + " " +
                              ex.gene_id + " " + ex.disease_id);
      }
      preds.push_back(it->second);
    }
    write_eval(dir, "predictions", dev, preds, out);
    return;
  }
  if (o.model) {
    const ModelParams p = load_checkpoint(require_input(*o.model, "model"));
    write_eval(dir, fs::path(*o.model).stem().string(), dev,
               predict_all(p, dev), out);
    return;
  }
  std::vector<StoppingCriterion> todo;
  if (o.criterion) {
    todo = criteria_from(o.criterion, cfg.train.criterion);
  } else {
    for (auto c : {StoppingCriterion::kMacroF1Pos, StoppingCriterion::kMacroF1All}) {
      const std::string name(criterion_token(c));
      if (fs::exists(dir / ("model_" + name + ".ckpt"))) todo.push_back(c);
    }
    if (todo.empty()) {
      throw MissingArtifact(dir / "model_<criterion>.ckpt", "train");
    }
  }
  for (auto c : todo) {
    const std::string name(criterion_token(c));
    const ModelParams p =
        load_checkpoint(require(dir / ("model_" + name + ".ckpt"), "train"));
    write_eval(dir, name, dev, predict_all(p, dev), out);
  }
}

void run_baseline(const RunConfig& cfg, std::ostream& out) {
  const fs::path& dir = cfg.paths.output_dir;
  const auto train = labels_of(load_encoded(dir / kTrainEncoded));
  const auto dev = labels_of(load_encoded(dir / kDevEncoded));
  const LabelDistribution train_dist = label_distribution(train);
  const MetricsReport r =
      random_baseline(train_dist, dev, cfg.baseline_runs, cfg.baseline_seed);
  write_artifact(dir / "baseline.tsv",
                 [&](std::ostream& o) { o << format_report_table(r); });
  write_artifact(dir / "baseline.json",
                 [&](std::ostream& o) { o << format_report_json(r); });
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "train label entropy %.4f bits (uniform over 5: %.4f), "
                "averaged over %zu runs\n",
                entropy_bits(train_dist),
                entropy_bits(LabelDistribution({0.2, 0.2, 0.2, 0.2, 0.2})),
                cfg.baseline_runs);
  out << buf << format_report_table(r);
}

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON run configuration")->required();
  sub->add_option("--output-dir", o.output_dir, "Artifact directory");
  sub->add_option("--seed", o.seed, "Master seed (overrides PAIRCTX_SEED)");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Gene-disease relation extraction pipeline", "pairctx-re"};
  app.require_subcommand(1);
  Overrides o;

  auto* ingest = app.add_subcommand("ingest", "Load and validate the corpus");
  add_common(ingest, o);
  ingest->add_option("--corpus", o.corpus, "Document JSONL file");
  ingest->add_option("--annotations", o.annotations, "Annotation JSONL file");

  auto* prepare = app.add_subcommand(
      "prepare", "Align NER output and build the labeled pair dataset");
  add_common(prepare, o);
  prepare->add_option("--ner", o.ner, "NER/linking TSV export");

  auto* split = app.add_subcommand("split", "Document-level train/dev split");
  add_common(split, o);
  split->add_option("--ratio", o.ratio, "Train fraction of documents");
  split->add_option("--kl-threshold", o.kl_threshold, "Divergence bound (bits)");
  split->add_option("--max-trials", o.max_trials, "Seeds to try");

  auto* encode = app.add_subcommand("encode", "Tokenize and build sequences");
  add_common(encode, o);
  encode->add_option("--vocab", o.vocab, "WordPiece vocabulary file");
  encode->add_option("--max-len", o.max_len, "Sequence length cap");

  auto* train = app.add_subcommand("train", "Train with random restarts");
  add_common(train, o);
  train->add_option("--criterion", o.criterion,
                    "macro_f1_all, macro_f1_pos or both")
      ->check(CLI::IsMember({"macro_f1_all", "macro_f1_pos", "both"}));
  train->add_option("--vocab", o.vocab, "WordPiece vocabulary file");
  train->add_option("--restarts", o.restarts, "Number of restarts");
  train->add_option("--epochs", o.epochs, "Maximum epochs");
  train->add_option("--patience", o.patience, "Early stopping patience");
  train->add_option("--batch-size", o.batch_size, "Batch size");
  train->add_option("--lr", o.lr, "SGD learning rate");
  train->add_option("--dropout", o.dropout, "Classifier dropout");
  train->add_option("--threads", o.threads, "Restarts run in parallel");
  train->add_option("--init-checkpoint", o.init_checkpoint,
                    "Encoder weights to start from");

  auto* evaluate = app.add_subcommand("evaluate", "Score dev predictions");
  add_common(evaluate, o);
  auto* crit = evaluate->add_option("--criterion", o.criterion,
                                    "Model to evaluate")
                   ->check(CLI::IsMember({"macro_f1_all", "macro_f1_pos", "both"}));
  auto* model = evaluate->add_option("--model", o.model, "Checkpoint path");
  auto* preds = evaluate->add_option("--predictions", o.predictions,
                                     "TSV of doc_id, gene_id, disease_id, label");
  crit->excludes(model)->excludes(preds);
  model->excludes(preds);

  auto* baseline = app.add_subcommand("baseline", "Categorical sampling baseline");
  add_common(baseline, o);
  baseline->add_option("--runs", o.runs, "Sampling runs to average");
  baseline->add_option("--baseline-seed", o.baseline_seed, "Sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  try {
    const RunConfig cfg = effective_config(o);
    echo_config(cfg, stage);
    if (stage == "ingest") run_ingest(cfg, out);
    if (stage == "prepare") run_prepare(cfg, out);
    if (stage == "split") run_split(cfg, out);
    if (stage == "encode") run_encode(cfg, out);
    if (stage == "train") run_train(cfg, o, out);
    if (stage == "evaluate") run_evaluate(cfg, o, out);
    if (stage == "baseline") run_baseline(cfg, out);
  } catch (const std::exception& e) {
    err << "pairctx-re " << stage << ": error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace pairctx::cli
