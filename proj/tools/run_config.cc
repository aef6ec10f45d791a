#include "run_config.h"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>

#include "pairctx/errors.h"

namespace pairctx::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& known) {
  if (!obj.is_object()) throw ValidationError(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!known.contains(key)) {
      throw ValidationError("unknown config key " + where + "." + key);
    }
  }
}

template <typename T>
void read(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void read_path(const json& obj, const char* key, const fs::path& base,
               fs::path& dst) {
  if (!obj.contains(key)) return;
  fs::path p = obj.at(key).get<std::string>();
  dst = p.is_absolute() ? p : base / p;
}

}  // namespace

nlohmann::ordered_json RunConfig::to_json() const {
  nlohmann::ordered_json j;
  j["paths"] = {{"corpus", paths.corpus.string()},
                {"annotations", paths.annotations.string()},
                {"ner", paths.ner.string()},
                {"vocab", paths.vocab.string()},
                {"output_dir", paths.output_dir.string()}};
  j["split"] = {{"ratio", split.ratio},
                {"max_seed_trials", split.max_seed_trials},
                {"kl_threshold_bits", split.kl_threshold_bits}};
  j["encode"] = {{"max_len", encode.max_len},
                 {"include_title", encode.include_title},
                 {"lowercase", encode.tokenizer.lowercase},
                 {"dev_include_unrecoverable", dev_include_unrecoverable}};
  j["model"] = {{"num_layers", model.num_layers},
                {"num_heads", model.num_heads},
                {"hidden_dim", model.hidden_dim},
                {"ffn_dim", model.ffn_dim},
                {"max_positions", model.max_positions}};
  j["train"] = {{"batch_size", train.batch_size},
                {"max_epochs", train.max_epochs},
                {"patience", train.patience},
                {"num_restarts", train.num_restarts},
                {"criterion", std::string(criterion_token(train.criterion))},
                {"learning_rate", train.learning_rate},
                {"classifier_dropout", train.classifier_dropout},
                {"master_seed", train.master_seed},
                {"num_threads", train.num_threads}};
  j["baseline"] = {{"runs", baseline_runs}, {"seed", baseline_seed}};
  return j;
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
  RunConfig cfg;
  reject_unknown(j, "config",
                 {"paths", "split", "encode", "model", "train", "baseline"});
  try {
    if (j.contains("paths")) {
      const json& p = j.at("paths");
      reject_unknown(p, "paths",
                     {"corpus", "annotations", "ner", "vocab", "output_dir"});
      read_path(p, "corpus", base_dir, cfg.paths.corpus);
      read_path(p, "annotations", base_dir, cfg.paths.annotations);
      read_path(p, "ner", base_dir, cfg.paths.ner);
      read_path(p, "vocab", base_dir, cfg.paths.vocab);
      read_path(p, "output_dir", base_dir, cfg.paths.output_dir);
    }
    if (cfg.paths.output_dir.is_relative()) {
      cfg.paths.output_dir = base_dir / cfg.paths.output_dir;
    }
    if (j.contains("split")) {
      const json& s = j.at("split");
      reject_unknown(s, "split",
                     {"ratio", "max_seed_trials", "kl_threshold_bits"});
      read(s, "ratio", cfg.split.ratio);
      read(s, "max_seed_trials", cfg.split.max_seed_trials);
      read(s, "kl_threshold_bits", cfg.split.kl_threshold_bits);
    }
    if (j.contains("encode")) {
      const json& e = j.at("encode");
      reject_unknown(e, "encode",
                     {"max_len", "include_title", "lowercase",
                      "dev_include_unrecoverable"});
      read(e, "max_len", cfg.encode.max_len);
      read(e, "include_title", cfg.encode.include_title);
      read(e, "lowercase", cfg.encode.tokenizer.lowercase);
      read(e, "dev_include_unrecoverable", cfg.dev_include_unrecoverable);
    }
    if (j.contains("model")) {
      const json& m = j.at("model");
      reject_unknown(m, "model",
                     {"num_layers", "num_heads", "hidden_dim", "ffn_dim",
                      "max_positions"});
      read(m, "num_layers", cfg.model.num_layers);
      read(m, "num_heads", cfg.model.num_heads);
      read(m, "hidden_dim", cfg.model.hidden_dim);
      read(m, "ffn_dim", cfg.model.ffn_dim);
      read(m, "max_positions", cfg.model.max_positions);
    }
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t, "train",
                     {"batch_size", "max_epochs", "patience", "num_restarts",
                      "criterion", "learning_rate", "classifier_dropout",
                      "master_seed", "num_threads"});
      read(t, "batch_size", cfg.train.batch_size);
      read(t, "max_epochs", cfg.train.max_epochs);
      read(t, "patience", cfg.train.patience);
      read(t, "num_restarts", cfg.train.num_restarts);
      read(t, "learning_rate", cfg.train.learning_rate);
      read(t, "classifier_dropout", cfg.train.classifier_dropout);
      read(t, "master_seed", cfg.train.master_seed);
      read(t, "num_threads", cfg.train.num_threads);
      if (t.contains("criterion")) {
        const auto token = t.at("criterion").get<std::string>();
        auto c = parse_criterion(token);
        if (!c) throw ValidationError("unknown criterion '" + token + "'");
        cfg.train.criterion = *c;
      }
    }
    if (j.contains("baseline")) {
      const json& b = j.at("baseline");
      reject_unknown(b, "baseline", {"runs", "seed"});
      read(b, "runs", cfg.baseline_runs);
      read(b, "seed", cfg.baseline_seed);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  return parse_run_config(j, path.parent_path());
}

void apply_seed_env(RunConfig& cfg) {
  const char* v = std::getenv("PAIRCTX_SEED");
  if (v == nullptr || *v == '\0') return;
  const std::string s(v);
  std::uint64_t seed = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw ValidationError("PAIRCTX_SEED must be a nonnegative integer, got '" +
                          s + "'");
  }
  cfg.train.master_seed = seed;
}

}  // namespace pairctx::cli
