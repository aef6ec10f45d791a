#ifndef PAIRCTX_TOOLS_RUN_CONFIG_H_
#define PAIRCTX_TOOLS_RUN_CONFIG_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "pairctx/encoder_input.h"
#include "pairctx/net.h"
#include "pairctx/splitter.h"
#include "pairctx/trainer.h"

namespace pairctx::cli {

struct Paths {
  std::filesystem::path corpus;
  std::filesystem::path annotations;
  std::filesystem::path ner;
  std::filesystem::path vocab;
  std::filesystem::path output_dir = "out";
};

struct RunConfig {
  Paths paths;
  SplitOptions split;
  EncodeOptions encode;
  // Dev keeps gold positives whose entities the NER missed, so every gold
  // relation is scored.
  bool dev_include_unrecoverable = true;
  ModelConfig model;
  TrainConfig train;
  std::size_t baseline_runs = 1000;
  std::uint64_t baseline_seed = 0;

  nlohmann::ordered_json to_json() const;
};

// Reads a JSON run configuration. Relative paths are resolved against the
// config file's directory. Unknown keys are errors.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const nlohmann::json& j,
                           const std::filesystem::path& base_dir);

// PAIRCTX_SEED, when set, replaces train.master_seed. Throws on a value that
// is not a nonnegative integer.
void apply_seed_env(RunConfig& cfg);

}  // namespace pairctx::cli

#endif  // PAIRCTX_TOOLS_RUN_CONFIG_H_
