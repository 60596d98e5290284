#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "medrep/model.hpp"
#include "medrep/trainer.hpp"

namespace medrep {

/// Everything a train/generate/ablate run needs, with the reference
/// hyperparameters as defaults.
struct RunConfig {
  std::size_t embedding_size = 300;
  std::size_t hidden_size = 256;
  double lr = 0.001;
  std::size_t epochs = 2;
  std::size_t batch_size = 64;
  std::size_t max_len = 50;
  std::size_t beam_k = 3;
  double dropout = 0.5;
  FusionStrategy fusion = FusionStrategy::kLstmContext;
  DecoderMode decoder_mode = DecoderMode::kCausal;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 1;
  bool length_normalize = false;
  bool bleu_smoothing = false;
  std::filesystem::path dataset = "data/dataset.jsonl";
  std::filesystem::path output_dir = "runs";

  TrainOptions train_options() const;
  void validate() const;  // UsageError on out-of-range values

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Sets one field from its flat key (the config-file spelling, e.g.
/// "embedding_size", "fusion", "decoder_mode"). UsageError on an unknown
/// key or unparsable value.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value);

/// Flat `key = value` lines; '#' starts a comment, blank lines are skipped.
/// ParseError (with line number) on a malformed line or unknown key.
void apply_config_file(RunConfig& config, const std::filesystem::path& path);

/// Path overrides from MEDREP_DATASET and MEDREP_OUTPUT_DIR.
void apply_environment(RunConfig& config);

std::string to_json(const RunConfig& config);
RunConfig config_from_json(std::string_view text);  // ParseError when malformed

}  // namespace medrep
