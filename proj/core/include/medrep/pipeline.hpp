#pragma once

#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "medrep/checkpoint.hpp"
#include "medrep/config.hpp"
#include "medrep/decoder.hpp"
#include "medrep/metrics.hpp"
#include "medrep/synthetic.hpp"
#include "medrep/text.hpp"
#include "medrep/trainer.hpp"

namespace medrep {

// ---- data preparation -------------------------------------------------------

/// Keyword phrases run through normalize(); multi-word keywords contribute
/// one token each, in dataset order.
TokenList keyword_tokens(const Sample& sample);

/// Report vocabulary (V) and keyword-inclusive vocabulary (V_k), both from
/// the training split only.
Vocabulary build_report_vocab(std::span<const Sample> train);
Vocabulary build_keyword_vocab(std::span<const Sample> train);

EncodedSample encode_sample(const Sample& sample, const Vocabulary& vocab,
                            const Vocabulary& keyword_vocab, std::size_t max_len);

Architecture architecture_for(const RunConfig& config, std::size_t feature_size,
                              const Vocabulary& vocab, const Vocabulary& keyword_vocab);

// ---- in-memory stages (used by the commands and the acceptance suite) ------

struct TrainedModel {
  ModelParams params;
  Vocabulary vocab;
  Vocabulary keyword_vocab;
  TrainTrace trace;
};

TrainedModel train_model(const DatasetSplit& data, const RunConfig& config,
                         const EpochCallback& on_epoch = {});

struct GeneratedReport {
  std::string id;
  std::string report;
  double log_prob = 0.0;
};

/// Beam search with config.beam_k (greedy when `greedy`), one per sample.
std::vector<GeneratedReport> generate_reports(const ModelParams& params,
                                              const Vocabulary& vocab,
                                              const Vocabulary& keyword_vocab,
                                              std::span<const Sample> samples,
                                              const RunConfig& config, bool greedy = false);

/// Aligns candidates to references by id (every reference image needs
/// exactly one candidate and vice versa; ContractError listing the
/// offenders otherwise). Repeated reference ids give multiple references.
MetricReport score_reports(std::span<const GeneratedReport> candidates,
                           std::span<const Sample> references, bool bleu_smoothing = false);

// ---- commands ---------------------------------------------------------------

/// Generates and writes the dataset; returns the manifest line.
std::string cmd_gen_data(const SyntheticSpec& spec, const std::filesystem::path& out);

struct TrainArtifacts {
  std::filesystem::path checkpoint;
  std::filesystem::path trace;
  TrainTrace result;
};

/// Reads config.dataset, trains, and writes <checkpoint>, <checkpoint>.vocab,
/// <checkpoint>.kwvocab and the JSON loss trace.
TrainArtifacts cmd_train(const RunConfig& config, const std::filesystem::path& checkpoint,
                         const std::filesystem::path& trace, const EpochCallback& on_epoch = {});

struct LoadedModel {
  Checkpoint checkpoint;
  Vocabulary vocab;
  Vocabulary keyword_vocab;
};

/// Checkpoint plus its vocabulary files; ContractError when their sizes
/// disagree with the checkpoint.
LoadedModel load_model(const std::filesystem::path& checkpoint);

/// Writes JSONL {"id", "report", "log_prob"} for every sample of `split`.
std::vector<GeneratedReport> cmd_generate(const std::filesystem::path& checkpoint,
                                          const std::filesystem::path& dataset,
                                          SplitName split, std::size_t beam_k, bool greedy,
                                          const std::filesystem::path& out);

void write_candidates(std::span<const GeneratedReport> reports, const std::filesystem::path& out);
std::vector<GeneratedReport> read_candidates(const std::filesystem::path& path);

MetricReport cmd_evaluate(const std::filesystem::path& candidates,
                          const std::filesystem::path& dataset, SplitName split,
                          bool bleu_smoothing = false);

struct AblationRow {
  FusionStrategy fusion;
  MetricReport metrics;
  double final_loss = 0.0;
};

/// Trains and scores every fusion strategy (none, sum, mul, average,
/// lstm-context) with the same seed on the test split.
std::vector<AblationRow> run_ablation(const DatasetSplit& data, const RunConfig& config,
                                      const std::function<void(const AblationRow&)>& on_row = {});

std::string ablation_json(std::span<const AblationRow> rows, const RunConfig& config);
std::string ablation_markdown(std::span<const AblationRow> rows);

/// run_ablation on config.dataset; writes ablation.json and ablation.md into
/// config.output_dir and returns the rows.
std::vector<AblationRow> cmd_ablate(const RunConfig& config,
                                    const std::function<void(const AblationRow&)>& on_row = {});

}  // namespace medrep
