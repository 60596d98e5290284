#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "medrep/text.hpp"

namespace medrep {

/// Parameters of the synthetic report corpus.
///
/// Every report reads
///   <onset> <disease words> with <severity> changes in the <location> region <laterality>
/// with onset in {acute, chronic}, severity in {mild, severe}, location in
/// {macular, peripheral} and laterality in {unilateral, bilateral}. Only the
/// disease is visible in the image features; the four slot words are
/// recoverable from the keywords alone.
struct SyntheticSpec {
  std::size_t num_samples = 1000;
  std::size_t num_diseases = 8;
  std::size_t feature_dim = 16;
  double noise_std = 0.1;
  double keyword_coverage = 1.0;  // fraction of filling tokens given as keywords
  std::size_t keywords_min = 5;
  std::size_t keywords_max = 10;
  double feature_scale = 1.0;     // height of the one-hot disease bump
  std::uint64_t seed = 1;

  void validate() const;  // ContractError when inconsistent
  friend bool operator==(const SyntheticSpec&, const SyntheticSpec&) = default;
};

/// Number of disease templates available (upper bound for num_diseases).
std::size_t disease_template_count();

struct Sample {
  std::string id;
  std::vector<double> features;
  TokenList keywords;
  std::string report;

  friend bool operator==(const Sample&, const Sample&) = default;
};

enum class SplitName { kTrain, kVal, kTest };
std::string_view to_string(SplitName split);
SplitName parse_split(std::string_view text);  // UsageError on unknown

struct DatasetSplit {
  std::vector<Sample> train;
  std::vector<Sample> val;
  std::vector<Sample> test;
  std::optional<SyntheticSpec> spec;  // from the manifest, when generated

  const std::vector<Sample>& part(SplitName split) const;
  std::size_t size() const { return train.size() + val.size() + test.size(); }
  friend bool operator==(const DatasetSplit&, const DatasetSplit&) = default;
};

/// (train, val, test) sizes: floor(20%) each for val and test, rest to train.
struct SplitSizes {
  std::size_t train, val, test;
};
SplitSizes split_sizes(std::size_t num_samples);

/// Deterministic in spec (including seed). Draw order per sample, all from
/// one Rng(seed): disease, onset, severity, location, laterality, keyword
/// count, keyword subset shuffle, then F Box-Muller normals for the noise.
DatasetSplit generate(const SyntheticSpec& spec);

/// JSONL: a manifest line {"manifest": {...}} then one record per line
/// {"id","split","features","keywords","report"}. Doubles are written in
/// shortest round-trip form, so read(write(d)) == d bit-exactly.
void write_dataset(const DatasetSplit& data, const std::filesystem::path& path);
DatasetSplit read_dataset(const std::filesystem::path& path);

std::string manifest_json(const DatasetSplit& data);

}  // namespace medrep
