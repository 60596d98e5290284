#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "medrep/decoder.hpp"
#include "medrep/model.hpp"

namespace medrep {

enum class OptimizerKind { kAdam, kSgd };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view text);  // UsageError on unknown

struct TrainOptions {
  double lr = 0.001;
  std::size_t epochs = 2;
  std::size_t batch_size = 64;
  double dropout = 0.5;
  OptimizerKind optimizer = OptimizerKind::kAdam;
  std::uint64_t seed = 1;  // shuffle and dropout streams
};

struct TrainTrace {
  // epoch_loss[0] is the eval-mode mean per-sequence loss before training,
  // epoch_loss[e] the same quantity after epoch e.
  std::vector<double> epoch_loss;
  // Mean loss of every minibatch as it was trained on (dropout active).
  std::vector<std::vector<double>> batch_loss;
  // Mean of T * ln V over the training samples: the uniform model's loss.
  double uniform_loss = 0.0;
};

/// Called with (0, initial eval loss) and then after every epoch.
using EpochCallback = std::function<void(std::size_t, double)>;

/// Minibatch training on the mean batch loss. Samples are reshuffled every
/// epoch by a seeded Fisher-Yates pass; the last batch may be short.
TrainTrace train(ModelParams& params, std::span<const EncodedSample> samples,
                 const TrainOptions& options, const EpochCallback& on_epoch = {});

/// Eval-mode mean per-sequence loss.
double mean_sequence_loss(const ModelParams& params,
                          std::span<const EncodedSample> samples,
                          std::size_t batch_size = 64);

/// Mean over samples of T * ln V, T counting every target up to END.
double uniform_loss(std::span<const EncodedSample> samples, std::size_t vocab_size);

}  // namespace medrep
