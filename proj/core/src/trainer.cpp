#include "medrep/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "medrep/errors.hpp"
#include "medrep/optim.hpp"
#include "medrep/rng.hpp"

namespace medrep {

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::kAdam ? "adam" : "sgd";
}

OptimizerKind parse_optimizer(std::string_view text) {
  if (text == "adam") return OptimizerKind::kAdam;
  if (text == "sgd") return OptimizerKind::kSgd;
  throw UsageError("unknown optimizer '" + std::string(text) + "' (expected adam or sgd)");
}

double mean_sequence_loss(const ModelParams& params,
                          std::span<const EncodedSample> samples,
                          std::size_t batch_size) {
  if (samples.empty()) throw ContractError("mean_sequence_loss: no samples");
  if (batch_size == 0) throw ContractError("batch size must be positive");
  double total = 0.0;
  std::vector<const EncodedSample*> batch;
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    batch.clear();
    const std::size_t end = std::min(samples.size(), start + batch_size);
    for (std::size_t i = start; i < end; ++i) batch.push_back(&samples[i]);
    ad::Tape tape(ad::GradMode::kInference);
    total += sequence_loss(tape, params, batch, 0.0, nullptr).value().item();
  }
  return total / static_cast<double>(samples.size());
}

double uniform_loss(std::span<const EncodedSample> samples, std::size_t vocab_size) {
  if (samples.empty()) throw ContractError("uniform_loss: no samples");
  double targets = 0.0;
  for (const auto& s : samples) targets += static_cast<double>(s.report.end_position());
  return targets * std::log(static_cast<double>(vocab_size)) /
         static_cast<double>(samples.size());
}

TrainTrace train(ModelParams& params, std::span<const EncodedSample> samples,
                 const TrainOptions& options, const EpochCallback& on_epoch) {
  if (samples.empty()) throw ContractError("train: empty training set");
  if (options.batch_size == 0) throw ContractError("train: batch size must be positive");
  if (!(options.dropout >= 0.0 && options.dropout < 1.0)) {
    throw ContractError("train: dropout must lie in [0, 1)");
  }
  if (!(options.lr >= 0.0) || !std::isfinite(options.lr)) {
    throw ContractError("train: learning rate must be finite and >= 0");
  }

  params.track();
  params.zero_grad();
  const std::vector<Tensor*> tensors = params.tensors();
  Adam adam(AdamOptions{.lr = options.lr});
  Rng shuffle_rng = Rng::stream(options.seed, "shuffle");
  Rng dropout_rng = Rng::stream(options.seed, "dropout");

  TrainTrace trace;
  trace.uniform_loss = uniform_loss(samples, params.arch.vocab_size);
  trace.epoch_loss.push_back(mean_sequence_loss(params, samples, options.batch_size));
  if (on_epoch) on_epoch(0, trace.epoch_loss.back());

  std::vector<std::size_t> order(samples.size());
  std::vector<const EncodedSample*> batch;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    auto& losses = trace.batch_loss.emplace_back();
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      batch.clear();
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      for (std::size_t i = start; i < end; ++i) batch.push_back(&samples[order[i]]);

      ad::Tape tape;
      const ad::Var total =
          sequence_loss(tape, params, batch, options.dropout, &dropout_rng);
      const ad::Var mean = ad::scale(total, 1.0 / static_cast<double>(batch.size()));
      ad::backward(mean, tensors);
      losses.push_back(mean.value().item());

      if (options.optimizer == OptimizerKind::kAdam) {
        adam.step(tensors);
      } else {
        sgd_step(tensors, options.lr);
      }
    }
    trace.epoch_loss.push_back(mean_sequence_loss(params, samples, options.batch_size));
    if (on_epoch) on_epoch(epoch, trace.epoch_loss.back());
  }
  return trace;
}

}  // namespace medrep
