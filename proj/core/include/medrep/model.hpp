#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "medrep/lstm.hpp"
#include "medrep/tensor.hpp"

namespace medrep {

/// How image and keyword representations are combined before decoding.
///   kLstmContext  image then keywords through an LSTM, last hidden state
///   kAverage / kSum / kMul  elementwise over {image} + keyword embeddings
///   kNone         keywords ignored entirely
enum class FusionStrategy { kLstmContext, kAverage, kSum, kMul, kNone };

/// kCausal runs one forward LSTM. kBiPrefix additionally re-runs a backward
/// LSTM over the inputs seen so far at every step and concatenates both
/// final hidden states before the output layer.
enum class DecoderMode { kCausal, kBiPrefix };

std::string_view to_string(FusionStrategy fusion);
std::string_view to_string(DecoderMode mode);
FusionStrategy parse_fusion(std::string_view text);  // UsageError on unknown
DecoderMode parse_decoder_mode(std::string_view text);

struct Architecture {
  std::size_t feature_size = 0;        // F
  std::size_t embedding_size = 300;    // E
  std::size_t hidden_size = 256;       // H
  std::size_t vocab_size = 0;          // V
  std::size_t keyword_vocab_size = 0;  // V_k
  FusionStrategy fusion = FusionStrategy::kLstmContext;
  DecoderMode mode = DecoderMode::kCausal;

  /// Width K of the fused context vector: H for kLstmContext, E for the
  /// elementwise baselines, 0 for kNone.
  std::size_t context_size() const;
  std::size_t decoder_input_size() const { return 2 * embedding_size + context_size(); }
  std::size_t projection_input_size() const {
    return mode == DecoderMode::kBiPrefix ? 2 * hidden_size : hidden_size;
  }
  bool uses_keywords() const { return fusion != FusionStrategy::kNone; }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

struct EncoderParams {
  Tensor image_projection;                   // W_d, E x F (shared with decoder)
  std::optional<Tensor> keyword_embedding;   // W_k, E x V_k
  std::optional<LstmCellParams> cell;        // input E, hidden H
};

struct DecoderParams {
  Tensor word_embedding;                     // W_e, E x V
  LstmCellParams cell;                       // input 2E + K, hidden H
  std::optional<LstmCellParams> backward_cell;  // bi-prefix only
  Tensor output_weights;                     // V x H (V x 2H in bi-prefix)
  Tensor output_bias;                        // V
};

using NamedTensor = std::pair<std::string, Tensor*>;
using ConstNamedTensor = std::pair<std::string, const Tensor*>;

/// Every learnable tensor of the report generator.
struct ModelParams {
  Architecture arch;
  EncoderParams encoder;
  DecoderParams decoder;

  /// Glorot-uniform weights, forget-gate biases 1, other biases 0. Each
  /// tensor draws from its own stream keyed by (seed, tensor name), so
  /// models that share a seed share every tensor they have in common.
  static ModelParams initialize(const Architecture& arch, std::uint64_t seed);
  static ModelParams zeros(const Architecture& arch);

  /// Fixed order used by checkpoints and optimizers. Absent blocks (W_k and
  /// the encoder cell for kNone, the encoder cell for the elementwise
  /// baselines, the backward cell in causal mode) are simply not listed.
  std::vector<NamedTensor> named_tensors();
  std::vector<ConstNamedTensor> named_tensors() const;
  std::vector<Tensor*> tensors();

  void track();
  void zero_grad();
  std::size_t parameter_count() const;

  /// Throws ShapeError when any tensor disagrees with `arch`.
  void validate() const;
};

}  // namespace medrep
