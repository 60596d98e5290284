#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "medrep/autodiff.hpp"
#include "medrep/tensor.hpp"

namespace medrep {

class Rng;

/// Packed parameters of one LSTM cell.
///
/// Gate blocks are stacked row-wise in the order [input, forget, cell,
/// output]: rows [0, H) drive the input gate, [H, 2H) the forget gate,
/// [2H, 3H) the tanh candidate and [3H, 4H) the output gate. The same order
/// is used in checkpoints.
struct LstmCellParams {
  Tensor input_weights;   // 4H x D
  Tensor hidden_weights;  // 4H x H
  Tensor bias;            // 4H

  std::size_t input_size() const { return input_weights.cols(); }
  std::size_t hidden_size() const { return hidden_weights.cols(); }

  static LstmCellParams zeros(std::size_t input_size, std::size_t hidden_size);
  // Glorot-uniform weights, forget-gate bias 1, other biases 0.
  static LstmCellParams glorot(std::size_t input_size, std::size_t hidden_size,
                               Rng& rng);

  std::vector<Tensor*> tensors() {
    return {&input_weights, &hidden_weights, &bias};
  }
};

/// Uniform in [-a, a] with a = sqrt(6 / (fan_in + fan_out)), where a
/// rows x cols matrix has fan_in = cols and fan_out = rows.
Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng);

struct LstmState {
  ad::Var h;
  ad::Var c;
};

/// One step on a batch of rows: x[B x D], h, c [B x H].
///   i, f, o = sigmoid(gate pre-activations), g = tanh(candidate)
///   c' = f * c + i * g,  h' = o * tanh(c')
LstmState lstm_step(ad::Var x, LstmState state, const LstmCellParams& params);

/// Zero state for `rows` rows, as constants on `tape`.
LstmState zero_state(ad::Tape& tape, std::size_t rows, std::size_t hidden_size);

/// Value-level single step on plain vectors (no gradients).
std::pair<std::vector<double>, std::vector<double>> lstm_step(
    std::span<const double> x, std::span<const double> h,
    std::span<const double> c, const LstmCellParams& params);

}  // namespace medrep
