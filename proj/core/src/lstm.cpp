#include "medrep/lstm.hpp"

#include <cmath>
#include <string>

#include "medrep/errors.hpp"
#include "medrep/rng.hpp"

namespace medrep {

Tensor glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> values(rows * cols);
  for (double& v : values) v = rng.uniform(-limit, limit);
  return Tensor::matrix(rows, cols, std::move(values));
}

LstmCellParams LstmCellParams::zeros(std::size_t input_size,
                                     std::size_t hidden_size) {
  return {Tensor::zeros({4 * hidden_size, input_size}),
          Tensor::zeros({4 * hidden_size, hidden_size}),
          Tensor::zeros({4 * hidden_size})};
}

LstmCellParams LstmCellParams::glorot(std::size_t input_size,
                                      std::size_t hidden_size, Rng& rng) {
  LstmCellParams p{glorot_uniform(4 * hidden_size, input_size, rng),
                   glorot_uniform(4 * hidden_size, hidden_size, rng),
                   Tensor::zeros({4 * hidden_size})};
  for (std::size_t i = hidden_size; i < 2 * hidden_size; ++i) p.bias[i] = 1.0;
  return p;
}

LstmState zero_state(ad::Tape& tape, std::size_t rows, std::size_t hidden_size) {
  return {tape.constant(Tensor::zeros({rows, hidden_size})),
          tape.constant(Tensor::zeros({rows, hidden_size}))};
}

LstmState lstm_step(ad::Var x, LstmState state, const LstmCellParams& params) {
  const std::size_t hidden = params.hidden_size();
  const Tensor& xv = x.value();
  if (xv.cols() != params.input_size()) {
    throw ShapeError("lstm_step: input " + to_string(xv.shape()) +
                     " does not match cell input width " +
                     std::to_string(params.input_size()));
  }
  if (state.h.value().cols() != hidden || state.c.value().cols() != hidden ||
      state.h.value().rows() != xv.rows() || state.c.value().rows() != xv.rows()) {
    throw ShapeError("lstm_step: state " + to_string(state.h.value().shape()) +
                     "/" + to_string(state.c.value().shape()) +
                     " does not match hidden size " + std::to_string(hidden) +
                     " and batch " + std::to_string(xv.rows()));
  }
  ad::Tape& tape = x.tape();
  const ad::Var w_x = tape.parameter(params.input_weights);
  const ad::Var w_h = tape.parameter(params.hidden_weights);
  const ad::Var b = tape.parameter(params.bias);

  const ad::Var gates = ad::add_bias(
      ad::add(ad::matmul_nt(x, w_x), ad::matmul_nt(state.h, w_h)), b);
  const ad::Var input_gate = ad::sigmoid(ad::slice_cols(gates, 0, hidden));
  const ad::Var forget_gate = ad::sigmoid(ad::slice_cols(gates, hidden, hidden));
  const ad::Var candidate = ad::tanh(ad::slice_cols(gates, 2 * hidden, hidden));
  const ad::Var output_gate =
      ad::sigmoid(ad::slice_cols(gates, 3 * hidden, hidden));

  const ad::Var c_next = ad::add(ad::mul(forget_gate, state.c),
                                 ad::mul(input_gate, candidate));
  const ad::Var h_next = ad::mul(output_gate, ad::tanh(c_next));
  return {h_next, c_next};
}

std::pair<std::vector<double>, std::vector<double>> lstm_step(
    std::span<const double> x, std::span<const double> h,
    std::span<const double> c, const LstmCellParams& params) {
  ad::Tape tape(ad::GradMode::kInference);
  const auto as_row = [](std::span<const double> v) {
    return Tensor::matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
  };
  const LstmState next =
      lstm_step(tape.constant(as_row(x)),
                {tape.constant(as_row(h)), tape.constant(as_row(c))}, params);
  const auto hv = next.h.value().values();
  const auto cv = next.c.value().values();
  return {{hv.begin(), hv.end()}, {cv.begin(), cv.end()}};
}

}  // namespace medrep
