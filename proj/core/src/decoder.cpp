#include "medrep/decoder.hpp"

#include <algorithm>
#include <string>

#include "medrep/encoder.hpp"
#include "medrep/errors.hpp"

namespace medrep {

namespace {

Tensor row(std::span<const double> v) {
  return Tensor::matrix(1, v.size(), {v.begin(), v.end()});
}

std::vector<double> values_of(ad::Var v) {
  const auto s = v.value().values();
  return {s.begin(), s.end()};
}

void require_width(ad::Var v, std::size_t width, const char* what) {
  if (v.value().cols() != width) {
    throw ShapeError(std::string("decode_step: ") + what + " has shape " +
                     to_string(v.value().shape()) + ", expected width " +
                     std::to_string(width));
  }
}

}  // namespace

DecoderState initial_decoder_state(ad::Tape& tape, const ModelParams& params,
                                   std::size_t rows) {
  return {zero_state(tape, rows, params.arch.hidden_size), {}};
}

DecoderStep decode_step(const ModelParams& params, const DecoderState& state,
                        ad::Var e, ad::Var k, ad::Var x, double dropout_rate,
                        Rng* dropout_rng) {
  const Architecture& arch = params.arch;
  require_width(e, arch.embedding_size, "e_t");
  require_width(x, arch.embedding_size, "x_t");
  const std::size_t K = arch.context_size();
  if (K == 0 && k.valid()) throw ShapeError("decode_step: fusion=none takes no k_final");
  if (K > 0) {
    if (!k.valid()) throw ShapeError("decode_step: missing k_final");
    require_width(k, K, "k_final");
  }

  ad::Var input = K > 0 ? ad::concat_cols(std::vector<ad::Var>{e, k, x})
                        : ad::concat_cols(std::vector<ad::Var>{e, x});
  if (dropout_rng) input = ad::dropout(input, dropout_rate, *dropout_rng);

  DecoderStep out;
  out.state.forward = lstm_step(input, state.forward, params.decoder.cell);
  ad::Var features = out.state.forward.h;
  if (arch.mode == DecoderMode::kBiPrefix) {
    out.state.prefix = state.prefix;
    out.state.prefix.push_back(input);
    const LstmCellParams& back = *params.decoder.backward_cell;
    LstmState b = zero_state(input.tape(), input.value().rows(), arch.hidden_size);
    for (auto it = out.state.prefix.rbegin(); it != out.state.prefix.rend(); ++it) {
      b = lstm_step(*it, b, back);
    }
    features = ad::concat_cols(std::vector<ad::Var>{features, b.h});
  }
  if (dropout_rng) features = ad::dropout(features, dropout_rate, *dropout_rng);

  ad::Tape& tape = input.tape();
  out.logits = ad::add_bias(
      ad::matmul_nt(features, tape.parameter(params.decoder.output_weights)),
      tape.parameter(params.decoder.output_bias));
  return out;
}

ad::Var sequence_loss(ad::Tape& tape, const ModelParams& params,
                      std::span<const EncodedSample* const> batch,
                      double dropout_rate, Rng* dropout_rng) {
  if (batch.empty()) throw ContractError("sequence_loss: empty batch");
  const std::size_t rows = batch.size();
  const std::size_t F = params.arch.feature_size;

  std::vector<double> features;
  features.reserve(rows * F);
  std::vector<std::vector<TokenId>> keywords;
  keywords.reserve(rows);
  std::size_t steps = 0;
  for (const EncodedSample* s : batch) {
    if (s->features.size() != F) {
      throw ShapeError("sample has " + std::to_string(s->features.size()) +
                       " features, model expects " + std::to_string(F));
    }
    features.insert(features.end(), s->features.begin(), s->features.end());
    keywords.push_back(s->keywords);
    steps = std::max(steps, s->report.end_position());
  }

  const ad::Var e =
      embed_images(tape, Tensor::matrix(rows, F, std::move(features)), params.encoder);
  const ad::Var k = context_vector(params, e, keywords);
  const ad::Var table = tape.parameter(params.decoder.word_embedding);

  DecoderState state = initial_decoder_state(tape, params, rows);
  ad::Var total;
  std::vector<TokenId> inputs(rows), targets(rows);
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t b = 0; b < rows; ++b) {
      const auto& ids = batch[b]->report.ids;
      inputs[b] = t < ids.size() ? ids[t] : kPad;
      const TokenId next = t + 1 < ids.size() ? ids[t + 1] : kPad;
      targets[b] = next == kPad ? ad::kIgnoreTarget : next;
    }
    DecoderStep step = decode_step(params, state, e, k, ad::gather_cols(table, inputs),
                                   dropout_rate, dropout_rng);
    const ad::Var nll = ad::softmax_nll(step.logits, targets);
    total = total.valid() ? ad::add(total, nll) : nll;
    state = std::move(step.state);
  }
  return total;
}

double teacher_forced_loss(const ModelParams& params, const EncodedSample& sample) {
  ad::Tape tape(ad::GradMode::kInference);
  const EncodedSample* one[] = {&sample};
  return sequence_loss(tape, params, one, 0.0, nullptr).value().item();
}

EncodedInputs encode_inputs(const ModelParams& params,
                            std::span<const double> features,
                            std::span<const TokenId> keywords) {
  ad::Tape tape(ad::GradMode::kInference);
  if (features.size() != params.arch.feature_size) {
    throw ShapeError("sample has " + std::to_string(features.size()) +
                     " features, model expects " +
                     std::to_string(params.arch.feature_size));
  }
  const ad::Var e = embed_images(tape, row(features), params.encoder);
  const std::vector<std::vector<TokenId>> lists{{keywords.begin(), keywords.end()}};
  const ad::Var k = context_vector(params, e, lists);
  return {values_of(e), k.valid() ? values_of(k) : std::vector<double>{}};
}

DecoderSnapshot initial_snapshot(const ModelParams& params) {
  return {std::vector<double>(params.arch.hidden_size, 0.0),
          std::vector<double>(params.arch.hidden_size, 0.0),
          {}};
}

std::vector<double> decode_step(const ModelParams& params, DecoderSnapshot& state,
                                std::span<const double> e,
                                std::span<const double> k,
                                std::span<const double> x) {
  ad::Tape tape(ad::GradMode::kInference);
  DecoderState s{{tape.constant(row(state.h)), tape.constant(row(state.c))}, {}};
  for (const auto& p : state.prefix) s.prefix.push_back(tape.constant(row(p)));
  const ad::Var kv = k.empty() ? ad::Var{} : tape.constant(row(k));
  const DecoderStep step = decode_step(params, s, tape.constant(row(e)), kv,
                                       tape.constant(row(x)), 0.0, nullptr);
  state.h = values_of(step.state.forward.h);
  state.c = values_of(step.state.forward.c);
  if (params.arch.mode == DecoderMode::kBiPrefix) {
    state.prefix.push_back(values_of(step.state.prefix.back()));
  }
  return values_of(step.logits);
}

std::vector<double> decode_token(const ModelParams& params,
                                 const EncodedInputs& inputs,
                                 DecoderSnapshot& state, TokenId token) {
  const Tensor& w_e = params.decoder.word_embedding;
  if (token < 0 || static_cast<std::size_t>(token) >= w_e.cols()) {
    throw IndexError("token id " + std::to_string(token) + " outside vocabulary of " +
                     std::to_string(w_e.cols()));
  }
  std::vector<double> x(w_e.rows());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = w_e.at(i, static_cast<std::size_t>(token));
  return decode_step(params, state, inputs.image_emb, inputs.context, x);
}

}  // namespace medrep
