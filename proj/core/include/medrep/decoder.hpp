#pragma once

#include <span>
#include <vector>

#include "medrep/autodiff.hpp"
#include "medrep/model.hpp"
#include "medrep/text.hpp"

namespace medrep {

class Rng;

/// A sample after vocabulary lookup: what the model actually consumes.
struct EncodedSample {
  std::vector<double> features;    // F
  std::vector<TokenId> keywords;   // keyword-vocabulary ids, unpadded
  TokenSequence report;            // report-vocabulary ids, max_len long
};

/// Recurrent decoder state on a tape. `prefix` holds every (post-dropout)
/// input row fed so far and is only used in bi-prefix mode.
struct DecoderState {
  LstmState forward;
  std::vector<ad::Var> prefix;
};

DecoderState initial_decoder_state(ad::Tape& tape, const ModelParams& params,
                                   std::size_t rows);

struct DecoderStep {
  ad::Var logits;  // rows x V
  DecoderState state;
};

/// One step on [e_t, k_final, x_t] (k_final may be invalid when K = 0).
/// Dropout hits the concatenated input and the hidden features before the
/// output layer; `dropout_rng == nullptr` means eval mode (no dropout).
DecoderStep decode_step(const ModelParams& params, const DecoderState& state,
                        ad::Var e, ad::Var k, ad::Var x, double dropout_rate,
                        Rng* dropout_rng);

/// Teacher-forced summed NLL of every sample in `batch` (sum over samples,
/// not mean). Step t feeds S_t and scores S_{t+1}; PAD targets are skipped,
/// START is never a target, END always is.
ad::Var sequence_loss(ad::Tape& tape, const ModelParams& params,
                      std::span<const EncodedSample* const> batch,
                      double dropout_rate, Rng* dropout_rng);

/// Eval-mode loss of a single sample.
double teacher_forced_loss(const ModelParams& params, const EncodedSample& sample);

// ---- value-level inference -------------------------------------------------

/// Encoder outputs for one sample, computed once per decode.
struct EncodedInputs {
  std::vector<double> image_emb;  // E
  std::vector<double> context;    // K (empty for fusion=none)
};

EncodedInputs encode_inputs(const ModelParams& params,
                            std::span<const double> features,
                            std::span<const TokenId> keywords);

/// Plain-vector decoder state; copyable, so beam hypotheses can own one.
struct DecoderSnapshot {
  std::vector<double> h;
  std::vector<double> c;
  std::vector<std::vector<double>> prefix;  // bi-prefix only
};

DecoderSnapshot initial_snapshot(const ModelParams& params);

/// Eval-mode decode_step on plain vectors; returns logits and advances
/// `state`.
std::vector<double> decode_step(const ModelParams& params, DecoderSnapshot& state,
                                std::span<const double> e,
                                std::span<const double> k,
                                std::span<const double> x);

/// Same, with x_t = W_e[:, token].
std::vector<double> decode_token(const ModelParams& params,
                                 const EncodedInputs& inputs,
                                 DecoderSnapshot& state, TokenId token);

}  // namespace medrep
