#pragma once

#include <span>
#include <vector>

#include "medrep/autodiff.hpp"
#include "medrep/model.hpp"
#include "medrep/text.hpp"

namespace medrep {

// Single-sample forms. These run on an inference tape and are what the
// tests pin against hand-evaluated values.

/// W_d · features. ShapeError when |features| != F.
std::vector<double> embed_image(std::span<const double> features,
                                const EncoderParams& params);

/// Zero-state LSTM over [image_emb, W_k[:, id_0], ..., W_k[:, id_{N-1}]];
/// returns the last hidden state (H values). With no keywords that is the
/// state after the image step. IndexError on an id outside [0, V_k).
std::vector<double> encode_context(std::span<const double> image_emb,
                                   std::span<const TokenId> keyword_ids,
                                   const EncoderParams& params);

/// Elementwise mean / sum / product over {image_emb} + keyword_embs.
/// ContractError for kLstmContext or kNone; ShapeError on width mismatch.
std::vector<double> fuse_baseline(FusionStrategy strategy,
                                  std::span<const double> image_emb,
                                  std::span<const std::vector<double>> keyword_embs);

// Batched tape forms used by training. Row b of every result belongs to
// sample b; keyword lists may have different lengths, shorter rows simply
// stop updating (they are never padded into the recurrence).

/// features: B x F constant rows -> B x E.
ad::Var embed_images(ad::Tape& tape, const Tensor& features,
                     const EncoderParams& params);

ad::Var encode_context(ad::Var image_emb,
                       std::span<const std::vector<TokenId>> keyword_ids,
                       const EncoderParams& params);

ad::Var fuse_baseline(FusionStrategy strategy, ad::Var image_emb,
                      std::span<const std::vector<TokenId>> keyword_ids,
                      const EncoderParams& params);

/// k_final for the architecture's fusion strategy: B x K, or an invalid Var
/// for kNone (K = 0).
ad::Var context_vector(const ModelParams& params, ad::Var image_emb,
                       std::span<const std::vector<TokenId>> keyword_ids);

}  // namespace medrep
