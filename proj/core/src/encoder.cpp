#include "medrep/encoder.hpp"

#include <algorithm>
#include <string>

#include "medrep/errors.hpp"

namespace medrep {

namespace {

Tensor row(std::span<const double> v) {
  if (v.empty()) throw ShapeError("empty vector");
  return Tensor::matrix(1, v.size(), {v.begin(), v.end()});
}

std::vector<double> values_of(ad::Var v) {
  const auto s = v.value().values();
  return {s.begin(), s.end()};
}

const Tensor& keyword_table(const EncoderParams& params) {
  if (!params.keyword_embedding) {
    throw ContractError("encoder has no keyword embedding (fusion=none)");
  }
  return *params.keyword_embedding;
}

std::size_t longest(std::span<const std::vector<TokenId>> lists) {
  std::size_t n = 0;
  for (const auto& l : lists) n = std::max(n, l.size());
  return n;
}

// Step t of every keyword list: ids (0 where the list is already done) and
// the mask of rows that still have a keyword at t.
void step_ids(std::span<const std::vector<TokenId>> lists, std::size_t t,
              std::vector<TokenId>& ids, std::vector<char>& active) {
  ids.assign(lists.size(), kPad);
  active.assign(lists.size(), 0);
  for (std::size_t b = 0; b < lists.size(); ++b) {
    if (t < lists[b].size()) {
      ids[b] = lists[b][t];
      active[b] = 1;
    }
  }
}

bool all_set(const std::vector<char>& mask) {
  return std::all_of(mask.begin(), mask.end(), [](char c) { return c != 0; });
}

}  // namespace

ad::Var embed_images(ad::Tape& tape, const Tensor& features,
                     const EncoderParams& params) {
  const Tensor& w_d = params.image_projection;
  if (features.cols() != w_d.cols()) {
    throw ShapeError("embed_image: features " + to_string(features.shape()) +
                     " do not match W_d " + to_string(w_d.shape()));
  }
  return ad::matmul_nt(tape.constant(features), tape.parameter(w_d));
}

std::vector<double> embed_image(std::span<const double> features,
                                const EncoderParams& params) {
  ad::Tape tape(ad::GradMode::kInference);
  return values_of(embed_images(tape, row(features), params));
}

ad::Var encode_context(ad::Var image_emb,
                       std::span<const std::vector<TokenId>> keyword_ids,
                       const EncoderParams& params) {
  if (!params.cell) throw ContractError("encoder has no LSTM cell for lstm-context");
  const LstmCellParams& cell = *params.cell;
  const std::size_t rows = image_emb.value().rows();
  if (keyword_ids.size() != rows) {
    throw ShapeError("encode_context: " + std::to_string(keyword_ids.size()) +
                     " keyword lists for " + std::to_string(rows) + " images");
  }
  ad::Tape& tape = image_emb.tape();
  LstmState state = lstm_step(image_emb, zero_state(tape, rows, cell.hidden_size()), cell);
  const std::size_t steps = longest(keyword_ids);
  if (steps == 0) return state.h;
  const ad::Var table = tape.parameter(keyword_table(params));
  std::vector<TokenId> ids;
  std::vector<char> active;
  for (std::size_t t = 0; t < steps; ++t) {
    step_ids(keyword_ids, t, ids, active);
    const LstmState next = lstm_step(ad::gather_cols(table, ids), state, cell);
    if (all_set(active)) {
      state = next;
    } else {
      state = {ad::select_rows(active, next.h, state.h),
               ad::select_rows(active, next.c, state.c)};
    }
  }
  return state.h;
}

std::vector<double> encode_context(std::span<const double> image_emb,
                                   std::span<const TokenId> keyword_ids,
                                   const EncoderParams& params) {
  ad::Tape tape(ad::GradMode::kInference);
  const std::vector<std::vector<TokenId>> lists{{keyword_ids.begin(), keyword_ids.end()}};
  return values_of(encode_context(tape.constant(row(image_emb)), lists, params));
}

ad::Var fuse_baseline(FusionStrategy strategy, ad::Var image_emb,
                      std::span<const std::vector<TokenId>> keyword_ids,
                      const EncoderParams& params) {
  if (strategy == FusionStrategy::kLstmContext || strategy == FusionStrategy::kNone) {
    throw ContractError("fuse_baseline needs average, sum or mul, got " +
                        std::string(to_string(strategy)));
  }
  const std::size_t rows = image_emb.value().rows();
  if (keyword_ids.size() != rows) {
    throw ShapeError("fuse_baseline: " + std::to_string(keyword_ids.size()) +
                     " keyword lists for " + std::to_string(rows) + " images");
  }
  ad::Var acc = image_emb;
  const std::size_t steps = longest(keyword_ids);
  if (steps > 0) {
    const ad::Var table = image_emb.tape().parameter(keyword_table(params));
    std::vector<TokenId> ids;
    std::vector<char> active;
    for (std::size_t t = 0; t < steps; ++t) {
      step_ids(keyword_ids, t, ids, active);
      const ad::Var x = ad::gather_cols(table, ids);
      const ad::Var next =
          strategy == FusionStrategy::kMul ? ad::mul(acc, x) : ad::add(acc, x);
      acc = all_set(active) ? next : ad::select_rows(active, next, acc);
    }
  }
  if (strategy == FusionStrategy::kAverage) {
    std::vector<double> inv(rows);
    for (std::size_t b = 0; b < rows; ++b) {
      inv[b] = 1.0 / static_cast<double>(1 + keyword_ids[b].size());
    }
    acc = ad::scale_rows(acc, inv);
  }
  return acc;
}

std::vector<double> fuse_baseline(FusionStrategy strategy,
                                  std::span<const double> image_emb,
                                  std::span<const std::vector<double>> keyword_embs) {
  if (strategy == FusionStrategy::kLstmContext || strategy == FusionStrategy::kNone) {
    throw ContractError("fuse_baseline needs average, sum or mul, got " +
                        std::string(to_string(strategy)));
  }
  std::vector<double> acc(image_emb.begin(), image_emb.end());
  for (const auto& k : keyword_embs) {
    if (k.size() != acc.size()) {
      throw ShapeError("fuse_baseline: keyword embedding of width " +
                       std::to_string(k.size()) + " vs image width " +
                       std::to_string(acc.size()));
    }
    for (std::size_t i = 0; i < acc.size(); ++i) {
      acc[i] = strategy == FusionStrategy::kMul ? acc[i] * k[i] : acc[i] + k[i];
    }
  }
  if (strategy == FusionStrategy::kAverage) {
    // Same arithmetic as the batched scale_rows path.
    const double inv = 1.0 / static_cast<double>(1 + keyword_embs.size());
    for (double& v : acc) v *= inv;
  }
  return acc;
}

ad::Var context_vector(const ModelParams& params, ad::Var image_emb,
                       std::span<const std::vector<TokenId>> keyword_ids) {
  switch (params.arch.fusion) {
    case FusionStrategy::kNone:
      return {};
    case FusionStrategy::kLstmContext:
      return encode_context(image_emb, keyword_ids, params.encoder);
    default:
      return fuse_baseline(params.arch.fusion, image_emb, keyword_ids, params.encoder);
  }
}

}  // namespace medrep
