#include "medrep/beam.hpp"

#include "medrep/autodiff.hpp"

namespace medrep {

SearchOptions report_search_options(std::size_t vocab_size, std::size_t max_len,
                                    std::size_t beam_width) {
  if (max_len < 3) throw ContractError("max_len must be >= 3");
  if (vocab_size <= static_cast<std::size_t>(kUnk)) {
    throw ContractError("report vocabulary must extend past the reserved ids");
  }
  SearchOptions o;
  o.beam_width = beam_width;
  o.max_steps = max_len - 1;
  o.force_end = true;
  o.end_token = kEnd;
  o.eligible.assign(vocab_size, 1);
  o.eligible[kPad] = o.eligible[kStart] = o.eligible[kUnk] = 0;
  return o;
}

ReportScorer::ReportScorer(const ModelParams& params, std::span<const double> features,
                           std::span<const TokenId> keywords)
    : params_(&params), inputs_(encode_inputs(params, features, keywords)) {}

std::pair<std::vector<double>, ReportScorer::State> ReportScorer::step(
    const State& state, TokenId last) const {
  State next = state;
  const std::vector<double> logits = decode_token(*params_, inputs_, next, last);
  return {log_softmax(logits), std::move(next)};
}

TokenSequence to_sequence(const Hypothesis& h, std::size_t max_len) {
  TokenSequence seq;
  seq.ids = h.tokens;
  if (!h.finished) seq.ids.push_back(kEnd);
  if (seq.ids.size() > max_len) {
    throw ContractError("hypothesis of " + std::to_string(seq.ids.size()) +
                        " tokens exceeds max_len " + std::to_string(max_len));
  }
  seq.ids.resize(max_len, kPad);
  return seq;
}

}  // namespace medrep
