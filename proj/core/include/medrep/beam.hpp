#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "medrep/decoder.hpp"
#include "medrep/errors.hpp"
#include "medrep/model.hpp"
#include "medrep/text.hpp"

namespace medrep {

/// A next-token model for search: log-probabilities over V ids given the
/// state reached after feeding `last`.
template <class M>
concept StepModel = requires(const M& m, const typename M::State& s, TokenId t) {
  { m.initial_state() } -> std::convertible_to<typename M::State>;
  { m.step(s, t) } -> std::same_as<std::pair<std::vector<double>, typename M::State>>;
  { m.vocab_size() } -> std::convertible_to<std::size_t>;
};

struct SearchOptions {
  std::size_t beam_width = 3;
  std::size_t max_steps = 49;             // generated tokens, END included
  bool length_normalize = false;          // rank by log_prob / steps
  std::optional<TokenId> end_token = kEnd;
  bool force_end = false;                 // last step may only emit END
  std::vector<char> eligible;             // per id; empty = every id
  TokenId start_token = kStart;
};

/// Report generation: END or any id >= 4 may be emitted (PAD, START and UNK
/// never are), END is forced at the last slot so START..END fits max_len.
SearchOptions report_search_options(std::size_t vocab_size, std::size_t max_len,
                                    std::size_t beam_width);

struct Hypothesis {
  std::vector<TokenId> tokens;  // starts with START; ends with END if finished
  double log_prob = 0.0;        // sum of per-step log-softmax values
  double score = 0.0;           // ranking score (log_prob unless normalized)
  bool finished = false;
};

namespace beam_detail {

// Tie order on token ids: ascending id, except END which ranks after all.
inline long long rank(TokenId t, const SearchOptions& o) {
  return o.end_token && t == *o.end_token ? std::numeric_limits<long long>::max() : t;
}

inline bool lex_less(std::span<const TokenId> a, std::span<const TokenId> b,
                     const SearchOptions& o) {
  return std::lexicographical_compare(
      a.begin(), a.end(), b.begin(), b.end(),
      [&o](TokenId x, TokenId y) { return rank(x, o) < rank(y, o); });
}

inline bool better(const Hypothesis& a, const Hypothesis& b, const SearchOptions& o) {
  if (a.score != b.score) return a.score > b.score;
  return lex_less(a.tokens, b.tokens, o);
}

inline double ranking_score(double log_prob, std::size_t generated,
                            const SearchOptions& o) {
  return o.length_normalize && generated > 0
             ? log_prob / static_cast<double>(generated)
             : log_prob;
}

inline bool allowed(TokenId t, std::size_t step, const SearchOptions& o) {
  if (o.force_end && o.end_token && step + 1 == o.max_steps) return t == *o.end_token;
  return o.eligible.empty() || o.eligible[static_cast<std::size_t>(t)] != 0;
}

inline void validate(const SearchOptions& o, std::size_t vocab) {
  if (o.beam_width < 1) throw ContractError("beam width must be >= 1");
  if (o.max_steps < 1) throw ContractError("max_steps must be >= 1");
  if (!o.eligible.empty() && o.eligible.size() != vocab) {
    throw ContractError("eligible mask size does not match vocabulary");
  }
  if (o.end_token && (*o.end_token < 0 || static_cast<std::size_t>(*o.end_token) >= vocab)) {
    throw ContractError("end token outside vocabulary");
  }
}

}  // namespace beam_detail

/// Argmax decoding; exact ties go to the lowest id, END after every other id.
template <StepModel M>
Hypothesis greedy_decode(const M& model, const SearchOptions& options) {
  const std::size_t V = model.vocab_size();
  beam_detail::validate(options, V);
  Hypothesis h{{options.start_token}, 0.0, 0.0, false};
  typename M::State state = model.initial_state();
  for (std::size_t step = 0; step < options.max_steps; ++step) {
    auto [log_probs, next] = model.step(state, h.tokens.back());
    std::optional<TokenId> best;
    for (std::size_t v = 0; v < V; ++v) {
      const auto t = static_cast<TokenId>(v);
      if (!beam_detail::allowed(t, step, options)) continue;
      if (!best || log_probs[v] > log_probs[static_cast<std::size_t>(*best)] ||
          (log_probs[v] == log_probs[static_cast<std::size_t>(*best)] &&
           beam_detail::rank(t, options) < beam_detail::rank(*best, options))) {
        best = t;
      }
    }
    if (!best) break;
    h.tokens.push_back(*best);
    h.log_prob += log_probs[static_cast<std::size_t>(*best)];
    state = std::move(next);
    if (options.end_token && *best == *options.end_token) {
      h.finished = true;
      break;
    }
  }
  h.score = beam_detail::ranking_score(h.log_prob, h.tokens.size() - 1, options);
  return h;
}

/// Beam search with a completed pool. Every live hypothesis is expanded over
/// all eligible ids; candidates are ranked by (score, token sequence). END
/// candidates ranked ahead of the k-th live slot retire into the pool, the
/// rest refill the k live slots. Without length normalization a live score
/// bounds all of its descendants, so the search stops as soon as the pool's
/// k-th best beats the best live hypothesis. Hypotheses still live after
/// max_steps are returned unfinished. Result: at most k, best first.
template <StepModel M>
std::vector<Hypothesis> beam_decode(const M& model, const SearchOptions& options) {
  using State = typename M::State;
  const std::size_t V = model.vocab_size();
  beam_detail::validate(options, V);
  const std::size_t k = options.beam_width;

  struct Live {
    Hypothesis hyp;
    State state;
  };
  struct Candidate {
    Hypothesis hyp;
    std::size_t parent;
  };

  std::vector<Live> live;
  live.push_back({Hypothesis{{options.start_token}, 0.0, 0.0, false}, model.initial_state()});
  std::vector<Hypothesis> pool;
  const auto by_rank = [&options](const Hypothesis& a, const Hypothesis& b) {
    return beam_detail::better(a, b, options);
  };

  for (std::size_t step = 0; step < options.max_steps && !live.empty(); ++step) {
    std::vector<Candidate> candidates;
    std::vector<State> next_states;
    next_states.reserve(live.size());
    for (std::size_t p = 0; p < live.size(); ++p) {
      auto [log_probs, next] = model.step(live[p].state, live[p].hyp.tokens.back());
      next_states.push_back(std::move(next));
      for (std::size_t v = 0; v < V; ++v) {
        const auto t = static_cast<TokenId>(v);
        if (!beam_detail::allowed(t, step, options)) continue;
        Candidate c{live[p].hyp, p};
        c.hyp.tokens.push_back(t);
        c.hyp.log_prob += log_probs[v];
        c.hyp.score = beam_detail::ranking_score(c.hyp.log_prob, c.hyp.tokens.size() - 1, options);
        c.hyp.finished = options.end_token && t == *options.end_token;
        candidates.push_back(std::move(c));
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [&](const Candidate& a, const Candidate& b) { return by_rank(a.hyp, b.hyp); });

    std::vector<Live> next_live;
    for (auto& c : candidates) {
      if (next_live.size() == k) break;
      if (c.hyp.finished) {
        pool.push_back(std::move(c.hyp));
      } else {
        next_live.push_back({std::move(c.hyp), next_states[c.parent]});
      }
    }
    live = std::move(next_live);
    std::sort(pool.begin(), pool.end(), by_rank);
    if (pool.size() > k) pool.resize(k);

    if (!options.length_normalize && pool.size() == k && !live.empty() &&
        pool.back().score >= live.front().hyp.score) {
      live.clear();
    }
  }
  for (auto& l : live) pool.push_back(std::move(l.hyp));
  std::sort(pool.begin(), pool.end(), by_rank);
  if (pool.size() > k) pool.resize(k);
  return pool;
}

/// StepModel over a trained report generator for one (image, keywords) input.
class ReportScorer {
 public:
  using State = DecoderSnapshot;

  ReportScorer(const ModelParams& params, std::span<const double> features,
               std::span<const TokenId> keywords);

  State initial_state() const { return initial_snapshot(*params_); }
  std::pair<std::vector<double>, State> step(const State& state, TokenId last) const;
  std::size_t vocab_size() const { return params_->arch.vocab_size; }

 private:
  const ModelParams* params_;
  EncodedInputs inputs_;
};

/// Hypothesis tokens as a max_len TokenSequence (END appended if missing).
TokenSequence to_sequence(const Hypothesis& h, std::size_t max_len);

/// Σ log p(token | prefix) of `tokens` (START first) under teacher forcing.
template <StepModel M>
double sequence_log_prob(const M& model, std::span<const TokenId> tokens) {
  double total = 0.0;
  typename M::State state = model.initial_state();
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    auto [log_probs, next] = model.step(state, tokens[i - 1]);
    total += log_probs[static_cast<std::size_t>(tokens[i])];
    state = std::move(next);
  }
  return total;
}

}  // namespace medrep
