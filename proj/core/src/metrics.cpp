#include "medrep/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <json.hpp>
#include <set>

#include "medrep/errors.hpp"

namespace medrep {

namespace {

constexpr std::size_t kMaxOrder = 4;

void require_corpus(std::span<const Caption> candidates,
                    std::span<const ReferenceSet> references, const char* metric) {
  if (candidates.empty()) {
    throw ContractError(std::string(metric) + ": empty candidate list");
  }
  if (candidates.size() != references.size()) {
    throw ContractError(std::string(metric) + ": " + std::to_string(candidates.size()) +
                        " candidates but " + std::to_string(references.size()) +
                        " reference sets");
  }
  for (const auto& refs : references) {
    if (refs.empty()) throw ContractError(std::string(metric) + ": image without references");
  }
}

std::size_t closest_length(std::size_t cand, const ReferenceSet& refs) {
  std::size_t best = refs.front().size();
  for (const auto& r : refs) {
    const auto d = [cand](std::size_t len) {
      return len > cand ? len - cand : cand - len;
    };
    if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) {
      best = r.size();
    }
  }
  return best;
}

// TF-IDF vector of one caption for order n, with its norm.
struct Weighted {
  std::map<Caption, double> vec;
  double norm = 0.0;
};

Weighted tfidf(const Caption& tokens, std::size_t n, const CorpusStats& stats) {
  Weighted w;
  const NGramCounts counts(tokens, n);
  if (counts.total() == 0) return w;
  const double m = static_cast<double>(stats.images());
  for (const auto& [gram, c] : counts.counts()) {
    const double df = static_cast<double>(std::max<std::size_t>(1, stats.document_frequency(gram)));
    const double value =
        static_cast<double>(c) / static_cast<double>(counts.total()) * std::log(m / df);
    w.vec.emplace(gram, value);
    w.norm += value * value;
  }
  w.norm = std::sqrt(w.norm);
  return w;
}

double cosine(const Weighted& a, const Weighted& b) {
  if (a.norm == 0.0 || b.norm == 0.0) return 0.0;
  double dot = 0.0;
  for (const auto& [gram, v] : a.vec) {
    const auto it = b.vec.find(gram);
    if (it != b.vec.end()) dot += v * it->second;
  }
  return dot / (a.norm * b.norm);
}

}  // namespace

NGramCounts::NGramCounts(std::span<const std::string> tokens, std::size_t n) : n_(n) {
  if (n == 0) throw ContractError("n-gram order must be >= 1");
  if (tokens.size() < n) return;
  total_ = tokens.size() - n + 1;
  for (std::size_t i = 0; i < total_; ++i) {
    ++counts_[Caption(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
}

std::size_t NGramCounts::count(const Caption& gram) const {
  const auto it = counts_.find(gram);
  return it == counts_.end() ? 0 : it->second;
}

std::uint64_t corpus_fingerprint(std::span<const ReferenceSet> references) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto mix = [&h](unsigned char byte) {
    h ^= byte;
    h *= 0x100000001b3ULL;
  };
  for (const auto& refs : references) {
    for (const auto& caption : refs) {
      for (const auto& token : caption) {
        for (const char ch : token) mix(static_cast<unsigned char>(ch));
        mix(0x1f);  // token separator
      }
      mix(0x1e);  // caption separator
    }
    mix(0x1d);  // image separator
  }
  return h;
}

CorpusStats CorpusStats::build(std::span<const ReferenceSet> references) {
  CorpusStats stats;
  stats.images_ = references.size();
  stats.fingerprint_ = corpus_fingerprint(references);
  for (const auto& refs : references) {
    std::set<Caption> seen;
    for (const auto& caption : refs) {
      for (std::size_t n = 1; n <= kMaxOrder; ++n) {
        const NGramCounts counts(caption, n);
        for (const auto& [gram, c] : counts.counts()) seen.insert(gram);
      }
    }
    for (const auto& gram : seen) ++stats.df_[gram];
  }
  return stats;
}

std::size_t CorpusStats::document_frequency(const Caption& gram) const {
  const auto it = df_.find(gram);
  return it == df_.end() ? 0 : it->second;
}

double bleu(std::span<const Caption> candidates,
            std::span<const ReferenceSet> references, int n, bool smoothing) {
  require_corpus(candidates, references, "bleu");
  if (n < 1 || n > static_cast<int>(kMaxOrder)) throw ContractError("bleu: n must be in 1..4");

  std::vector<double> matched(static_cast<std::size_t>(n), 0.0);
  std::vector<double> total(static_cast<std::size_t>(n), 0.0);
  double cand_len = 0.0, ref_len = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const Caption& cand = candidates[i];
    cand_len += static_cast<double>(cand.size());
    ref_len += static_cast<double>(closest_length(cand.size(), references[i]));
    for (std::size_t k = 1; k <= static_cast<std::size_t>(n); ++k) {
      const NGramCounts counts(cand, k);
      std::vector<NGramCounts> ref_counts;
      for (const auto& r : references[i]) ref_counts.emplace_back(r, k);
      for (const auto& [gram, c] : counts.counts()) {
        std::size_t max_ref = 0;
        for (const auto& rc : ref_counts) max_ref = std::max(max_ref, rc.count(gram));
        matched[k - 1] += static_cast<double>(std::min(c, max_ref));
      }
      total[k - 1] += static_cast<double>(counts.total());
    }
  }
  if (cand_len == 0.0) return 0.0;

  double log_sum = 0.0;
  for (std::size_t k = 0; k < matched.size(); ++k) {
    double num = matched[k], den = total[k];
    if (smoothing && k >= 1) {
      num += 1.0;
      den += 1.0;
    }
    if (num == 0.0 || den == 0.0) return 0.0;
    log_sum += std::log(num / den);
  }
  const double geometric = std::exp(log_sum / static_cast<double>(n));
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return bp * geometric;
}

double bleu_avg(const std::array<double, 4>& b) { return (b[0] + b[1] + b[2] + b[3]) / 4.0; }

double bleu_avg(std::span<const Caption> candidates,
                std::span<const ReferenceSet> references, bool smoothing) {
  return bleu_avg({bleu(candidates, references, 1, smoothing),
                   bleu(candidates, references, 2, smoothing),
                   bleu(candidates, references, 3, smoothing),
                   bleu(candidates, references, 4, smoothing)});
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double rouge_l(std::span<const Caption> candidates,
               std::span<const ReferenceSet> references, double beta) {
  require_corpus(candidates, references, "rouge_l");
  const double b2 = beta * beta;
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double best = 0.0;
    for (const auto& ref : references[i]) {
      const double l = static_cast<double>(lcs_length(candidates[i], ref));
      if (l == 0.0) continue;
      const double r = l / static_cast<double>(ref.size());
      const double p = l / static_cast<double>(candidates[i].size());
      best = std::max(best, (1.0 + b2) * r * p / (r + b2 * p));
    }
    total += best;
  }
  return total / static_cast<double>(candidates.size());
}

double cider(std::span<const Caption> candidates,
             std::span<const ReferenceSet> references, const CorpusStats& stats) {
  require_corpus(candidates, references, "cider");
  if (stats.images() != references.size() ||
      stats.fingerprint() != corpus_fingerprint(references)) {
    throw ContractError("cider: corpus statistics were built from a different reference corpus");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    double per_image = 0.0;
    for (std::size_t n = 1; n <= kMaxOrder; ++n) {
      const Weighted c = tfidf(candidates[i], n, stats);
      double sum = 0.0;
      for (const auto& ref : references[i]) sum += cosine(c, tfidf(ref, n, stats));
      per_image += sum / static_cast<double>(references[i].size());
    }
    total += 10.0 * per_image / static_cast<double>(kMaxOrder);
  }
  return total / static_cast<double>(candidates.size());
}

MetricReport evaluate_corpus(std::span<const Caption> candidates,
                             std::span<const ReferenceSet> references, bool bleu_smoothing) {
  MetricReport r;
  r.bleu_1 = bleu(candidates, references, 1, bleu_smoothing);
  r.bleu_2 = bleu(candidates, references, 2, bleu_smoothing);
  r.bleu_3 = bleu(candidates, references, 3, bleu_smoothing);
  r.bleu_4 = bleu(candidates, references, 4, bleu_smoothing);
  r.bleu_avg = bleu_avg({r.bleu_1, r.bleu_2, r.bleu_3, r.bleu_4});
  r.rouge = rouge_l(candidates, references);
  r.cider = cider(candidates, references, CorpusStats::build(references));
  return r;
}

std::string to_json(const MetricReport& r, int indent) {
  nlohmann::ordered_json j;
  j["bleu_1"] = r.bleu_1;
  j["bleu_2"] = r.bleu_2;
  j["bleu_3"] = r.bleu_3;
  j["bleu_4"] = r.bleu_4;
  j["bleu_avg"] = r.bleu_avg;
  j["rouge"] = r.rouge;
  j["cider"] = r.cider;
  return j.dump(indent);
}

}  // namespace medrep
