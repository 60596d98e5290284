#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace medrep {

using Caption = std::vector<std::string>;
using ReferenceSet = std::vector<Caption>;

/// Occurrence counts of the n-grams of one fixed order n.
class NGramCounts {
 public:
  NGramCounts() = default;
  NGramCounts(std::span<const std::string> tokens, std::size_t n);

  std::size_t order() const noexcept { return n_; }
  std::size_t count(const Caption& gram) const;
  std::size_t total() const noexcept { return total_; }  // max(0, len - n + 1)
  const std::map<Caption, std::size_t>& counts() const noexcept { return counts_; }

 private:
  std::size_t n_ = 0;
  std::size_t total_ = 0;
  std::map<Caption, std::size_t> counts_;
};

/// Document frequencies for CIDEr: df(g) = number of images whose
/// reference set contains g (orders 1..4), and the image count m.
class CorpusStats {
 public:
  static CorpusStats build(std::span<const ReferenceSet> references);

  std::size_t images() const noexcept { return images_; }
  std::size_t document_frequency(const Caption& gram) const;
  // Identifies the reference corpus the stats were built from.
  std::uint64_t fingerprint() const noexcept { return fingerprint_; }

 private:
  std::size_t images_ = 0;
  std::map<Caption, std::size_t> df_;
  std::uint64_t fingerprint_ = 0;
};

std::uint64_t corpus_fingerprint(std::span<const ReferenceSet> references);

/// Corpus BLEU-n: clipped n-gram precisions summed over the corpus,
/// geometric mean of p_1..p_n, times BP = min(1, exp(1 - r/c)) with r the
/// sum of closest reference lengths (ties to the shorter). Any p_i = 0
/// gives 0 unless `smoothing`, which adds one to numerator and denominator
/// of every order >= 2.
double bleu(std::span<const Caption> candidates,
            std::span<const ReferenceSet> references, int n,
            bool smoothing = false);

/// Arithmetic mean of four BLEU values.
double bleu_avg(const std::array<double, 4>& bleu_1_to_4);
double bleu_avg(std::span<const Caption> candidates,
                std::span<const ReferenceSet> references, bool smoothing = false);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

/// Mean over candidates of the best LCS F-measure against any reference,
/// F = (1 + b^2) R P / (R + b^2 P), b = 1.2, and 0 when the LCS is empty.
double rouge_l(std::span<const Caption> candidates,
               std::span<const ReferenceSet> references, double beta = 1.2);

/// CIDEr (no length penalty): 10 x mean over n = 1..4 of the mean cosine
/// between TF-IDF vectors of candidate and each reference, idf = ln(m / df),
/// averaged over images. ContractError when `stats` was built from a
/// different reference corpus.
double cider(std::span<const Caption> candidates,
             std::span<const ReferenceSet> references, const CorpusStats& stats);

struct MetricReport {
  double bleu_1 = 0, bleu_2 = 0, bleu_3 = 0, bleu_4 = 0;
  double bleu_avg = 0, rouge = 0, cider = 0;
};

MetricReport evaluate_corpus(std::span<const Caption> candidates,
                             std::span<const ReferenceSet> references,
                             bool bleu_smoothing = false);

/// {"bleu_1", ..., "bleu_4", "bleu_avg", "rouge", "cider"}
std::string to_json(const MetricReport& report, int indent = 2);

}  // namespace medrep
