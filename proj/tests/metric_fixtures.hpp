#pragma once

// Golden metric fixtures. Expected values come from
// tests/oracles/metrics_oracle.py (exact rational arithmetic, 40-digit
// logs) and are frozen here.

#include <functional>
#include <string>
#include <vector>

#include "medrep/metrics.hpp"
#include "medrep/text.hpp"

namespace medrep::test {

struct MetricFixture {
  std::string name;
  std::function<double()> compute;
  double expected;
};

// Reported BLEU-avg values carry three decimals, so ±0.0005 is the rounding
// band. 0.1155 vs 0.116 sits exactly on its edge and double arithmetic lands
// a few ulps outside, hence the extra 1e-12.
inline constexpr double kHalfThousandth = 0.0005 + 1e-12;

inline Caption T(std::string_view text) { return split_whitespace(text); }

inline std::vector<MetricFixture> metric_fixtures() {
  using Cs = std::vector<Caption>;
  using Rs = std::vector<ReferenceSet>;
  const auto cider_of = [](Cs c, Rs r) {
    return cider(c, r, CorpusStats::build(r));
  };
  return {
      {"bleu4_identity",
       [] { return bleu(Cs{T("the cat sat on the mat")}, Rs{{T("the cat sat on the mat")}}, 4); },
       1.0},
      {"bleu1_clipped_the",
       [] { return bleu(Cs{T("the the the the the the the")}, Rs{{T("the cat is on the mat")}}, 1); },
       0.28571428571428571429},
      {"bleu1_brevity", [] { return bleu(Cs{T("a b")}, Rs{{T("a b c d")}}, 1); },
       0.3678794411714423216},
      {"bleu2_multiref_corpus",
       [] {
         return bleu(Cs{T("the cat sat on a mat"), T("a dog ran in the park today")},
                     Rs{{T("the cat sat on the mat"), T("a cat was sitting on the mat")},
                        {T("the dog ran in the park"), T("a dog was running in a park")}},
                     2);
       },
       0.81934649039870264686},
      {"bleu4_smoothed",
       [] {
         return bleu(Cs{T("mild changes in the macular region"), T("severe edema")},
                     Rs{{T("mild changes in the peripheral region")}, {T("severe macular edema noted")}},
                     4, true);
       },
       0.48467341004342574679},
      {"bleu4_zero_precision", [] { return bleu(Cs{T("a b c d e")}, Rs{{T("a b x c d")}}, 4); }, 0.0},
      {"rouge_police",
       [] { return rouge_l(Cs{T("police killed the gunman")}, Rs{{T("police kill the gunman")}}); },
       0.75},
      {"rouge_disjoint", [] { return rouge_l(Cs{T("a b c")}, Rs{{T("x y z")}}); }, 0.0},
      {"rouge_multiref_corpus",
       [] {
         return rouge_l(Cs{T("the cat sat on a mat"), T("dog ran")},
                        Rs{{T("the cat sat on the mat"), T("a cat on mat")}, {T("the dog ran away fast")}});
       },
       0.68188405797101449275},
      {"cider_single_image", [=] { return cider_of(Cs{T("a b c d")}, Rs{{T("a b c d")}}); }, 0.0},
      {"cider_two_image_identical",
       [=] {
         return cider_of(Cs{T("acute retinal vein occlusion"), T("chronic mild uveitis noted")},
                         Rs{{T("acute retinal vein occlusion")}, {T("chronic mild uveitis noted")}});
       },
       10.0},
      {"cider_general",
       [=] {
         return cider_of(
             Cs{T("mild changes in the macular region"), T("severe changes noted"), T("no shared words")},
             Rs{{T("mild changes in the macular region"), T("mild macular changes")},
                {T("severe changes in the peripheral region")},
                {T("acute disease of the retina"), T("retina shows acute disease")}});
       },
       2.8022187939772098371},
  };
}

}  // namespace medrep::test
