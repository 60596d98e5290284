#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace medrep {

/// Seeded pseudo-random source with platform-independent output.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the
/// standard. The distributions layered on top are written out here because
/// the std:: distributions are implementation-defined:
///   uniform()      53 high bits of one draw, scaled to [0, 1)
///   below(n)       rejection sampling on the top bits, no modulo bias
///   normal()       Box-Muller, both values of a pair are used in order
///   shuffle(span)  Fisher-Yates from the back, j = below(i + 1)
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent stream for a named purpose (init, shuffle, dropout...).
  static Rng stream(std::uint64_t seed, std::string_view purpose);

  std::uint64_t next() { return engine_(); }
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t below(std::uint64_t n);
  std::int64_t range(std::int64_t lo, std::int64_t hi);  // inclusive
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <class T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace medrep
