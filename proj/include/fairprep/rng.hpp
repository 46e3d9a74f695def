#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "fairprep/error.hpp"

namespace fairprep {

/// Seeded random source. All randomized operations in the library draw
/// through this class so that a (seed, call sequence) pair fixes every
/// outcome across platforms; none of the distribution helpers rely on
/// implementation-defined <random> distributions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error("Rng::below: n must be positive");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = gen_();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Marsaglia's polar method, one spare cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(below(i))]);
    }
  }

  /// k distinct indices drawn uniformly from [0, n), in draw order.
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw Error("sample_without_replacement: k exceeds population size");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(pool[i], pool[i + static_cast<std::size_t>(below(n - i))]);
    }
    pool.resize(k);
    return pool;
  }

  /// k distinct indices drawn without replacement with probability
  /// proportional to weights, by sequential draws with renormalization.
  std::vector<std::size_t> weighted_sample_without_replacement(const std::vector<double>& weights,
                                                               std::size_t k) {
    const std::size_t n = weights.size();
    if (k > n) throw Error("weighted_sample_without_replacement: k exceeds population size");
    for (double w : weights) {
      if (!(w > 0.0) || !std::isfinite(w)) {
        throw Error("weighted_sample_without_replacement: weights must be positive and finite");
      }
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<double> w(weights);
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    std::vector<std::size_t> out;
    out.reserve(k);
    std::size_t live = n;
    for (std::size_t draw = 0; draw < k; ++draw) {
      double target = uniform() * total;
      std::size_t pick = live - 1;
      double acc = 0.0;
      for (std::size_t j = 0; j < live; ++j) {
        acc += w[j];
        if (target < acc) {
          pick = j;
          break;
        }
      }
      out.push_back(idx[pick]);
      total -= w[pick];
      // Recompute the running total every so often to limit drift.
      std::swap(idx[pick], idx[live - 1]);
      std::swap(w[pick], w[live - 1]);
      --live;
      if (draw % 64 == 63) total = std::accumulate(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(live), 0.0);
    }
    return out;
  }

  /// Index in [0, probs.size()) drawn with the given (normalized) probabilities.
  std::size_t categorical(const std::vector<double>& probs) {
    if (probs.empty()) throw Error("categorical: empty probability vector");
    double target = uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (target < acc) return i;
    }
    return probs.size() - 1;
  }

private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

} // namespace fairprep
