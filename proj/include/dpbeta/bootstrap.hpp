#pragma once

// Bayesian-bootstrap pseudo-representative samples: augment the weighted
// sample of size n to a pseudo-population of size N with a Polya-urn scheme,
// then draw n values from that population without replacement.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dpbeta/errors.hpp"
#include "dpbeta/ingest.hpp"
#include "dpbeta/random.hpp"

namespace dpbeta {

/// Probability that augmentation step j (1-based) copies record i, given
/// its normalized weight tau_i and its reuse count ell_i so far:
///   (tau_i - 1 + ell_i N*) / (N - n + (j - 1) N*),  N* = (N - n) / n.
inline double augmentation_probability(double tau, std::uint64_t reuse,
                                       std::uint64_t step, std::uint64_t n,
                                       std::uint64_t population_size) {
  if (n == 0 || step == 0) throw DomainError("augmentation: n and j must be >= 1");
  const double big_n = static_cast<double>(population_size);
  const double dn = static_cast<double>(n);
  const double n_star = (big_n - dn) / dn;
  const double denom = big_n - dn + static_cast<double>(step - 1) * n_star;
  if (!(denom > 0.0)) {
    throw DomainError("augmentation probability has a non-positive denominator");
  }
  return (tau - 1.0 + static_cast<double>(reuse) * n_star) / denom;
}

/// Fenwick tree over non-negative values; supports point updates and
/// inverse prefix-sum lookup in O(log n).
template <class T>
class FenwickTree {
 public:
  explicit FenwickTree(std::span<const T> values) : tree_(values.size() + 1) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      tree_[i + 1] += values[i];
      const std::size_t parent = (i + 1) + ((i + 1) & (~(i + 1) + 1));
      if (parent < tree_.size()) tree_[parent] += tree_[i + 1];
    }
    top_bit_ = 1;
    while (top_bit_ * 2 <= values.size()) top_bit_ *= 2;
  }

  std::size_t size() const noexcept { return tree_.size() - 1; }

  void add(std::size_t index, T delta) {
    for (std::size_t i = index + 1; i < tree_.size(); i += i & (~i + 1)) {
      tree_[i] += delta;
    }
  }

  T total() const {
    T sum{};
    for (std::size_t i = size(); i > 0; i -= i & (~i + 1)) sum += tree_[i];
    return sum;
  }

  /// Smallest index whose inclusive prefix sum exceeds `target`. Entries
  /// with value zero are never returned for target in [0, total).
  std::size_t find(T target) const {
    std::size_t pos = 0;
    for (std::size_t step = top_bit_; step > 0; step /= 2) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && !(target < tree_[next])) {
        pos = next;
        target -= tree_[next];
      }
    }
    return pos < size() ? pos : size() - 1;
  }

 private:
  std::vector<T> tree_;
  std::size_t top_bit_ = 1;
};

struct PseudoSample {
  std::vector<double> values;
  std::uint64_t replicate = 0;
  std::uint64_t seed = 0;
};

/// Reuse counts ell_i after augmenting to the population size; sums to N - n.
inline std::vector<std::uint64_t> augment_counts(std::span<const double> weights,
                                                 std::uint64_t population_size,
                                                 Rng& rng) {
  const std::size_t n = weights.size();
  if (n == 0) throw DomainError("bootstrap: empty sample");
  if (population_size < n) {
    throw DomainError("bootstrap: population size below sample size");
  }
  const double dn = static_cast<double>(n);
  const double n_star = (static_cast<double>(population_size) - dn) / dn;

  // Numerators tau_i - 1 + ell_i N* share one denominator, so drawing in
  // proportion to them is the augmentation probability.
  std::vector<double> numer(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (weights[i] < 1.0) {
      throw DomainError("bootstrap: normalized weight " + std::to_string(i) +
                        " is below 1; raise the population size");
    }
    numer[i] = weights[i] - 1.0;
  }
  std::vector<std::uint64_t> reuse(n, 0);
  const std::uint64_t steps = population_size - n;
  if (steps == 0) return reuse;

  FenwickTree<double> tree{std::span<const double>(numer)};
  for (std::uint64_t j = 0; j < steps; ++j) {
    const double total = tree.total();
    if (!(total > 0.0)) {
      throw InvariantError("bootstrap: augmentation urn is empty");
    }
    const std::size_t i = tree.find(rng.uniform() * total);
    ++reuse[i];
    tree.add(i, n_star);
  }
  return reuse;
}

/// Draws one pseudo-representative sample of size n.
inline PseudoSample draw_pseudo_sample(std::span<const double> scores,
                                       std::span<const double> weights,
                                       std::uint64_t population_size, Rng& rng) {
  const std::size_t n = scores.size();
  if (weights.size() != n) throw DomainError("bootstrap: length mismatch");
  const auto reuse = augment_counts(weights, population_size, rng);

  // The pseudo-population holds 1 + ell_i copies of y_i. Draw n of them
  // without replacement (sequential sampling on the count tree).
  std::vector<std::uint64_t> counts(n);
  for (std::size_t i = 0; i < n; ++i) counts[i] = 1 + reuse[i];
  FenwickTree<std::uint64_t> tree{std::span<const std::uint64_t>(counts)};
  std::uint64_t remaining = population_size;

  PseudoSample out;
  out.values.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = tree.find(rng.uniform_index(remaining));
    out.values.push_back(scores[i]);
    tree.add(i, static_cast<std::uint64_t>(-1));
    --remaining;
  }
  return out;
}

inline PseudoSample draw_pseudo_sample(const HealthDataset& ds,
                                       std::uint64_t seed,
                                       std::uint64_t replicate) {
  auto rng = Rng::stream(seed, replicate, StreamPurpose::kBootstrap);
  auto out = draw_pseudo_sample(ds.scores, ds.weights, ds.population_size, rng);
  out.replicate = replicate;
  out.seed = seed;
  return out;
}

}  // namespace dpbeta
