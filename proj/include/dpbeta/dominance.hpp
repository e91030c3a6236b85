#pragma once

// First- and second-order stochastic dominance between two posterior draw
// sets, evaluated on a grid.
//
// For paired draws (A_j, B_j):
//   D1(y) = F_B(y) - F_A(y)
//   D2(y) = [y F_B(y) - mu_B F1_B(y)] - [y F_A(y) - mu_A F1_A(y)]
// where y F(y) - mu F1(y) is the integral of the cdf from 0 to y. A draw
// counts toward "A dominates B" when D >= 0 at every grid point and toward
// "B dominates A" when D <= 0 at every grid point.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dpbeta/draws.hpp"
#include "dpbeta/errors.hpp"
#include "dpbeta/functionals.hpp"
#include "dpbeta/mixture_math.hpp"

namespace dpbeta {

struct EvaluationGrid {
  std::vector<double> points;

  static constexpr double kDefaultMin = 0.1;
  static constexpr double kDefaultMax = 0.999;
  static constexpr std::size_t kDefaultCount = 1000;

  /// `count` equally spaced points from lo to hi inclusive.
  static EvaluationGrid uniform(double lo = kDefaultMin, double hi = kDefaultMax,
                                std::size_t count = kDefaultCount) {
    if (count < 2) throw DomainError("grid needs at least 2 points");
    if (!(lo >= 0.0 && hi <= 1.0 && lo < hi)) {
      throw DomainError("grid bounds must satisfy 0 <= min < max <= 1");
    }
    EvaluationGrid g;
    g.points.resize(count);
    const double step = (hi - lo) / static_cast<double>(count - 1);
    for (std::size_t h = 0; h < count; ++h) {
      g.points[h] = lo + step * static_cast<double>(h);
    }
    g.points.back() = hi;
    return g;
  }

  std::size_t size() const noexcept { return points.size(); }

  void validate() const {
    if (points.size() < 2) throw DomainError("grid needs at least 2 points");
    for (std::size_t h = 0; h < points.size(); ++h) {
      if (!(points[h] >= 0.0 && points[h] <= 1.0)) {
        throw DomainError("grid point outside [0, 1]");
      }
      if (h > 0 && !(points[h] > points[h - 1])) {
        throw DomainError("grid points must be strictly increasing");
      }
    }
  }

  /// Points y <= cutoff; may be empty.
  EvaluationGrid restricted(double cutoff) const {
    EvaluationGrid g;
    for (double y : points) {
      if (y <= cutoff) g.points.push_back(y);
    }
    return g;
  }
};

enum class DominanceOrder { kFirst = 1, kSecond = 2 };

inline std::string_view to_string(DominanceOrder o) {
  return o == DominanceOrder::kFirst ? "fsd" : "ssd";
}

/// Per-draw cdf and partial first moment on a grid. Component cdfs are
/// evaluated once per grid point and reused.
struct DrawCurves {
  std::vector<double> cdf;
  std::vector<double> partial_mean;  // mu * F1(y)
  double mu = 0.0;
};

inline DrawCurves evaluate_draw(const MixtureDraw& draw,
                                std::span<const double> grid,
                                bool with_moments) {
  DrawCurves out;
  out.cdf.assign(grid.size(), 0.0);
  if (with_moments) out.partial_mean.assign(grid.size(), 0.0);
  out.mu = mixture_mean(draw);
  for (std::size_t k = 0; k < draw.size(); ++k) {
    const double w = draw.weights[k];
    if (w == 0.0) continue;
    const auto& c = draw.components[k];
    const double a = c.alpha();
    const double b = c.beta();
    for (std::size_t h = 0; h < grid.size(); ++h) {
      out.cdf[h] += w * beta_cdf(grid[h], a, b);
      if (with_moments) {
        out.partial_mean[h] += w * c.mean() * beta_cdf(grid[h], a + 1.0, b);
      }
    }
  }
  // Exact endpoint values; the component sums are only equal to them up to
  // rounding.
  for (std::size_t h = 0; h < grid.size(); ++h) {
    if (grid[h] <= 0.0) {
      out.cdf[h] = 0.0;
      if (with_moments) out.partial_mean[h] = 0.0;
    } else if (grid[h] >= 1.0) {
      out.cdf[h] = 1.0;
      if (with_moments) out.partial_mean[h] = out.mu;
    }
  }
  return out;
}

inline std::vector<double> difference_curve(DominanceOrder order,
                                            const DrawCurves& a,
                                            const DrawCurves& b,
                                            std::span<const double> grid) {
  std::vector<double> d(grid.size());
  for (std::size_t h = 0; h < grid.size(); ++h) {
    if (order == DominanceOrder::kFirst) {
      d[h] = b.cdf[h] - a.cdf[h];
    } else {
      const double ib = grid[h] * b.cdf[h] - b.partial_mean[h];
      const double ia = grid[h] * a.cdf[h] - a.partial_mean[h];
      d[h] = ib - ia;
    }
  }
  return d;
}

inline std::vector<double> d1_curve(const MixtureDraw& a, const MixtureDraw& b,
                                    const EvaluationGrid& grid) {
  const auto ca = evaluate_draw(a, grid.points, false);
  const auto cb = evaluate_draw(b, grid.points, false);
  return difference_curve(DominanceOrder::kFirst, ca, cb, grid.points);
}

inline std::vector<double> d2_curve(const MixtureDraw& a, const MixtureDraw& b,
                                    const EvaluationGrid& grid) {
  const auto ca = evaluate_draw(a, grid.points, true);
  const auto cb = evaluate_draw(b, grid.points, true);
  return difference_curve(DominanceOrder::kSecond, ca, cb, grid.points);
}

enum class Verdict { kADominates, kBDominates, kNeither };

struct Classification {
  Verdict verdict = Verdict::kNeither;
  bool all_zero = false;
};

/// Non-strict comparisons; an identically zero curve counts as neither.
inline Classification classify(std::span<const double> d) {
  bool nonneg = true;
  bool nonpos = true;
  for (double x : d) {
    nonneg = nonneg && x >= 0.0;
    nonpos = nonpos && x <= 0.0;
  }
  if (nonneg && nonpos) return {Verdict::kNeither, true};
  if (nonneg) return {Verdict::kADominates, false};
  if (nonpos) return {Verdict::kBDominates, false};
  return {Verdict::kNeither, false};
}

struct DominanceProbabilities {
  double a_dominates = 0.0;
  double b_dominates = 0.0;
  double neither = 0.0;
};

struct DominanceReport {
  DominanceOrder order = DominanceOrder::kFirst;
  EvaluationGrid grid;
  std::vector<double> probability_curve;  // Pr[D(y_h) >= 0]
  std::vector<double> mean_difference;    // posterior mean of D(y_h)
  DominanceProbabilities probabilities;
  std::size_t draws = 0;
  std::size_t zero_curve_draws = 0;
  std::vector<Verdict> verdicts;  // per paired draw
  std::optional<double> cutoff;
  std::string id_a;
  std::string id_b;
};

/// Paired comparison of two equally long draw sequences. Per-draw curves are
/// evaluated in parallel blocks and reduced in draw order, so the report is
/// identical for any thread count.
inline DominanceReport dominance_report(DominanceOrder order,
                                        std::span<const MixtureDraw> a,
                                        std::span<const MixtureDraw> b,
                                        const EvaluationGrid& grid,
                                        unsigned threads = 1) {
  grid.validate();
  if (a.size() != b.size()) {
    throw DomainError("draw sets differ in length (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw DomainError("dominance: no draws");
  const std::size_t M = a.size();
  const std::size_t H = grid.size();
  const bool moments = order == DominanceOrder::kSecond;

  DominanceReport rep;
  rep.order = order;
  rep.grid = grid;
  rep.draws = M;
  rep.verdicts.resize(M);
  std::vector<std::uint64_t> nonneg(H, 0);
  std::vector<double> sum(H, 0.0);
  std::size_t count_a = 0, count_b = 0;

  constexpr std::size_t kBlock = 64;
  std::vector<std::vector<double>> block(kBlock);
  for (std::size_t start = 0; start < M; start += kBlock) {
    const std::size_t len = std::min(kBlock, M - start);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < len; i = next++) {
        const auto ca = evaluate_draw(a[start + i], grid.points, moments);
        const auto cb = evaluate_draw(b[start + i], grid.points, moments);
        block[i] = difference_curve(order, ca, cb, grid.points);
      }
    };
    const unsigned n_threads =
        std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(len)));
    if (n_threads == 1) {
      work();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(work);
    }
    for (std::size_t i = 0; i < len; ++i) {
      const auto& d = block[i];
      for (std::size_t h = 0; h < H; ++h) {
        if (d[h] >= 0.0) ++nonneg[h];
        sum[h] += d[h];
      }
      const auto c = classify(d);
      rep.verdicts[start + i] = c.verdict;
      if (c.all_zero) ++rep.zero_curve_draws;
      if (c.verdict == Verdict::kADominates) ++count_a;
      if (c.verdict == Verdict::kBDominates) ++count_b;
    }
  }

  const auto dm = static_cast<double>(M);
  rep.probability_curve.resize(H);
  rep.mean_difference.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    rep.probability_curve[h] = static_cast<double>(nonneg[h]) / dm;
    rep.mean_difference[h] = sum[h] / dm;
  }
  rep.probabilities.a_dominates = static_cast<double>(count_a) / dm;
  rep.probabilities.b_dominates = static_cast<double>(count_b) / dm;
  rep.probabilities.neither =
      1.0 - (rep.probabilities.a_dominates + rep.probabilities.b_dominates);
  return rep;
}

inline DominanceReport dominance_report(DominanceOrder order,
                                        const PosteriorDrawSet& a,
                                        const PosteriorDrawSet& b,
                                        const EvaluationGrid& grid,
                                        unsigned threads = 1) {
  auto rep = dominance_report(order, std::span<const MixtureDraw>(a.draws),
                              std::span<const MixtureDraw>(b.draws), grid,
                              threads);
  rep.id_a = a.fingerprint();
  rep.id_b = b.fingerprint();
  return rep;
}

/// Pr[D_i(y_h) >= 0] at each grid point.
inline std::vector<double> probability_curve(DominanceOrder order,
                                             std::span<const MixtureDraw> a,
                                             std::span<const MixtureDraw> b,
                                             const EvaluationGrid& grid) {
  return dominance_report(order, a, b, grid).probability_curve;
}

inline DominanceProbabilities dominance_probabilities(
    DominanceOrder order, std::span<const MixtureDraw> a,
    std::span<const MixtureDraw> b, const EvaluationGrid& grid) {
  return dominance_report(order, a, b, grid).probabilities;
}

/// The same comparison restricted to grid points y <= cutoff.
inline DominanceReport restricted_report(DominanceOrder order,
                                         std::span<const MixtureDraw> a,
                                         std::span<const MixtureDraw> b,
                                         const EvaluationGrid& grid,
                                         double cutoff, unsigned threads = 1) {
  const auto sub = grid.restricted(cutoff);
  if (sub.size() == 0) {
    throw DomainError("no grid points at or below the cutoff");
  }
  if (sub.size() < 2) {
    throw DomainError("fewer than 2 grid points at or below the cutoff");
  }
  auto rep = dominance_report(order, a, b, sub, threads);
  rep.cutoff = cutoff;
  return rep;
}

inline DominanceReport restricted_report(DominanceOrder order,
                                         const PosteriorDrawSet& a,
                                         const PosteriorDrawSet& b,
                                         const EvaluationGrid& grid,
                                         double cutoff, unsigned threads = 1) {
  auto rep = restricted_report(order, std::span<const MixtureDraw>(a.draws),
                               std::span<const MixtureDraw>(b.draws), grid,
                               cutoff, threads);
  rep.id_a = a.fingerprint();
  rep.id_b = b.fingerprint();
  return rep;
}

}  // namespace dpbeta
