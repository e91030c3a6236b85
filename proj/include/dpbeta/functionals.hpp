#pragma once

// Distributional quantities of a beta mixture draw and their posterior
// summaries: density, cdf, first and second moment distribution functions,
// headcount and FGT indices.
//
// The moment distribution functions use the shape-shift identity
//   int_0^y t^r B(t | a, b) dt = E_r * I_y(a + r, b),
// so every quantity reduces to component cdfs.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "dpbeta/draws.hpp"
#include "dpbeta/errors.hpp"
#include "dpbeta/mixture_math.hpp"

namespace dpbeta {

inline constexpr double kDefaultThreshold = 0.5;

inline double mixture_pdf(double y, const MixtureDraw& draw) {
  if (!(y > 0.0 && y < 1.0)) throw DomainError("mixture_pdf requires 0 < y < 1");
  double p = 0.0;
  for (std::size_t k = 0; k < draw.size(); ++k) {
    if (draw.weights[k] == 0.0) continue;
    p += draw.weights[k] * std::exp(log_beta_pdf(y, draw.components[k]));
  }
  return p;
}

/// Posterior predictive density: the average of mixture_pdf over draws.
inline double predictive_density(double y, std::span<const MixtureDraw> draws) {
  if (draws.empty()) throw DomainError("predictive_density: no draws");
  double p = 0.0;
  for (const auto& d : draws) p += mixture_pdf(y, d);
  return p / static_cast<double>(draws.size());
}

inline double mixture_mean(const MixtureDraw& draw) {
  double mu = 0.0;
  for (std::size_t k = 0; k < draw.size(); ++k) {
    mu += draw.weights[k] * draw.components[k].mean();
  }
  return mu;
}

/// alpha (alpha + 1) / ((alpha + beta)(alpha + beta + 1)).
inline double component_second_moment(const BetaComponent& c) {
  const double m = c.mean();
  const double s = c.precision();
  return m * (s * m + 1.0) / (s + 1.0);
}

inline double mixture_second_moment(const MixtureDraw& draw) {
  double mu2 = 0.0;
  for (std::size_t k = 0; k < draw.size(); ++k) {
    mu2 += draw.weights[k] * component_second_moment(draw.components[k]);
  }
  return mu2;
}

inline double mixture_cdf(double y, const MixtureDraw& draw) {
  if (std::isnan(y)) throw DomainError("mixture_cdf: y is NaN");
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  double f = 0.0;
  for (std::size_t k = 0; k < draw.size(); ++k) {
    if (draw.weights[k] == 0.0) continue;
    f += draw.weights[k] * beta_cdf(y, draw.components[k]);
  }
  return std::min(f, 1.0);
}

/// Unnormalized partial first moment: sum_k w_k m_k I_y(alpha_k + 1, beta_k),
/// which equals int_0^y t p(t) dt.
inline double partial_first_moment(double y, const MixtureDraw& draw) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return mixture_mean(draw);
  double acc = 0.0;
  for (std::size_t k = 0; k < draw.size(); ++k) {
    const auto& c = draw.components[k];
    if (draw.weights[k] == 0.0) continue;
    acc += draw.weights[k] * c.mean() * beta_cdf(y, c.alpha() + 1.0, c.beta());
  }
  return acc;
}

inline double partial_second_moment(double y, const MixtureDraw& draw) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return mixture_second_moment(draw);
  double acc = 0.0;
  for (std::size_t k = 0; k < draw.size(); ++k) {
    const auto& c = draw.components[k];
    if (draw.weights[k] == 0.0) continue;
    acc += draw.weights[k] * component_second_moment(c) *
           beta_cdf(y, c.alpha() + 2.0, c.beta());
  }
  return acc;
}

/// First moment distribution function F1(y) = (1/mu) int_0^y t p(t) dt.
inline double first_moment_cdf(double y, const MixtureDraw& draw) {
  if (y >= 1.0) return 1.0;
  return std::min(1.0, partial_first_moment(y, draw) / mixture_mean(draw));
}

/// Second moment distribution function F2(y) = (1/mu2) int_0^y t^2 p(t) dt.
inline double second_moment_cdf(double y, const MixtureDraw& draw) {
  if (y >= 1.0) return 1.0;
  return std::min(1.0,
                  partial_second_moment(y, draw) / mixture_second_moment(draw));
}

namespace detail {
inline void require_threshold(double z) {
  if (!(z > 0.0 && z < 1.0)) throw DomainError("threshold z must lie in (0, 1)");
}
}  // namespace detail

/// Share of the population below z.
inline double headcount(double z, const MixtureDraw& draw) {
  detail::require_threshold(z);
  return mixture_cdf(z, draw);
}

/// FGT1 = HC - (mu / z) F1(z). Clamped into [0, HC] against rounding.
inline double fgt1(double z, const MixtureDraw& draw) {
  detail::require_threshold(z);
  const double hc = mixture_cdf(z, draw);
  const double v = hc - partial_first_moment(z, draw) / z;
  return std::clamp(v, 0.0, hc);
}

/// FGT2 = HC - (2 mu / z) F1(z) + (mu2 / z^2) F2(z). Clamped into [0, FGT1].
inline double fgt2(double z, const MixtureDraw& draw) {
  detail::require_threshold(z);
  const double hc = mixture_cdf(z, draw);
  const double pm1 = partial_first_moment(z, draw);
  const double pm2 = partial_second_moment(z, draw);
  const double f1 = std::clamp(hc - pm1 / z, 0.0, hc);
  const double v = hc - 2.0 * pm1 / z + pm2 / (z * z);
  return std::clamp(v, 0.0, f1);
}

struct PosteriorMoment {
  double mean = 0.0;
  std::optional<double> sd;
};

struct FunctionalSummary {
  double threshold = kDefaultThreshold;
  std::size_t draws = 0;
  PosteriorMoment mu;
  PosteriorMoment headcount;
  PosteriorMoment fgt1;
  PosteriorMoment fgt2;
};

namespace detail {

// Sorting first makes the result independent of draw order.
inline PosteriorMoment moments(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  PosteriorMoment out;
  const auto n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / n;
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.sd = std::sqrt(ss / (n - 1.0));
  }
  return out;
}

}  // namespace detail

/// Posterior mean and sd of mu, HC, FGT1 and FGT2 across draws. Standard
/// deviations are absent for a single draw.
inline FunctionalSummary summarize(std::span<const MixtureDraw> draws,
                                   double z = kDefaultThreshold) {
  if (draws.empty()) throw DomainError("summarize: no draws");
  detail::require_threshold(z);
  std::vector<double> mu, hc, f1, f2;
  for (const auto& d : draws) {
    mu.push_back(mixture_mean(d));
    hc.push_back(headcount(z, d));
    f1.push_back(fgt1(z, d));
    f2.push_back(fgt2(z, d));
  }
  FunctionalSummary s;
  s.threshold = z;
  s.draws = draws.size();
  s.mu = detail::moments(std::move(mu));
  s.headcount = detail::moments(std::move(hc));
  s.fgt1 = detail::moments(std::move(f1));
  s.fgt2 = detail::moments(std::move(f2));
  return s;
}

}  // namespace dpbeta
