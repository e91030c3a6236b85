#pragma once

// Special functions and quadrature for beta mixtures. No dependencies beyond
// the standard library; every routine is a pure function of its arguments.

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <string>
#include <utility>

#include "dpbeta/errors.hpp"

namespace dpbeta {

/// One beta component in mean-precision form. Shape parameters are
/// alpha = s*m and beta = s*(1-m).
class BetaComponent {
 public:
  BetaComponent() = default;

  /// Throws DomainError unless 0 < m < 1 and s > 0.
  BetaComponent(double mean, double precision) : m_(mean), s_(precision) {
    if (!valid(mean, precision)) {
      throw DomainError("beta component requires 0 < m < 1 and s > 0 (m=" +
                        std::to_string(mean) +
                        ", s=" + std::to_string(precision) + ")");
    }
  }

  static BetaComponent from_shapes(double alpha, double beta) {
    if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) ||
        !std::isfinite(beta)) {
      throw DomainError("beta shapes must be positive and finite");
    }
    const double s = alpha + beta;
    return BetaComponent(alpha / s, s);
  }

  static bool valid(double m, double s) noexcept {
    return m > 0.0 && m < 1.0 && s > 0.0 && std::isfinite(s);
  }

  double mean() const noexcept { return m_; }
  double precision() const noexcept { return s_; }
  double alpha() const noexcept { return s_ * m_; }
  double beta() const noexcept { return s_ * (1.0 - m_); }

  friend bool operator==(const BetaComponent&, const BetaComponent&) = default;

 private:
  double m_ = 0.5;
  double s_ = 2.0;
};

namespace detail {

// Lanczos approximation, g = 7, n = 9.
inline constexpr double kLanczosG = 7.0;
inline constexpr std::array<double, 9> kLanczosCoef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

}  // namespace detail

/// Natural log of the gamma function for x > 0.
inline double log_gamma(double x) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw DomainError("log_gamma requires a positive finite argument");
  }
  if (x < 0.5) {
    // Reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x).
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
           log_gamma(1.0 - x);
  }
  const double z = x - 1.0;
  double acc = detail::kLanczosCoef[0];
  for (std::size_t i = 1; i < detail::kLanczosCoef.size(); ++i) {
    acc += detail::kLanczosCoef[i] / (z + static_cast<double>(i));
  }
  const double t = z + detail::kLanczosG + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t +
         std::log(acc);
}

/// ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b).
inline double log_beta_function(double a, double b) {
  return log_gamma(a) + log_gamma(b) - log_gamma(a + b);
}

/// Log density of a beta component at y in (0, 1).
inline double log_beta_pdf(double y, const BetaComponent& c) {
  if (!(y > 0.0 && y < 1.0)) {
    throw DomainError("log_beta_pdf requires 0 < y < 1");
  }
  if (!BetaComponent::valid(c.mean(), c.precision())) {
    throw DomainError("log_beta_pdf: invalid component");
  }
  const double a = c.alpha();
  const double b = c.beta();
  return -log_beta_function(a, b) + (a - 1.0) * std::log(y) +
         (b - 1.0) * std::log1p(-y);
}

namespace detail {

// Continued fraction for I_x(a, b), modified Lentz. Converges rapidly for
// x < (a + 1) / (a + b + 2).
inline double incomplete_beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 200000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double dm = m;
    const double m2 = 2.0 * dm;
    double aa = dm * (b - dm) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + dm) * (qab + dm) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) return h;
  }
  throw ConvergenceError("incomplete beta continued fraction did not converge",
                         h);
}

}  // namespace detail

/// Regularized incomplete beta function I_y(alpha, beta), i.e. the cdf of
/// Beta(alpha, beta) at y. Values of y outside [0, 1] are clamped.
inline double beta_cdf(double y, double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) ||
      !std::isfinite(beta)) {
    throw DomainError("beta_cdf requires positive finite shapes");
  }
  if (std::isnan(y)) throw DomainError("beta_cdf: y is NaN");
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;

  const double log_front = alpha * std::log(y) + beta * std::log1p(-y) -
                           log_beta_function(alpha, beta);
  const double front = std::exp(log_front);
  if (y < (alpha + 1.0) / (alpha + beta + 2.0)) {
    return front * detail::incomplete_beta_cf(alpha, beta, y) / alpha;
  }
  return 1.0 - front * detail::incomplete_beta_cf(beta, alpha, 1.0 - y) / beta;
}

inline double beta_cdf(double y, const BetaComponent& c) {
  return beta_cdf(y, c.alpha(), c.beta());
}

namespace detail {

struct SimpsonResult {
  double value;
  bool converged;
};

inline constexpr double kRoundoff = std::numeric_limits<double>::epsilon();

inline double simpson_rule(double fa, double fm, double fb, double width) {
  return width / 6.0 * (fa + 4.0 * fm + fb);
}

// The first `forced` levels always split so narrow features are not missed by
// a lucky coarse estimate.
template <class F>
SimpsonResult adaptive_simpson_step(F& f, double a, double b, double fa,
                                    double fm, double fb, double whole,
                                    double tol, double min_tol, int depth,
                                    int forced) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  if (!(lm > a && m > lm && rm > m && b > rm)) {
    // Interval cannot be split further in floating point.
    return {whole, true};
  }
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = simpson_rule(fa, flm, fm, m - a);
  const double right = simpson_rule(fm, frm, fb, b - m);
  const double delta = left + right - whole;
  if (!std::isfinite(delta)) return {left + right, false};
  // Tolerances below the rounding floor of the panel sum cannot be met.
  const bool ok = std::fabs(delta) <= 15.0 * tol ||
                  std::fabs(delta) <= 64.0 * kRoundoff * std::fabs(left + right);
  if (depth <= 0 || (forced <= 0 && ok)) {
    return {left + right + delta / 15.0, ok};
  }
  // Halving stops at a floor so a non-smooth endpoint (y^0.02, say) cannot
  // drive the local tolerance below what Simpson can resolve there.
  const double next = std::max(0.5 * tol, min_tol);
  const auto l = adaptive_simpson_step(f, a, m, fa, flm, fm, left, next, min_tol,
                                       depth - 1, forced - 1);
  const auto r = adaptive_simpson_step(f, m, b, fm, frm, fb, right, next, min_tol,
                                       depth - 1, forced - 1);
  return {l.value + r.value, l.converged && r.converged};
}

template <class F>
SimpsonResult adaptive_simpson(F& f, double a, double b, double tol,
                               int max_depth = 50) {
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(0.5 * (a + b));
  const double whole = simpson_rule(fa, fm, fb, b - a);
  return adaptive_simpson_step(f, a, b, fa, fm, fb, whole, tol,
                               std::ldexp(tol, -24), max_depth, 3);
}

}  // namespace detail

/// Adaptive Simpson estimate of the integral of f over [a, b] to absolute
/// error tol.
///
/// The middle half is integrated directly. Each outer quarter is covered by
/// dyadic shells [a + h/2^(k+1), a + h/2^k] that halve toward the endpoint,
/// and the shell sums are extrapolated geometrically once the shell ratio
/// settles. That is exact for power-law behaviour at the endpoint, so beta
/// pdfs with a shape below one (infinite at the end) or slightly above one
/// (finite, unbounded slope) are handled the same way as smooth integrands.
///
/// Throws ConvergenceError (carrying the best estimate) when the subdivision
/// budget is exhausted.
template <class F>
double quadrature(F&& f, double a, double b, double tol) {
  if (!(a <= b)) throw DomainError("quadrature requires a <= b");
  if (!(tol > 0.0)) throw DomainError("quadrature requires tol > 0");
  if (a == b) return 0.0;

  auto&& fn = f;
  const double h = (b - a) / 4.0;
  const double core_a = a + h;
  const double core_b = b - h;
  const double part_tol = tol / 3.0;

  double total = 0.0;
  bool converged = true;
  {
    const auto res = detail::adaptive_simpson(fn, core_a, core_b, part_tol);
    total += res.value;
    converged = converged && res.converged;
  }

  // Walks shells toward an endpoint. `edge(k)` returns the outer boundary of
  // shell k, measured so that edge(k+1) lies between edge(k) and the endpoint.
  auto shells = [&](auto edge) -> std::pair<double, bool> {
    constexpr int kMaxShells = 1100;
    constexpr double kMinShellWidth = 0x1p-1000;
    double sum = 0.0;
    double prev = 0.0;
    double prev_ratio = 0.0;
    for (int k = 0; k < kMaxShells; ++k) {
      const double outer = edge(k);
      const double inner = edge(k + 1);
      const double lo = std::min(inner, outer);
      const double hi = std::max(inner, outer);
      // Subnormal widths carry too few bits for the error estimate.
      if (!(hi - lo >= kMinShellWidth)) break;
      if (!std::isfinite(fn(lo)) || !std::isfinite(fn(hi))) break;
      const auto res = detail::adaptive_simpson(fn, lo, hi, part_tol * 1e-3);
      const double c = res.value;
      sum += c;
      if (k >= 2 && prev != 0.0) {
        const double ratio = c / prev;
        if (ratio > 0.0 && ratio < 1.0 && prev_ratio > 0.0 && prev_ratio < 1.0) {
          // Geometric tail; its error is driven by the drift of the ratio.
          const double tail = c * ratio / (1.0 - ratio);
          const double drift = std::fabs(ratio - prev_ratio);
          const double err = std::fabs(c) * drift / ((1.0 - ratio) * (1.0 - ratio)) +
                             64.0 * detail::kRoundoff * std::fabs(sum + tail);
          if (err < part_tol / 4.0 || std::fabs(tail) < part_tol * 1e-3) {
            return {sum + tail, true};
          }
        }
        prev_ratio = ratio;
      } else if (k >= 1 && prev == 0.0 && c == 0.0) {
        return {sum, true};
      }
      prev = c;
    }
    return {sum, false};
  };

  for (const auto& [s, ok] :
       {shells([&](int k) { return a + std::ldexp(h, -k); }),
        shells([&](int k) { return b - std::ldexp(h, -k); })}) {
    total += s;
    converged = converged && ok;
  }
  if (!converged) {
    throw ConvergenceError("quadrature did not converge near an endpoint",
                           total);
  }
  return total;
}

}  // namespace dpbeta
