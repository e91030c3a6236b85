#pragma once

// Seeded random streams and the handful of variates the sampler needs.
// Everything here is bit-reproducible across platforms: the engine is
// std::mt19937_64 (fully specified by the standard) and every distribution is
// implemented locally instead of via the implementation-defined std:: ones.

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "dpbeta/errors.hpp"

namespace dpbeta {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream purposes. Each (seed, replicate, purpose) triple gets its own
/// engine so replicates can run in any order.
enum class StreamPurpose : std::uint64_t {
  kBootstrap = 1,
  kChain = 2,
  kTest = 3,
};

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t replicate,
                    StreamPurpose purpose) {
    std::uint64_t key = splitmix64(seed);
    key = splitmix64(key ^ replicate);
    key = splitmix64(key ^ static_cast<std::uint64_t>(purpose));
    return Rng(key);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1); the largest value is 1 - 2^-53.
  double uniform() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Uniform integer in [0, n). Rejection sampling, no modulo bias.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw DomainError("uniform_index requires n > 0");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw DomainError("exponential rate must be positive");
    return -std::log(uniform()) / rate;
  }

  /// Log of a Gamma(shape, 1) variate. Marsaglia-Tsang for shape >= 1; the
  /// boost G(a) = G(a + 1) U^(1/a) for shape < 1, kept in log space so tiny
  /// shapes do not underflow.
  double log_gamma_variate(double shape) {
    if (!(shape > 0.0) || !std::isfinite(shape)) {
      throw DomainError("gamma shape must be positive and finite");
    }
    if (shape < 1.0) {
      return log_gamma_variate(shape + 1.0) + std::log(uniform()) / shape;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      const double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) {
        return std::log(d * v);
      }
    }
  }

  /// Gamma(shape, rate) with density proportional to x^(shape-1) e^(-rate x).
  double gamma(double shape, double rate) {
    if (!(rate > 0.0)) throw DomainError("gamma rate must be positive");
    return std::exp(log_gamma_variate(shape)) / rate;
  }

  /// Beta(a, b) as a ratio of gammas, computed from log variates.
  double beta(double a, double b) {
    const double la = log_gamma_variate(a);
    const double lb = log_gamma_variate(b);
    // x = 1 / (1 + exp(lb - la)), stable in either tail.
    const double diff = lb - la;
    if (diff > 0.0) {
      const double e = std::exp(-diff);
      return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(diff));
  }

  /// Dirichlet(params) as normalized gammas. Zero entries in the output can
  /// only arise from underflow of very small shape parameters.
  std::vector<double> dirichlet(std::span<const double> params) {
    if (params.empty()) throw DomainError("dirichlet requires parameters");
    std::vector<double> logs(params.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < params.size(); ++i) {
      logs[i] = log_gamma_variate(params[i]);
      top = std::max(top, logs[i]);
    }
    std::vector<double> out(params.size());
    double total = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      out[i] = std::exp(logs[i] - top);
      total += out[i];
    }
    for (double& x : out) x /= total;
    return out;
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dpbeta
