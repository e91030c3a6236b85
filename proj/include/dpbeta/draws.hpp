#pragma once

// Configuration and posterior-draw value types shared by the sampler, the
// functionals and the draw-file codec.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dpbeta/errors.hpp"
#include "dpbeta/ingest.hpp"
#include "dpbeta/mixture_math.hpp"

namespace dpbeta {

inline constexpr std::string_view kVersion = "0.1.0";

/// Hyperparameters: alpha0 ~ Gamma(shape, rate); m_k ~ Beta(a, b);
/// s_k ~ Exponential(rate).
struct PriorConfig {
  double alpha0_shape = 10.0;
  double alpha0_rate = 10.0;
  double m_shape_a = 2.0;
  double m_shape_b = 2.0;
  double s_rate = 0.1;
  std::uint64_t population_size = kDefaultPopulationSize;

  void validate() const {
    const bool ok = alpha0_shape > 0.0 && alpha0_rate > 0.0 && m_shape_a > 0.0 &&
                    m_shape_b > 0.0 && s_rate > 0.0 && population_size > 0;
    if (!ok) throw DomainError("prior parameters must be strictly positive");
  }

  double alpha0_prior_mean() const { return alpha0_shape / alpha0_rate; }
};

enum class Alpha0Variant {
  /// x ~ Beta(alpha0, n); alpha0 ~ Gamma(shape - ln x, rate + K).
  kPaper,
  /// Escobar-West: x ~ Beta(alpha0 + 1, n); two-component gamma mixture
  /// with shapes shape + K, shape + K - 1 and rate rate - ln x.
  kEscobarWest,
};

inline std::string_view to_string(Alpha0Variant v) {
  return v == Alpha0Variant::kPaper ? "paper" : "escobar-west";
}

inline Alpha0Variant parse_alpha0_variant(std::string_view s) {
  if (s == "paper") return Alpha0Variant::kPaper;
  if (s == "escobar-west") return Alpha0Variant::kEscobarWest;
  throw DomainError("unknown alpha0 variant '" + std::string(s) + "'");
}

struct ChainConfig {
  std::uint64_t iterations = 600;
  std::uint64_t burnin = 100;
  std::uint64_t thin = 10;
  std::uint64_t replicates = 8;
  double target_accept = 0.25;
  std::uint64_t seed = 20240601;
  std::uint64_t k_max = 10000;
  Alpha0Variant alpha0_variant = Alpha0Variant::kPaper;

  /// Small schedule suitable for CI and desk checks.
  static ChainConfig desk() { return ChainConfig{}; }

  /// 200 replicates x (6000 iterations, 1000 burn-in, every 100th kept).
  static ChainConfig paper() {
    ChainConfig c;
    c.replicates = 200;
    c.iterations = 6000;
    c.burnin = 1000;
    c.thin = 100;
    return c;
  }

  std::uint64_t retained_per_replicate() const {
    return iterations > burnin && thin > 0 ? (iterations - burnin) / thin : 0;
  }
  std::uint64_t total_draws() const {
    return replicates * retained_per_replicate();
  }

  void validate() const {
    if (thin < 1) throw DomainError("thin must be >= 1");
    if (burnin >= iterations) throw DomainError("burn-in must be below iterations");
    if (retained_per_replicate() < 1) {
      throw DomainError("schedule retains no draws");
    }
    if (replicates < 1) throw DomainError("replicates must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
      throw DomainError("target acceptance must lie in (0, 1)");
    }
    if (k_max < 2) throw DomainError("k_max must be >= 2");
  }
};

/// One retained posterior draw: K live components plus the residual
/// component, which is always last.
struct MixtureDraw {
  std::vector<double> weights;
  std::vector<BetaComponent> components;

  std::size_t size() const noexcept { return components.size(); }

  /// Empty optional when the invariants hold, otherwise a description.
  std::optional<std::string> check(double sum_tol = 1e-9) const {
    if (components.empty()) return "draw has no components";
    if (weights.size() != components.size()) {
      return "weights and components differ in length";
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) return "negative or non-finite weight";
      total += w;
    }
    if (std::fabs(total - 1.0) > sum_tol) {
      return "weights sum to " + std::to_string(total) + ", not 1";
    }
    for (const auto& c : components) {
      if (!BetaComponent::valid(c.mean(), c.precision())) {
        return "invalid component";
      }
    }
    return std::nullopt;
  }

  friend bool operator==(const MixtureDraw&, const MixtureDraw&) = default;
};

struct PosteriorDrawSet {
  std::vector<MixtureDraw> draws;
  PriorConfig priors;
  ChainConfig chain;
  std::string dataset_fingerprint;
  std::string software_version{kVersion};
  std::string bootstrap_mode = "without-replacement";

  std::size_t size() const noexcept { return draws.size(); }

  /// FNV-1a over every weight and component parameter.
  std::string fingerprint() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double x) {
      const auto bits = std::bit_cast<std::uint64_t>(x);
      for (int i = 0; i < 8; ++i) {
        h ^= (bits >> (8 * i)) & 0xffU;
        h *= 0x100000001b3ULL;
      }
    };
    for (const auto& d : draws) {
      for (std::size_t k = 0; k < d.size(); ++k) {
        mix(d.weights[k]);
        mix(d.components[k].mean());
        mix(d.components[k].precision());
      }
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(h));
    return buf;
  }
};

}  // namespace dpbeta
