#pragma once

// Slice sampler for a Dirichlet-process mixture of beta densities.
//
// One iteration, in order:
//   weights | allocations      Dirichlet(n_1, ..., n_K, alpha0)
//   slices  | weights          u_i ~ U(0, w_{v_i})
//   extend                     stick-break the residual until it is below
//                              min_i u_i, new components from the base
//   components | data          adaptive random-walk M-H in (log s, logit m)
//   allocations | slices       categorical over {k : u_i < w_k}, prune empty
//   alpha0 | K                 auxiliary-variable gamma update
//   emit                       residual weight and a base-drawn component
//
// Weights are drawn before slices so that u_i < w_{v_i} holds when the
// allocations are resampled.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "dpbeta/bootstrap.hpp"
#include "dpbeta/draws.hpp"
#include "dpbeta/errors.hpp"
#include "dpbeta/ingest.hpp"
#include "dpbeta/mixture_math.hpp"
#include "dpbeta/random.hpp"

namespace dpbeta {

inline constexpr double kMaxPrecision = 1e8;

struct ProposalScales {
  double xi = 0.5;     // random-walk sd for log s
  double kappa = 0.5;  // random-walk sd for logit m
};

/// Knobs that are not part of the persisted configuration.
struct SamplerOptions {
  /// Off: the beta likelihood is dropped from the component update and from
  /// reallocation, so the chain targets the prior. Used for kinematic checks.
  bool use_likelihood = true;
  double adapt_constant = 2.4;
  ProposalScales initial_scales{};
};

struct ChainState {
  std::vector<double> y;
  std::vector<double> log_y;
  std::vector<double> log_1my;
  std::vector<BetaComponent> components;
  /// components.size() + 1 entries; the last is the residual.
  std::vector<double> weights;
  std::vector<std::uint32_t> alloc;
  std::vector<double> slices;
  double alpha0 = 1.0;
  ProposalScales scales{};

  std::size_t live() const noexcept { return components.size(); }
  std::size_t n() const noexcept { return y.size(); }
  double residual() const { return weights.back(); }

  std::vector<std::size_t> counts() const {
    std::vector<std::size_t> c(live(), 0);
    for (auto v : alloc) ++c[v];
    return c;
  }
};

/// Sufficient statistics of the observations allocated to one component.
struct ComponentData {
  std::size_t count = 0;
  double sum_log_y = 0.0;
  double sum_log_1my = 0.0;
};

struct AcceptanceStats {
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  double rate() const {
    return proposals == 0 ? 0.0
                          : static_cast<double>(accepted) /
                                static_cast<double>(proposals);
  }
};

struct ChainDiagnostics {
  std::uint64_t replicate = 0;
  AcceptanceStats burnin;
  AcceptanceStats retained;
  ProposalScales final_scales{};
  std::size_t max_live = 0;
  double mean_live = 0.0;
};

inline BetaComponent draw_from_base(const PriorConfig& priors, Rng& rng) {
  for (;;) {
    const double m = rng.beta(priors.m_shape_a, priors.m_shape_b);
    const double s = rng.exponential(priors.s_rate);
    if (BetaComponent::valid(m, s)) return BetaComponent(m, s);
  }
}

/// Throws InvariantError describing the first broken invariant.
inline void check_state(const ChainState& st, double sum_tol = 1e-12) {
  if (st.weights.size() != st.live() + 1) {
    throw InvariantError("weights vector has the wrong length");
  }
  double total = 0.0;
  for (double w : st.weights) {
    if (!(w >= 0.0)) throw InvariantError("negative weight");
    total += w;
  }
  if (std::fabs(total - 1.0) > sum_tol) {
    throw InvariantError("weights sum to " + std::to_string(total));
  }
  const auto c = st.counts();
  for (std::size_t k = 0; k < c.size(); ++k) {
    if (c[k] == 0) throw InvariantError("live component without data");
  }
  if (!st.slices.empty()) {
    for (std::size_t i = 0; i < st.n(); ++i) {
      const double u = st.slices[i];
      if (!(u > 0.0 && u < st.weights[st.alloc[i]])) {
        throw InvariantError("slice outside (0, w_{v_i}) for observation " +
                             std::to_string(i));
      }
    }
  }
}

namespace detail {

// Removes components with no allocations, preserving order, and recomputes
// the residual so the weights sum to one.
inline void prune_empty(ChainState& st) {
  const auto counts = st.counts();
  std::vector<std::uint32_t> remap(st.live(), 0);
  std::vector<BetaComponent> comps;
  std::vector<double> weights;
  for (std::size_t k = 0; k < st.live(); ++k) {
    if (counts[k] == 0) continue;
    remap[k] = static_cast<std::uint32_t>(comps.size());
    comps.push_back(st.components[k]);
    weights.push_back(st.weights[k]);
  }
  for (auto& v : st.alloc) v = remap[v];
  double total = 0.0;
  for (double w : weights) total += w;
  weights.push_back(std::max(0.0, 1.0 - total));
  st.components = std::move(comps);
  st.weights = std::move(weights);
}

inline double logit(double m) { return std::log(m) - std::log1p(-m); }

inline double inv_logit(double k) {
  return k >= 0.0 ? 1.0 / (1.0 + std::exp(-k))
                  : std::exp(k) / (1.0 + std::exp(k));
}

}  // namespace detail

/// Three components, allocations uniform over them, weights from
/// Dirichlet(1, 1, 1), parameters from the base distributions, alpha0 at its
/// prior mean. Components left empty by the random allocation are dropped.
inline ChainState init_state(std::span<const double> pseudo_sample,
                             const PriorConfig& priors, Rng& rng,
                             const ProposalScales& scales = {}) {
  if (pseudo_sample.empty()) throw DomainError("init_state: empty sample");
  ChainState st;
  st.y.assign(pseudo_sample.begin(), pseudo_sample.end());
  st.log_y.reserve(st.n());
  st.log_1my.reserve(st.n());
  for (double y : st.y) {
    if (!(y > 0.0 && y < 1.0)) throw DomainError("score outside (0, 1)");
    st.log_y.push_back(std::log(y));
    st.log_1my.push_back(std::log1p(-y));
  }
  constexpr std::size_t kInitial = 3;
  st.alloc.resize(st.n());
  for (auto& v : st.alloc) {
    v = static_cast<std::uint32_t>(rng.uniform_index(kInitial));
  }
  const double ones[kInitial] = {1.0, 1.0, 1.0};
  auto w = rng.dirichlet(ones);
  st.weights.assign(w.begin(), w.end());
  st.weights.push_back(0.0);
  for (std::size_t k = 0; k < kInitial; ++k) {
    st.components.push_back(draw_from_base(priors, rng));
  }
  st.alpha0 = priors.alpha0_prior_mean();
  st.scales = scales;
  detail::prune_empty(st);
  return st;
}

/// Step: weights | allocations ~ Dirichlet(n_1, ..., n_K, alpha0).
inline void sample_weights(ChainState& st, Rng& rng) {
  const auto counts = st.counts();
  std::vector<double> params;
  params.reserve(counts.size() + 1);
  for (auto c : counts) {
    if (c == 0) throw InvariantError("sample_weights: empty live component");
    params.push_back(static_cast<double>(c));
  }
  params.push_back(st.alpha0);
  st.weights = rng.dirichlet(params);
}

/// Step: u_i ~ U(0, w_{v_i}).
inline void sample_slices(ChainState& st, Rng& rng) {
  st.slices.resize(st.n());
  for (std::size_t i = 0; i < st.n(); ++i) {
    const double w = st.weights[st.alloc[i]];
    if (!(w > 0.0)) {
      throw InvariantError("sample_slices: zero weight on an occupied component");
    }
    double u = w * rng.uniform();
    if (u >= w) u = std::nextafter(w, 0.0);
    st.slices[i] = u;
  }
}

/// Splits the residual: the new component takes eta * residual and the
/// residual keeps (1 - eta) * residual.
inline void break_residual(ChainState& st, double eta,
                           const BetaComponent& fresh) {
  const double r = st.weights.back();
  st.weights.back() = eta * r;
  st.weights.push_back((1.0 - eta) * r);
  st.components.push_back(fresh);
}

/// Step: stick-break the residual until it is no larger than every slice.
inline void extend_components(ChainState& st, const PriorConfig& priors,
                              Rng& rng, std::uint64_t k_max) {
  if (st.slices.empty()) return;
  const double min_slice = *std::min_element(st.slices.begin(), st.slices.end());
  while (st.residual() > min_slice) {
    if (st.live() + 1 > k_max) {
      throw ResourceError("live component count exceeded k_max = " +
                          std::to_string(k_max));
    }
    const double eta = rng.beta(1.0, st.alpha0);
    break_residual(st, eta, draw_from_base(priors, rng));
  }
}

/// log p(m, s) up to a constant under the base distributions.
inline double log_base_density(const BetaComponent& c, const PriorConfig& p) {
  const double m = c.mean();
  return (p.m_shape_a - 1.0) * std::log(m) +
         (p.m_shape_b - 1.0) * std::log1p(-m) - p.s_rate * c.precision();
}

inline double component_log_likelihood(const BetaComponent& c,
                                       const ComponentData& d) {
  if (d.count == 0) return 0.0;
  const double a = c.alpha();
  const double b = c.beta();
  return -static_cast<double>(d.count) * log_beta_function(a, b) +
         (a - 1.0) * d.sum_log_y + (b - 1.0) * d.sum_log_1my;
}

/// Log of the M-H ratio for a random walk in (log s, logit m): the posterior
/// ratio times the Jacobians s*/s and m*(1-m*) / (m(1-m)).
inline double mh_log_acceptance_ratio(const BetaComponent& current,
                                      const BetaComponent& proposal,
                                      const ComponentData& data,
                                      const PriorConfig& priors,
                                      bool use_likelihood = true) {
  if (current == proposal) return 0.0;
  double lr = log_base_density(proposal, priors) -
              log_base_density(current, priors);
  if (use_likelihood) {
    lr += component_log_likelihood(proposal, data) -
          component_log_likelihood(current, data);
  }
  const double m = current.mean();
  const double ms = proposal.mean();
  lr += std::log(proposal.precision()) - std::log(current.precision());
  lr += std::log(ms) + std::log1p(-ms) - std::log(m) - std::log1p(-m);
  return lr;
}

inline double mh_acceptance_ratio(const BetaComponent& current,
                                  const BetaComponent& proposal,
                                  const ComponentData& data,
                                  const PriorConfig& priors,
                                  bool use_likelihood = true) {
  return std::exp(
      mh_log_acceptance_ratio(current, proposal, data, priors, use_likelihood));
}

/// Robbins-Monro step on the log scale of both proposal sds:
///   ln v += c (accepted - p*) / max(1, t p* (1 - p*)).
inline ProposalScales adapt_scales(ProposalScales scales, bool accepted,
                                   std::uint64_t t, double target,
                                   double constant = 2.4) {
  if (t < 1) throw DomainError("adapt_scales requires t >= 1");
  const double denom =
      std::max(1.0, static_cast<double>(t) * target * (1.0 - target));
  const double step = constant * ((accepted ? 1.0 : 0.0) - target) / denom;
  const double factor = std::exp(step);
  scales.xi *= factor;
  scales.kappa *= factor;
  return scales;
}

inline std::vector<ComponentData> component_data(const ChainState& st) {
  std::vector<ComponentData> d(st.live());
  for (std::size_t i = 0; i < st.n(); ++i) {
    auto& c = d[st.alloc[i]];
    ++c.count;
    c.sum_log_y += st.log_y[i];
    c.sum_log_1my += st.log_1my[i];
  }
  return d;
}

struct AdaptationState {
  bool active = false;
  std::uint64_t t = 0;  // proposals seen while adapting
  double target = 0.25;
  double constant = 2.4;
};

/// Step: one joint random-walk M-H update for each occupied component.
/// Acceptance outcomes go to `stats`; scales adapt while `adapt.active`.
inline void update_components(ChainState& st, const PriorConfig& priors,
                              Rng& rng, AdaptationState& adapt,
                              AcceptanceStats& stats,
                              bool use_likelihood = true) {
  const auto data = component_data(st);
  for (std::size_t k = 0; k < st.live(); ++k) {
    if (data[k].count == 0) continue;
    const BetaComponent cur = st.components[k];
    const double dxi = st.scales.xi * rng.normal();
    const double dkappa = st.scales.kappa * rng.normal();
    const double s_new =
        dxi == 0.0 ? cur.precision() : std::exp(std::log(cur.precision()) + dxi);
    const double m_new =
        dkappa == 0.0 ? cur.mean() : detail::inv_logit(detail::logit(cur.mean()) + dkappa);

    bool accepted = false;
    if (s_new <= kMaxPrecision && BetaComponent::valid(m_new, s_new)) {
      const BetaComponent prop(m_new, s_new);
      const double lr =
          mh_log_acceptance_ratio(cur, prop, data[k], priors, use_likelihood);
      if (std::log(rng.uniform()) < lr) {
        st.components[k] = prop;
        accepted = true;
      }
    } else {
      (void)rng.uniform();
    }
    ++stats.proposals;
    if (accepted) ++stats.accepted;
    if (adapt.active) {
      ++adapt.t;
      st.scales = adapt_scales(st.scales, accepted, adapt.t, adapt.target,
                               adapt.constant);
    }
  }
}

/// Step: resample each allocation among components whose weight exceeds
/// the observation's slice, then prune empty components.
inline void reallocate(ChainState& st, Rng& rng, bool use_likelihood = true) {
  const std::size_t K = st.live();
  std::vector<double> norm(K), am1(K), bm1(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = st.components[k];
    norm[k] = -log_beta_function(c.alpha(), c.beta());
    am1[k] = c.alpha() - 1.0;
    bm1[k] = c.beta() - 1.0;
  }
  std::vector<double> logp(K);
  std::vector<std::uint32_t> cand;
  cand.reserve(K);
  for (std::size_t i = 0; i < st.n(); ++i) {
    const double u = st.slices[i];
    cand.clear();
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < K; ++k) {
      if (!(u < st.weights[k])) continue;
      const double lp = use_likelihood
                            ? norm[k] + am1[k] * st.log_y[i] + bm1[k] * st.log_1my[i]
                            : 0.0;
      logp[cand.size()] = lp;
      cand.push_back(static_cast<std::uint32_t>(k));
      top = std::max(top, lp);
    }
    if (cand.empty()) {
      throw InvariantError("reallocate: observation " + std::to_string(i) +
                           " has no component above its slice");
    }
    if (cand.size() == 1) {
      st.alloc[i] = cand[0];
      continue;
    }
    double total = 0.0;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      logp[c] = std::exp(logp[c] - top);
      total += logp[c];
    }
    double target = rng.uniform() * total;
    std::size_t pick = cand.size() - 1;
    for (std::size_t c = 0; c < cand.size(); ++c) {
      target -= logp[c];
      if (target < 0.0) {
        pick = c;
        break;
      }
    }
    st.alloc[i] = cand[pick];
  }
  detail::prune_empty(st);
}

struct GammaParams {
  double shape;
  double rate;
};

/// Gamma(shape - ln x, rate + K) for the concentration update.
inline GammaParams concentration_gamma_params(const PriorConfig& priors,
                                              double x, std::size_t live) {
  return {priors.alpha0_shape - std::log(x),
          priors.alpha0_rate + static_cast<double>(live)};
}

/// Step: alpha0 | K via an auxiliary beta variate.
inline void update_concentration(ChainState& st, const PriorConfig& priors,
                                 Rng& rng, Alpha0Variant variant) {
  const auto n = static_cast<double>(st.n());
  const auto K = static_cast<double>(st.live());
  if (st.live() < 1) throw InvariantError("update_concentration: K = 0");
  const double a = variant == Alpha0Variant::kPaper ? st.alpha0 : st.alpha0 + 1.0;
  double x = 0.0;
  for (int tries = 0;; ++tries) {
    x = rng.beta(a, n);
    if (x >= 1e-300 && x <= 1.0 - 1e-12) break;
    if (tries > 1000) {
      throw InvariantError("update_concentration: auxiliary draw degenerate");
    }
  }
  if (variant == Alpha0Variant::kPaper) {
    const auto g = concentration_gamma_params(priors, x, st.live());
    st.alpha0 = rng.gamma(g.shape, g.rate);
    return;
  }
  const double rate = priors.alpha0_rate - std::log(x);
  const double odds = (priors.alpha0_shape + K - 1.0) / (n * rate);
  const double pi = odds / (1.0 + odds);
  const double shape =
      rng.uniform() < pi ? priors.alpha0_shape + K : priors.alpha0_shape + K - 1.0;
  st.alpha0 = rng.gamma(shape, rate);
}

/// Step: emit the live components plus a residual component drawn from the
/// base distributions with weight 1 - sum of live weights.
inline MixtureDraw finalize_draw(const ChainState& st, const PriorConfig& priors,
                                 Rng& rng) {
  MixtureDraw d;
  d.components = st.components;
  d.weights.assign(st.weights.begin(), st.weights.begin() + st.live());
  double total = 0.0;
  for (double w : d.weights) total += w;
  d.weights.push_back(std::max(0.0, 1.0 - total));
  d.components.push_back(draw_from_base(priors, rng));
  return d;
}

struct ChainResult {
  std::vector<MixtureDraw> draws;
  ChainDiagnostics diagnostics;
};

/// Runs one chain on a pseudo-sample and returns the retained draws in
/// iteration order.
inline ChainResult run_chain(std::span<const double> pseudo_sample,
                             const PriorConfig& priors, const ChainConfig& chain,
                             std::uint64_t replicate,
                             const SamplerOptions& opts = {}) {
  priors.validate();
  chain.validate();
  auto rng = Rng::stream(chain.seed, replicate, StreamPurpose::kChain);
  auto st = init_state(pseudo_sample, priors, rng, opts.initial_scales);

  ChainResult out;
  out.diagnostics.replicate = replicate;
  out.draws.reserve(chain.retained_per_replicate());
  AdaptationState adapt{true, 0, chain.target_accept, opts.adapt_constant};
  double live_sum = 0.0;

  for (std::uint64_t t = 1; t <= chain.iterations; ++t) {
    adapt.active = t <= chain.burnin;
    auto& stats = adapt.active ? out.diagnostics.burnin : out.diagnostics.retained;
    sample_weights(st, rng);
    sample_slices(st, rng);
    extend_components(st, priors, rng, chain.k_max);
    out.diagnostics.max_live = std::max(out.diagnostics.max_live, st.live());
    update_components(st, priors, rng, adapt, stats, opts.use_likelihood);
    reallocate(st, rng, opts.use_likelihood);
    update_concentration(st, priors, rng, chain.alpha0_variant);
    check_state(st);
    live_sum += static_cast<double>(st.live());

    if (t > chain.burnin && (t - chain.burnin) % chain.thin == 0) {
      out.draws.push_back(finalize_draw(st, priors, rng));
    }
  }
  out.diagnostics.final_scales = st.scales;
  out.diagnostics.mean_live = live_sum / static_cast<double>(chain.iterations);
  return out;
}

struct AnalysisResult {
  PosteriorDrawSet draws;
  std::vector<ChainDiagnostics> diagnostics;

  AcceptanceStats retained_acceptance() const {
    AcceptanceStats s;
    for (const auto& d : diagnostics) {
      s.proposals += d.retained.proposals;
      s.accepted += d.retained.accepted;
    }
    return s;
  }
};

/// Bootstrap replicates, one chain each, concatenated replicate-major. The
/// result does not depend on `threads`.
inline AnalysisResult run_analysis(const HealthDataset& ds,
                                   const PriorConfig& priors,
                                   const ChainConfig& chain,
                                   unsigned threads = 1,
                                   const SamplerOptions& opts = {}) {
  priors.validate();
  chain.validate();
  if (ds.population_size != priors.population_size) {
    throw DomainError("dataset and prior configuration disagree on N");
  }
  const auto J = static_cast<std::size_t>(chain.replicates);
  std::vector<ChainResult> results(J);
  std::vector<std::exception_ptr> errors(J);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t j = next++; j < J; j = next++) {
      try {
        const auto sample = draw_pseudo_sample(ds, chain.seed, j);
        results[j] = run_chain(sample.values, priors, chain, j, opts);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  const unsigned n_threads =
      std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(J)));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  AnalysisResult out;
  out.draws.priors = priors;
  out.draws.chain = chain;
  out.draws.dataset_fingerprint = dataset_fingerprint(ds);
  out.draws.draws.reserve(chain.total_draws());
  for (auto& r : results) {
    for (auto& d : r.draws) out.draws.draws.push_back(std::move(d));
    out.diagnostics.push_back(r.diagnostics);
  }
  return out;
}

}  // namespace dpbeta
