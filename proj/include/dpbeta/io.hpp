#pragma once

// On-disk formats: line-delimited JSON draw files, dominance reports,
// curve CSVs and functional summaries. See FORMATS.md.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpbeta/dominance.hpp"
#include "dpbeta/draws.hpp"
#include "dpbeta/errors.hpp"
#include "dpbeta/functionals.hpp"

namespace dpbeta {

inline constexpr int kDrawFormatVersion = 1;
inline constexpr std::string_view kDrawFormatName = "dpbeta-draws";
inline constexpr double kDrawWeightTolerance = 1e-9;

using ojson = nlohmann::ordered_json;

/// 17 significant digits: enough for an exact double round trip.
inline std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline ojson to_json(const PriorConfig& p) {
  ojson j;
  j["alpha0_shape"] = p.alpha0_shape;
  j["alpha0_rate"] = p.alpha0_rate;
  j["m_shape_a"] = p.m_shape_a;
  j["m_shape_b"] = p.m_shape_b;
  j["s_rate"] = p.s_rate;
  j["population_size"] = p.population_size;
  return j;
}

inline ojson to_json(const ChainConfig& c) {
  ojson j;
  j["iterations"] = c.iterations;
  j["burnin"] = c.burnin;
  j["thin"] = c.thin;
  j["replicates"] = c.replicates;
  j["target_accept"] = c.target_accept;
  j["seed"] = c.seed;
  j["k_max"] = c.k_max;
  j["alpha0_variant"] = std::string(to_string(c.alpha0_variant));
  return j;
}

inline PriorConfig prior_from_json(const nlohmann::json& j) {
  PriorConfig p;
  p.alpha0_shape = j.at("alpha0_shape").get<double>();
  p.alpha0_rate = j.at("alpha0_rate").get<double>();
  p.m_shape_a = j.at("m_shape_a").get<double>();
  p.m_shape_b = j.at("m_shape_b").get<double>();
  p.s_rate = j.at("s_rate").get<double>();
  p.population_size = j.at("population_size").get<std::uint64_t>();
  return p;
}

inline ChainConfig chain_from_json(const nlohmann::json& j) {
  ChainConfig c;
  c.iterations = j.at("iterations").get<std::uint64_t>();
  c.burnin = j.at("burnin").get<std::uint64_t>();
  c.thin = j.at("thin").get<std::uint64_t>();
  c.replicates = j.at("replicates").get<std::uint64_t>();
  c.target_accept = j.at("target_accept").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.k_max = j.at("k_max").get<std::uint64_t>();
  c.alpha0_variant =
      parse_alpha0_variant(j.at("alpha0_variant").get<std::string>());
  return c;
}

inline std::string draw_line(const MixtureDraw& d) {
  std::string out = "{\"w\":[";
  auto list = [&out](auto&& get, std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (k) out += ',';
      out += format_real(get(k));
    }
  };
  list([&](std::size_t k) { return d.weights[k]; }, d.size());
  out += "],\"m\":[";
  list([&](std::size_t k) { return d.components[k].mean(); }, d.size());
  out += "],\"s\":[";
  list([&](std::size_t k) { return d.components[k].precision(); }, d.size());
  out += "]}";
  return out;
}

/// Writes the header line followed by one line per draw. `manifest` is the
/// path of the run manifest that produced the file.
inline void write_draws(std::ostream& os, const PosteriorDrawSet& set,
                        const std::string& manifest = "") {
  ojson h;
  h["format"] = kDrawFormatName;
  h["version"] = kDrawFormatVersion;
  h["M"] = set.size();
  h["manifest"] = manifest;
  h["software_version"] = set.software_version;
  h["dataset_fingerprint"] = set.dataset_fingerprint;
  h["seed"] = set.chain.seed;
  h["bootstrap_mode"] = set.bootstrap_mode;
  h["priors"] = to_json(set.priors);
  h["chain"] = to_json(set.chain);
  os << h.dump() << '\n';
  for (const auto& d : set.draws) os << draw_line(d) << '\n';
}

inline void write_draws(const std::string& path, const PosteriorDrawSet& set,
                        const std::string& manifest = "") {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  write_draws(os, set, manifest);
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

inline PosteriorDrawSet read_draws(std::istream& is) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(is, line)) throw FormatError("missing header", lineno);
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("header is not JSON: ") + e.what(), lineno);
  }
  std::size_t expected = 0;
  PosteriorDrawSet set;
  try {
    if (h.at("format").get<std::string>() != kDrawFormatName) {
      throw FormatError("not a draw file", lineno);
    }
    const int version = h.at("version").get<int>();
    if (version != kDrawFormatVersion) {
      throw FormatError("unsupported format version " + std::to_string(version),
                        lineno);
    }
    expected = h.at("M").get<std::size_t>();
    set.software_version = h.at("software_version").get<std::string>();
    set.dataset_fingerprint = h.at("dataset_fingerprint").get<std::string>();
    set.bootstrap_mode = h.at("bootstrap_mode").get<std::string>();
    set.priors = prior_from_json(h.at("priors"));
    set.chain = chain_from_json(h.at("chain"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad header: ") + e.what(), lineno);
  } catch (const DomainError& e) {
    throw FormatError(std::string("bad header: ") + e.what(), lineno);
  }

  set.draws.reserve(expected);
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    MixtureDraw d;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto& w = j.at("w");
      const auto& m = j.at("m");
      const auto& s = j.at("s");
      if (w.size() != m.size() || w.size() != s.size()) {
        throw FormatError("w, m and s differ in length", lineno);
      }
      for (std::size_t k = 0; k < w.size(); ++k) {
        d.weights.push_back(w[k].get<double>());
        const double mk = m[k].get<double>();
        const double sk = s[k].get<double>();
        if (!BetaComponent::valid(mk, sk)) {
          throw FormatError("invalid component " + std::to_string(k), lineno);
        }
        d.components.emplace_back(mk, sk);
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed draw: ") + e.what(), lineno);
    }
    if (auto err = d.check(kDrawWeightTolerance)) throw FormatError(*err, lineno);
    set.draws.push_back(std::move(d));
  }
  if (set.draws.size() != expected) {
    throw FormatError("header declares M = " + std::to_string(expected) +
                          " but the file holds " +
                          std::to_string(set.draws.size()) + " draws",
                      lineno);
  }
  return set;
}

inline PosteriorDrawSet read_draws(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path + "'");
  return read_draws(is);
}

// ---------------------------------------------------------------------------
// Reports

inline ojson to_json(const DominanceReport& r, const std::string& file_a = "",
                     const std::string& file_b = "",
                     const std::string& manifest = "") {
  ojson j;
  j["format"] = "dpbeta-dominance";
  j["version"] = 1;
  j["manifest"] = manifest;
  j["order"] = std::string(to_string(r.order));
  j["cutoff"] = r.cutoff ? ojson(*r.cutoff) : ojson(nullptr);
  j["draws"] = r.draws;
  j["a"] = {{"file", file_a}, {"id", r.id_a}};
  j["b"] = {{"file", file_b}, {"id", r.id_b}};
  j["probabilities"] = {{"a_dominates", r.probabilities.a_dominates},
                        {"b_dominates", r.probabilities.b_dominates},
                        {"neither", r.probabilities.neither}};
  j["zero_curve_draws"] = r.zero_curve_draws;
  j["grid"] = {{"min", r.grid.points.front()},
               {"max", r.grid.points.back()},
               {"points", r.grid.size()}};
  return j;
}

/// Columns y, prob_nonneg, mean_D.
inline std::string curves_csv(const DominanceReport& r) {
  std::string out = "y,prob_nonneg,mean_D\n";
  for (std::size_t h = 0; h < r.grid.size(); ++h) {
    out += format_real(r.grid.points[h]);
    out += ',';
    out += format_real(r.probability_curve[h]);
    out += ',';
    out += format_real(r.mean_difference[h]);
    out += '\n';
  }
  return out;
}

inline ojson to_json(const FunctionalSummary& s,
                     const std::string& manifest = "") {
  auto moment = [](const PosteriorMoment& m) {
    ojson j;
    j["mean"] = m.mean;
    j["sd"] = m.sd ? ojson(*m.sd) : ojson(nullptr);
    return j;
  };
  ojson j;
  j["format"] = "dpbeta-summary";
  j["version"] = 1;
  j["manifest"] = manifest;
  j["threshold"] = s.threshold;
  j["draws"] = s.draws;
  j["mean"] = moment(s.mu);
  j["headcount"] = moment(s.headcount);
  j["fgt1"] = moment(s.fgt1);
  j["fgt2"] = moment(s.fgt2);
  return j;
}

/// Rows mean, headcount, fgt1, fgt2 with columns quantity, mean, sd. An
/// absent sd is written as an empty field.
inline std::string summary_csv(const FunctionalSummary& s) {
  std::string out = "quantity,mean,sd\n";
  auto row = [&out](const char* name, const PosteriorMoment& m) {
    out += name;
    out += ',';
    out += format_real(m.mean);
    out += ',';
    if (m.sd) out += format_real(*m.sd);
    out += '\n';
  };
  row("mean", s.mu);
  row("headcount", s.headcount);
  row("fgt1", s.fgt1);
  row("fgt2", s.fgt2);
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  os << text;
  if (!os) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace dpbeta
