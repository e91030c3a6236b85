#pragma once

// Command implementations behind the dpbeta executable: fit, summarize and
// compare. Each command is a function of its options struct so tests can
// drive it without a process boundary.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpbeta/dominance.hpp"
#include "dpbeta/draws.hpp"
#include "dpbeta/functionals.hpp"
#include "dpbeta/ingest.hpp"
#include "dpbeta/io.hpp"
#include "dpbeta/sampler.hpp"

namespace dpbeta::cli {

/// Reads `key = value` lines; '#' starts a comment. Keys are flag names
/// without the leading dashes.
inline std::map<std::string, std::string> read_config_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const auto body = dpbeta::detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected key = value");
    }
    auto key = std::string(dpbeta::detail::trim(body.substr(0, eq)));
    auto value = std::string(dpbeta::detail::trim(body.substr(eq + 1)));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
      value = value.substr(1, value.size() - 2);
    }
    out[key] = value;
  }
  return out;
}

struct GridOptions {
  double min = EvaluationGrid::kDefaultMin;
  double max = EvaluationGrid::kDefaultMax;
  std::size_t points = EvaluationGrid::kDefaultCount;

  EvaluationGrid make() const { return EvaluationGrid::uniform(min, max, points); }
};

inline ojson to_json(const GridOptions& g) {
  return {{"min", g.min}, {"max", g.max}, {"points", g.points}};
}

inline void write_manifest(const std::string& path, const ojson& manifest) {
  write_text(path, manifest.dump(2) + "\n");
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  CsvOptions csv;
  std::optional<std::pair<std::string, std::string>> filter;  // label, value
  PriorConfig priors;
  ChainConfig chain;
  unsigned threads = 1;
  std::string output;
  std::string preset = "desk";
};

struct FitOutcome {
  IngestReport ingest;
  AnalysisResult analysis;
  std::string manifest_path;
};

inline FitOutcome cmd_fit(const FitOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  FitOutcome out;
  auto csv = opts.csv;
  csv.population_size = opts.priors.population_size;
  auto ds = load_csv(csv, &out.ingest);
  if (opts.filter) {
    ds = subgroup(ds, opts.filter->first, opts.filter->second);
    out.ingest.n = ds.size();
  }
  out.analysis = run_analysis(ds, opts.priors, opts.chain, opts.threads);
  out.manifest_path = opts.output + ".manifest.json";
  write_draws(opts.output, out.analysis.draws, out.manifest_path);

  ojson m;
  m["command"] = "fit";
  m["software_version"] = std::string(kVersion);
  m["input"] = opts.csv.path;
  m["output"] = opts.output;
  m["preset"] = opts.preset;
  m["filter"] = opts.filter ? ojson(opts.filter->first + "=" + opts.filter->second)
                            : ojson(nullptr);
  m["seed"] = opts.chain.seed;
  m["threads"] = opts.threads;
  m["priors"] = to_json(opts.priors);
  m["chain"] = to_json(opts.chain);
  m["bootstrap_mode"] = out.analysis.draws.bootstrap_mode;
  m["dataset_fingerprint"] = out.analysis.draws.dataset_fingerprint;
  m["draws_fingerprint"] = out.analysis.draws.fingerprint();
  m["draws"] = out.analysis.draws.size();
  m["ingest"] = out.ingest.to_json();
  const auto acc = out.analysis.retained_acceptance();
  m["acceptance_after_burnin"] = acc.rate();
  ojson warnings = ojson::array();
  if (out.ingest.clamped_upper > 0) {
    warnings.push_back(std::to_string(out.ingest.clamped_upper) +
                       " scores at 1 clamped to 0.999");
  }
  if (out.ingest.clamped_lower > 0) {
    warnings.push_back(std::to_string(out.ingest.clamped_lower) +
                       " scores at 0 clamped to 0.001");
  }
  m["warnings"] = warnings;
  m["wall_clock_seconds"] = seconds_since(t0);
  write_manifest(out.manifest_path, m);
  return out;
}

// ---------------------------------------------------------------------------
// summarize

struct SummarizeOptions {
  std::string draws;
  double threshold = kDefaultThreshold;
  std::string output_prefix;
  bool density = false;
  GridOptions grid;
};

struct SummarizeOutcome {
  FunctionalSummary summary;
  std::vector<std::string> files;
};

inline SummarizeOutcome cmd_summarize(const SummarizeOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto set = read_draws(opts.draws);
  SummarizeOutcome out;
  out.summary = summarize(set.draws, opts.threshold);
  const std::string manifest = opts.output_prefix + ".manifest.json";

  const auto json_path = opts.output_prefix + ".summary.json";
  write_text(json_path, to_json(out.summary, manifest).dump(2) + "\n");
  const auto csv_path = opts.output_prefix + ".summary.csv";
  write_text(csv_path, summary_csv(out.summary));
  out.files = {json_path, csv_path};

  std::string mu = "draw,mu\n";
  for (std::size_t j = 0; j < set.size(); ++j) {
    mu += std::to_string(j) + "," + format_real(mixture_mean(set.draws[j])) + "\n";
  }
  const auto mu_path = opts.output_prefix + ".mu.csv";
  write_text(mu_path, mu);
  out.files.push_back(mu_path);

  if (opts.density) {
    const auto grid = opts.grid.make();
    std::string dens = "y,density\n";
    for (double y : grid.points) {
      if (!(y > 0.0 && y < 1.0)) continue;
      dens += format_real(y) + "," + format_real(predictive_density(y, set.draws)) +
              "\n";
    }
    const auto dens_path = opts.output_prefix + ".density.csv";
    write_text(dens_path, dens);
    out.files.push_back(dens_path);
  }

  ojson m;
  m["command"] = "summarize";
  m["software_version"] = std::string(kVersion);
  m["draws"] = opts.draws;
  m["draws_fingerprint"] = set.fingerprint();
  m["dataset_fingerprint"] = set.dataset_fingerprint;
  m["seed"] = set.chain.seed;
  m["threshold"] = opts.threshold;
  m["grid"] = opts.density ? to_json(opts.grid) : ojson(nullptr);
  m["outputs"] = out.files;
  m["warnings"] = ojson::array();
  m["wall_clock_seconds"] = seconds_since(t0);
  write_manifest(manifest, m);
  return out;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOptions {
  std::string draws_a;
  std::string draws_b;
  std::string order = "both";  // fsd | ssd | both
  GridOptions grid;
  std::optional<double> cutoff;
  bool truncate = false;
  unsigned threads = 1;
  std::string output_prefix;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CompareOutcome {
  std::vector<DominanceReport> reports;
  std::vector<std::string> files;
  /// Paired draws that are FSD in one direction but not SSD in the same
  /// direction. Only counted when both orders are requested.
  std::size_t fsd_without_ssd = 0;
};

inline CompareOutcome cmd_compare(const CompareOptions& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<DominanceOrder> orders;
  if (opts.order == "fsd" || opts.order == "both") {
    orders.push_back(DominanceOrder::kFirst);
  }
  if (opts.order == "ssd" || opts.order == "both") {
    orders.push_back(DominanceOrder::kSecond);
  }
  if (orders.empty()) throw UsageError("--order must be fsd, ssd or both");

  auto a = read_draws(opts.draws_a);
  auto b = read_draws(opts.draws_b);
  if (a.size() != b.size()) {
    if (!opts.truncate) {
      throw UsageError("draw files hold " + std::to_string(a.size()) + " and " +
                       std::to_string(b.size()) +
                       " draws; pass --truncate to pair the first min(M) draws");
    }
    const auto m = std::min(a.size(), b.size());
    a.draws.resize(m);
    b.draws.resize(m);
  }
  const auto grid = opts.grid.make();
  const std::string manifest = opts.output_prefix + ".manifest.json";

  CompareOutcome out;
  ojson warnings = ojson::array();
  auto emit = [&](const DominanceReport& rep, const std::string& stem) {
    const auto json_path = stem + ".json";
    const auto csv_path = stem + ".curves.csv";
    write_text(json_path,
               to_json(rep, opts.draws_a, opts.draws_b, manifest).dump(2) + "\n");
    write_text(csv_path, curves_csv(rep));
    out.files.push_back(json_path);
    out.files.push_back(csv_path);
    if (rep.zero_curve_draws > 0) {
      const auto msg = std::string(to_string(rep.order)) + ": " +
                       std::to_string(rep.zero_curve_draws) +
                       " draws with an identically zero difference curve "
                       "counted as neither";
      std::cerr << "warning: " << msg << "\n";
      warnings.push_back(msg);
    }
    out.reports.push_back(rep);
  };

  for (auto order : orders) {
    const auto stem = opts.output_prefix + "." + std::string(to_string(order));
    emit(dominance_report(order, a, b, grid, opts.threads), stem);
    if (opts.cutoff) {
      emit(restricted_report(order, a, b, grid, *opts.cutoff, opts.threads),
           stem + ".restricted");
    }
  }

  if (orders.size() == 2) {
    const auto& fsd = out.reports.front();
    const auto& ssd = out.reports[opts.cutoff ? 2 : 1];
    for (std::size_t j = 0; j < fsd.verdicts.size(); ++j) {
      if (fsd.verdicts[j] != Verdict::kNeither && fsd.verdicts[j] != ssd.verdicts[j]) {
        ++out.fsd_without_ssd;
      }
    }
  }

  ojson m;
  m["command"] = "compare";
  m["software_version"] = std::string(kVersion);
  m["draws_a"] = opts.draws_a;
  m["draws_b"] = opts.draws_b;
  m["draws_fingerprint_a"] = a.fingerprint();
  m["draws_fingerprint_b"] = b.fingerprint();
  m["dataset_fingerprint_a"] = a.dataset_fingerprint;
  m["dataset_fingerprint_b"] = b.dataset_fingerprint;
  m["order"] = opts.order;
  m["grid"] = to_json(opts.grid);
  m["cutoff"] = opts.cutoff ? ojson(*opts.cutoff) : ojson(nullptr);
  m["truncate"] = opts.truncate;
  m["threads"] = opts.threads;
  m["paired_draws"] = a.size();
  m["fsd_without_ssd"] = out.fsd_without_ssd;
  m["outputs"] = out.files;
  m["warnings"] = warnings;
  m["wall_clock_seconds"] = seconds_since(t0);
  write_manifest(manifest, m);
  return out;
}

}  // namespace dpbeta::cli
