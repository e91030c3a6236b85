// dpbeta: fit beta-mixture posteriors to weighted scores, summarize them and
// compare two fits for stochastic dominance.

#include <algorithm>
#include <iostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dpbeta/cli.hpp"

namespace {

using namespace dpbeta;

// Applies `key = value` pairs from --config as option defaults, so explicit
// flags still win. Returns the keys that were set.
std::set<std::string> apply_config(CLI::App& app, int argc, char** argv) {
  std::set<std::string> keys;
  std::string path;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) path = argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) path = arg.substr(9);
  }
  if (path.empty()) return keys;
  for (const auto& [key, value] : cli::read_config_file(path)) {
    bool used = false;
    for (auto* sub : app.get_subcommands({})) {
      if (auto* opt = sub->get_option_no_throw("--" + key)) {
        opt->default_val(value);
        used = true;
      }
    }
    if (!used) throw std::runtime_error("config key '" + key + "' is not a known flag");
    keys.insert(key);
  }
  return keys;
}

void add_grid(CLI::App* cmd, cli::GridOptions& g) {
  cmd->add_option("--grid-min", g.min, "Lowest grid point")->capture_default_str();
  cmd->add_option("--grid-max", g.max, "Highest grid point")->capture_default_str();
  cmd->add_option("--grid-points", g.points, "Number of grid points")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet-process beta mixtures and stochastic dominance"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value file of flag defaults");

  // fit
  cli::FitOptions fit;
  std::string weight_column;
  std::string filter;
  std::string variant = "paper";
  auto* fit_cmd = app.add_subcommand("fit", "Fit a posterior draw file from a CSV");
  fit_cmd->add_option("--input", fit.csv.path, "Input CSV")->required();
  fit_cmd->add_option("--output", fit.output, "Output draw file (.jsonl)")->required();
  fit_cmd->add_option("--score-column", fit.csv.score_column)->capture_default_str();
  fit_cmd->add_option("--weight-column", weight_column, "Sampling weight column");
  fit_cmd->add_option("--group-column", fit.csv.group_columns,
                      "Categorical columns to load");
  fit_cmd->add_option("--filter", filter, "Restrict to a subgroup, label=value");
  fit_cmd->add_option("--preset", fit.preset, "Chain schedule preset")
      ->check(CLI::IsMember({"desk", "paper"}))
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit.chain.seed)->capture_default_str();
  fit_cmd->add_option("--population-size", fit.priors.population_size)
      ->capture_default_str();
  auto* reps = fit_cmd->add_option("--replicates", fit.chain.replicates)
                   ->capture_default_str();
  auto* iters = fit_cmd->add_option("--iterations", fit.chain.iterations)
                    ->capture_default_str();
  auto* burn = fit_cmd->add_option("--burnin", fit.chain.burnin)->capture_default_str();
  auto* thin = fit_cmd->add_option("--thin", fit.chain.thin)->capture_default_str();
  fit_cmd->add_option("--target-accept", fit.chain.target_accept)
      ->capture_default_str();
  fit_cmd->add_option("--alpha0-variant", variant)
      ->check(CLI::IsMember({"paper", "escobar-west"}))
      ->capture_default_str();
  fit_cmd->add_option("--threads", fit.threads)->capture_default_str();
  fit_cmd->add_option("--config", config_path, "key = value file of flag defaults");

  // summarize
  cli::SummarizeOptions sum;
  auto* sum_cmd = app.add_subcommand("summarize", "Posterior summaries of a draw file");
  sum_cmd->add_option("--draws", sum.draws, "Draw file")->required();
  sum_cmd->add_option("--output-prefix", sum.output_prefix)->required();
  sum_cmd->add_option("--threshold", sum.threshold, "Poverty line z")
      ->capture_default_str();
  sum_cmd->add_flag("--density", sum.density, "Also write the predictive density");
  add_grid(sum_cmd, sum.grid);
  sum_cmd->add_option("--config", config_path, "key = value file of flag defaults");

  // compare
  cli::CompareOptions cmp;
  double cutoff = 0.0;
  auto* cmp_cmd = app.add_subcommand("compare", "Dominance probabilities for two fits");
  cmp_cmd->add_option("--draws-a", cmp.draws_a, "Draw file for population A")
      ->required();
  cmp_cmd->add_option("--draws-b", cmp.draws_b, "Draw file for population B")
      ->required();
  cmp_cmd->add_option("--output-prefix", cmp.output_prefix)->required();
  cmp_cmd->add_option("--order", cmp.order)
      ->check(CLI::IsMember({"fsd", "ssd", "both"}))
      ->capture_default_str();
  add_grid(cmp_cmd, cmp.grid);
  auto* cutoff_opt =
      cmp_cmd->add_option("--cutoff", cutoff, "Also report dominance on y <= cutoff");
  cmp_cmd->add_flag("--truncate", cmp.truncate,
                    "Pair the first min(M_A, M_B) draws when lengths differ");
  cmp_cmd->add_option("--threads", cmp.threads)->capture_default_str();
  cmp_cmd->add_option("--config", config_path, "key = value file of flag defaults");

  std::set<std::string> from_config;
  try {
    from_config = apply_config(app, argc, argv);
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (fit_cmd->parsed()) {
      if (fit.preset == "paper") {
        const auto p = ChainConfig::paper();
        auto unset = [&](CLI::Option* o, const char* key) {
          return o->count() == 0 && from_config.count(key) == 0;
        };
        if (unset(reps, "replicates")) fit.chain.replicates = p.replicates;
        if (unset(iters, "iterations")) fit.chain.iterations = p.iterations;
        if (unset(burn, "burnin")) fit.chain.burnin = p.burnin;
        if (unset(thin, "thin")) fit.chain.thin = p.thin;
      }
      if (!weight_column.empty()) fit.csv.weight_column = weight_column;
      if (!filter.empty()) {
        const auto eq = filter.find('=');
        if (eq == std::string::npos) {
          std::cerr << "error: --filter expects label=value\n";
          return 2;
        }
        fit.filter = {filter.substr(0, eq), filter.substr(eq + 1)};
        if (std::find(fit.csv.group_columns.begin(), fit.csv.group_columns.end(),
                      fit.filter->first) == fit.csv.group_columns.end()) {
          fit.csv.group_columns.push_back(fit.filter->first);
        }
      }
      fit.chain.alpha0_variant = parse_alpha0_variant(variant);
      const auto out = cli::cmd_fit(fit);
      std::cout << out.ingest.to_json().dump() << "\n";
    } else if (sum_cmd->parsed()) {
      const auto out = cli::cmd_summarize(sum);
      const auto& s = out.summary;
      std::cout << to_json(s).dump(2) << "\n";
    } else if (cmp_cmd->parsed()) {
      if (cutoff_opt->count() > 0) cmp.cutoff = cutoff;
      const auto out = cli::cmd_compare(cmp);
      for (const auto& r : out.reports) {
        std::cout << to_string(r.order) << (r.cutoff ? " (restricted)" : "")
                  << ": Pr(A dom B)=" << r.probabilities.a_dominates
                  << " Pr(B dom A)=" << r.probabilities.b_dominates
                  << " Pr(neither)=" << r.probabilities.neither << "\n";
      }
    }
  } catch (const cli::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
