#pragma once

// Loading weighted score data: CSV parsing, the unit-interval clamp, weight
// normalization to a pseudo-population size, and subgroup slicing.

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <nlohmann/json.hpp>

#include "dpbeta/errors.hpp"

namespace dpbeta {

inline constexpr std::uint64_t kDefaultPopulationSize = 600000;
inline constexpr double kUpperClampValue = 0.999;
inline constexpr double kLowerClampValue = 0.001;
inline constexpr double kClampTolerance = 1e-12;

struct HealthDataset {
  std::vector<double> scores;
  std::vector<double> weights;
  /// label -> per-record category, each of length n.
  std::map<std::string, std::vector<std::string>> groups;
  std::uint64_t population_size = kDefaultPopulationSize;

  std::size_t size() const noexcept { return scores.size(); }
};

struct IngestReport {
  std::size_t n = 0;
  std::size_t clamped_upper = 0;
  std::size_t clamped_lower = 0;
  bool percent_scale = false;
  double weight_sum = 0.0;
  std::uint64_t population_size = kDefaultPopulationSize;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["n"] = n;
    j["clamped_upper"] = clamped_upper;
    j["clamped_lower"] = clamped_lower;
    j["percent_scale"] = percent_scale;
    j["weight_sum"] = weight_sum;
    j["population_size"] = population_size;
    return j;
  }
};

struct ClampResult {
  std::vector<double> scores;
  std::size_t clamped_upper = 0;
  std::size_t clamped_lower = 0;
};

/// Scores at 1 become 0.999; scores at 0 become 0.001 so the beta likelihood
/// stays finite. Interior scores pass through unchanged.
inline ClampResult clamp_scores(std::span<const double> scores) {
  ClampResult out;
  out.scores.reserve(scores.size());
  for (double y : scores) {
    if (y >= 1.0 - kClampTolerance) {
      out.scores.push_back(kUpperClampValue);
      ++out.clamped_upper;
    } else if (y <= kClampTolerance) {
      out.scores.push_back(kLowerClampValue);
      ++out.clamped_lower;
    } else {
      out.scores.push_back(y);
    }
  }
  return out;
}

/// Rescales weights so they sum to the population size.
inline std::vector<double> normalize_weights(std::span<const double> weights,
                                             std::uint64_t population_size) {
  if (weights.empty()) throw DomainError("normalize_weights: no weights");
  if (population_size <= weights.size()) {
    throw DomainError("population size must exceed the sample size");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0) || !std::isfinite(weights[i])) {
      throw DomainError("weight " + std::to_string(i) +
                        " is not strictly positive");
    }
    total += weights[i];
  }
  const double scale = static_cast<double>(population_size) / total;
  std::vector<double> out(weights.size());
  std::transform(weights.begin(), weights.end(), out.begin(),
                 [scale](double w) { return w * scale; });
  return out;
}

/// Validates, clamps and normalizes raw unit-interval data into a dataset.
inline HealthDataset make_dataset(
    std::vector<double> scores, std::vector<double> weights,
    std::map<std::string, std::vector<std::string>> groups,
    std::uint64_t population_size, IngestReport* report = nullptr) {
  if (scores.size() < 2) throw DomainError("dataset needs at least 2 records");
  if (weights.empty()) weights.assign(scores.size(), 1.0);
  if (weights.size() != scores.size()) {
    throw DomainError("scores and weights differ in length");
  }
  for (const auto& [label, values] : groups) {
    if (values.size() != scores.size()) {
      throw DomainError("group column '" + label + "' has the wrong length");
    }
  }
  for (double y : scores) {
    if (!(y >= 0.0 && y <= 1.0)) {
      throw DomainError("score outside [0, 1]: " + std::to_string(y));
    }
  }
  auto clamped = clamp_scores(scores);
  HealthDataset ds;
  ds.scores = std::move(clamped.scores);
  ds.weights = normalize_weights(weights, population_size);
  ds.groups = std::move(groups);
  ds.population_size = population_size;
  if (report != nullptr) {
    report->n = ds.size();
    report->clamped_upper = clamped.clamped_upper;
    report->clamped_lower = clamped.clamped_lower;
    report->population_size = population_size;
    double total = 0.0;
    for (double w : ds.weights) total += w;
    report->weight_sum = total;
  }
  return ds;
}

/// Records whose `label` column equals `value`, weights renormalized.
inline HealthDataset subgroup(const HealthDataset& ds, const std::string& label,
                              const std::string& value) {
  const auto it = ds.groups.find(label);
  if (it == ds.groups.end()) {
    throw DomainError("unknown group label '" + label + "'");
  }
  std::vector<double> scores;
  std::vector<double> weights;
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [name, _] : ds.groups) groups[name];
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (it->second[i] != value) continue;
    scores.push_back(ds.scores[i]);
    weights.push_back(ds.weights[i]);
    for (const auto& [name, values] : ds.groups) {
      groups[name].push_back(values[i]);
    }
  }
  if (scores.empty()) {
    throw DomainError("subgroup " + label + "=" + value + " is empty");
  }
  HealthDataset out;
  out.weights = normalize_weights(weights, ds.population_size);
  out.scores = std::move(scores);
  out.groups = std::move(groups);
  out.population_size = ds.population_size;
  return out;
}

/// FNV-1a over the bit patterns of scores and weights, as 16 hex digits.
inline std::string dataset_fingerprint(const HealthDataset& ds) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (double y : ds.scores) mix(y);
  for (double w : ds.weights) mix(w);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---------------------------------------------------------------------------
// CSV

struct CsvOptions {
  std::string path;
  std::string score_column = "score";
  std::optional<std::string> weight_column;
  std::vector<std::string> group_columns;
  std::uint64_t population_size = kDefaultPopulationSize;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Comma-delimited fields; double quotes group commas, "" is a literal quote.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.emplace_back(trim(cur));
  return fields;
}

inline double parse_real(std::string_view text, std::size_t row,
                         const std::string& column) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (text.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError("row " + std::to_string(row) + ", column '" + column +
                     "': not a number: '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace detail

/// Reads a comma-delimited file with a header row. Scores on a 0-100 scale
/// (detected by a maximum above 1) are divided by 100; absent weights default
/// to 1. Rows are numbered from 1 for the header.
inline HealthDataset load_csv(const CsvOptions& opts,
                              IngestReport* report = nullptr) {
  std::ifstream in(opts.path);
  if (!in) throw ParseError("cannot open '" + opts.path + "'");

  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty file '" + opts.path + "'");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
    line.erase(0, 3);
  }
  const auto header = detail::split_csv_line(line);
  auto column_index = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw ParseError("row 1: missing column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t score_idx = column_index(opts.score_column);
  std::optional<std::size_t> weight_idx;
  if (opts.weight_column) weight_idx = column_index(*opts.weight_column);
  std::vector<std::size_t> group_idx;
  for (const auto& g : opts.group_columns) group_idx.push_back(column_index(g));

  std::vector<double> scores;
  std::vector<double> weights;
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& g : opts.group_columns) groups[g];

  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() != header.size()) {
      throw ParseError("row " + std::to_string(row) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    const double score =
        detail::parse_real(fields[score_idx], row, opts.score_column);
    if (score < 0.0 || score > 100.0) {
      throw ParseError("row " + std::to_string(row) + ", column '" +
                       opts.score_column + "': score outside [0, 100]");
    }
    scores.push_back(score);
    if (weight_idx) {
      const double w =
          detail::parse_real(fields[*weight_idx], row, *opts.weight_column);
      if (!(w > 0.0)) {
        throw ParseError("row " + std::to_string(row) + ", column '" +
                         *opts.weight_column + "': weight must be positive");
      }
      weights.push_back(w);
    }
    for (std::size_t g = 0; g < group_idx.size(); ++g) {
      groups[opts.group_columns[g]].push_back(fields[group_idx[g]]);
    }
  }

  const bool percent =
      !scores.empty() && *std::max_element(scores.begin(), scores.end()) > 1.0;
  if (percent) {
    for (double& y : scores) y /= 100.0;
  }
  auto ds = make_dataset(std::move(scores), std::move(weights),
                         std::move(groups), opts.population_size, report);
  if (report != nullptr) report->percent_scale = percent;
  return ds;
}

}  // namespace dpbeta
