#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "sumscore/corpus.hpp"
#include "sumscore/detail/util.hpp"
#include "sumscore/errors.hpp"
#include "sumscore/score_matrix.hpp"
#include "sumscore/tokenize.hpp"

namespace sumscore {

enum class correlation_method { pearson, spearman };
enum class correlation_level { system, summary };

inline correlation_method parse_correlation_method(std::string_view name) {
  std::string lower = detail::to_lower_ascii(name);
  if (lower == "pearson") return correlation_method::pearson;
  if (lower == "spearman") return correlation_method::spearman;
  throw argument_error("unknown correlation method: '" + std::string(name) +
                       "' (expected pearson or spearman)");
}

inline std::string to_string(correlation_method method) {
  return method == correlation_method::pearson ? "pearson" : "spearman";
}

inline correlation_level parse_correlation_level(std::string_view name) {
  std::string lower = detail::to_lower_ascii(name);
  if (lower == "system") return correlation_level::system;
  if (lower == "summary") return correlation_level::summary;
  throw argument_error("unknown correlation level: '" + std::string(name) +
                       "' (expected system or summary)");
}

inline std::string to_string(correlation_level level) {
  return level == correlation_level::system ? "system" : "summary";
}

// Sample Pearson correlation. Undefined cases (fewer than 3 points, zero
// variance) raise rather than returning a silent value.
inline double pearson(const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw argument_error("correlation inputs must have equal length");
  }
  if (xs.size() < 3) {
    throw degenerate_input_error(
        "correlation requires at least 3 points, got " +
        std::to_string(xs.size()));
  }
  double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw argument_error("correlation inputs must be finite");
    }
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double dx = xs[i] - mx;
    double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw degenerate_input_error(
        "correlation is undefined on a zero-variance input");
  }
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

// Fractional ranks (1-based); ties receive the average of their positions.
inline std::vector<double> fractional_ranks(const std::vector<double>& values) {
  std::vector<size_t> order(values.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(values.size(), 0.0);
  size_t i = 0;
  while (i < order.size()) {
    size_t j = i;
    while (j + 1 < order.size() &&
           values[order[j + 1]] == values[order[i]]) {
      ++j;
    }
    double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = avg_rank;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& xs,
                       const std::vector<double>& ys) {
  if (xs.size() != ys.size()) {
    throw argument_error("correlation inputs must have equal length");
  }
  if (xs.size() < 3) {
    throw degenerate_input_error(
        "correlation requires at least 3 points, got " +
        std::to_string(xs.size()));
  }
  for (size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !std::isfinite(ys[i])) {
      throw argument_error("correlation inputs must be finite");
    }
  }
  return pearson(fractional_ranks(xs), fractional_ranks(ys));
}

inline double correlate(correlation_method method,
                        const std::vector<double>& xs,
                        const std::vector<double>& ys) {
  return method == correlation_method::pearson ? pearson(xs, ys)
                                               : spearman(xs, ys);
}

struct correlation_report {
  correlation_level level = correlation_level::system;
  correlation_method method = correlation_method::spearman;
  std::string metric;
  std::string dimension;
  double value = 0.0;
  size_t n_points = 0;
};

namespace detail {

// Per-system means of metric and human scores, optionally restricted to a
// document subset. Every system must keep at least one usable record.
inline std::pair<std::vector<double>, std::vector<double>> system_means(
    const evaluation_dataset& ds, const score_column& column,
    const std::string& dimension,
    const std::set<std::string>* doc_filter = nullptr) {
  std::map<std::string, std::pair<double, double>> sums;  // metric, human
  std::map<std::string, size_t> counts;
  for (const auto& rec : ds.records()) {
    if (doc_filter != nullptr && doc_filter->count(rec.doc_id) == 0) continue;
    auto dim_it = rec.human.find(dimension);
    if (dim_it == rec.human.end()) continue;
    auto score_it = column.find(record_key{rec.system_id, rec.doc_id});
    if (score_it == column.end()) continue;
    auto& [metric_sum, human_sum] = sums[rec.system_id];
    metric_sum += score_it->second;
    human_sum += dim_it->second;
    ++counts[rec.system_id];
  }
  std::vector<double> metric_means;
  std::vector<double> human_means;
  for (const auto& system : ds.systems()) {
    auto it = counts.find(system);
    if (it == counts.end()) {
      throw argument_error("system '" + system +
                           "' has no scored records with human dimension '" +
                           dimension + "'" +
                           (doc_filter ? " in the sampled documents" : ""));
    }
    double n = static_cast<double>(it->second);
    metric_means.push_back(sums[system].first / n);
    human_means.push_back(sums[system].second / n);
  }
  return {std::move(metric_means), std::move(human_means)};
}

inline std::pair<std::vector<double>, std::vector<double>> pooled_points(
    const evaluation_dataset& ds, const score_column& column,
    const std::string& dimension) {
  std::vector<double> metric_values;
  std::vector<double> human_values;
  for (const auto& rec : ds.records()) {
    auto dim_it = rec.human.find(dimension);
    if (dim_it == rec.human.end()) continue;
    auto score_it = column.find(record_key{rec.system_id, rec.doc_id});
    if (score_it == column.end()) continue;
    metric_values.push_back(score_it->second);
    human_values.push_back(dim_it->second);
  }
  return {std::move(metric_values), std::move(human_values)};
}

}  // namespace detail

// Correlation of per-system means across systems.
inline correlation_report system_level_correlation(
    const evaluation_dataset& ds, const score_matrix& scores,
    const std::string& metric, const std::string& dimension,
    correlation_method method) {
  if (ds.systems().size() < 3) {
    throw degenerate_input_error(
        "system-level correlation requires at least 3 systems, got " +
        std::to_string(ds.systems().size()));
  }
  auto [metric_means, human_means] =
      detail::system_means(ds, scores.column(metric), dimension);
  correlation_report report;
  report.level = correlation_level::system;
  report.method = method;
  report.metric = metric;
  report.dimension = dimension;
  report.n_points = metric_means.size();
  report.value = correlate(method, metric_means, human_means);
  return report;
}

// Correlation over all (system, document) points pooled.
inline correlation_report summary_level_correlation(
    const evaluation_dataset& ds, const score_matrix& scores,
    const std::string& metric, const std::string& dimension,
    correlation_method method) {
  auto [metric_values, human_values] =
      detail::pooled_points(ds, scores.column(metric), dimension);
  if (metric_values.size() < 3) {
    throw degenerate_input_error(
        "summary-level correlation requires at least 3 records with human "
        "dimension '" +
        dimension + "' and metric '" + metric + "'");
  }
  correlation_report report;
  report.level = correlation_level::summary;
  report.method = method;
  report.metric = metric;
  report.dimension = dimension;
  report.n_points = metric_values.size();
  report.value = correlate(method, metric_values, human_values);
  return report;
}

using mix_components = std::vector<std::pair<std::string, double>>;

inline std::string mix_name(const mix_components& components) {
  std::string name;
  for (size_t i = 0; i < components.size(); ++i) {
    double weight = components[i].second;
    if (i == 0) {
      if (weight < 0) name += '-';
    } else {
      name += weight < 0 ? '-' : '+';
    }
    name += components[i].first;
  }
  return name;
}

// Weighted sum of min-max-normalized metric columns; all components must
// cover the same (system, document) grid.
inline named_column mix_metrics(const score_matrix& scores,
                                const mix_components& components) {
  if (components.empty()) {
    throw argument_error("metric mix requires at least one component");
  }
  for (const auto& [name, weight] : components) {
    if (weight == 0.0 || !std::isfinite(weight)) {
      throw argument_error("mix weight for '" + name +
                           "' must be finite and nonzero");
    }
  }
  const score_column& first = scores.column(components[0].first);
  for (size_t i = 1; i < components.size(); ++i) {
    if (!same_grid(first, scores.column(components[i].first))) {
      throw argument_error("mix components '" + components[0].first +
                           "' and '" + components[i].first +
                           "' cover different (system, document) grids");
    }
  }
  named_column out;
  out.name = mix_name(components);
  for (const auto& [key, _] : first) out.values[key] = 0.0;
  for (const auto& [name, weight] : components) {
    const score_column& column = scores.column(name);
    double lo = column.begin()->second;
    double hi = lo;
    for (const auto& [_, value] : column) {
      lo = std::min(lo, value);
      hi = std::max(hi, value);
    }
    if (lo == hi) {
      throw degenerate_input_error(
          "mix component '" + name +
          "' is constant; min-max normalization is undefined");
    }
    for (const auto& [key, value] : column) {
      out.values[key] += weight * (value - lo) / (hi - lo);
    }
  }
  return out;
}

// 1 - |pooled Pearson| between two metric columns on the same grid.
inline double complementarity(const score_matrix& scores,
                              const std::string& m1, const std::string& m2) {
  const score_column& a = scores.column(m1);
  const score_column& b = scores.column(m2);
  if (!same_grid(a, b)) {
    throw argument_error("complementarity requires '" + m1 + "' and '" + m2 +
                         "' on the same (system, document) grid");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  xs.reserve(a.size());
  ys.reserve(b.size());
  for (const auto& [_, value] : a) xs.push_back(value);
  for (const auto& [_, value] : b) ys.push_back(value);
  double value = 1.0 - std::abs(pearson(xs, ys));
  return std::clamp(value, 0.0, 1.0);
}

// One metric's trajectory across an experiment grid: per-draw correlation
// values at each x, plus their means.
struct experiment_curve {
  std::string metric;
  std::vector<double> x;
  std::vector<std::vector<double>> per_draw;  // per_draw[draw][x_index]
  std::vector<double> mean_y;
  size_t draws = 0;
  uint64_t seed = 0;
};

namespace detail {

inline void finalize_curve(experiment_curve& curve) {
  curve.mean_y.assign(curve.x.size(), 0.0);
  for (const auto& draw_values : curve.per_draw) {
    for (size_t i = 0; i < draw_values.size(); ++i) {
      curve.mean_y[i] += draw_values[i];
    }
  }
  for (double& value : curve.mean_y) {
    value /= static_cast<double>(curve.per_draw.size());
  }
}

}  // namespace detail

// System-level correlation as a function of evaluation-set size: for each
// size and draw, sample that many documents (the same subset for every
// system) and correlate on the subsample.
inline experiment_curve scaling_experiment(
    const evaluation_dataset& ds, const score_matrix& scores,
    const std::string& metric, const std::string& dimension,
    const std::vector<size_t>& sample_sizes, size_t draws, uint64_t seed,
    correlation_method method = correlation_method::pearson) {
  if (sample_sizes.empty()) {
    throw argument_error("scaling experiment requires at least one sample size");
  }
  std::vector<std::string> docs = ds.documents_with_records();
  for (size_t i = 0; i < sample_sizes.size(); ++i) {
    if (sample_sizes[i] < 1) {
      throw argument_error("sample sizes must be positive");
    }
    if (i > 0 && sample_sizes[i] <= sample_sizes[i - 1]) {
      throw argument_error("sample sizes must be strictly increasing");
    }
    if (sample_sizes[i] > docs.size()) {
      throw argument_error("sample size " + std::to_string(sample_sizes[i]) +
                           " exceeds the " + std::to_string(docs.size()) +
                           " documents with records");
    }
  }
  if (draws < 1) throw argument_error("draws must be at least 1");

  const score_column& column = scores.column(metric);
  experiment_curve curve;
  curve.metric = metric;
  for (size_t size : sample_sizes) {
    curve.x.push_back(static_cast<double>(size));
  }
  curve.draws = draws;
  curve.seed = seed;
  curve.per_draw.assign(draws, std::vector<double>(sample_sizes.size(), 0.0));

  std::vector<std::string> failures(draws * sample_sizes.size());
  detail::parallel_for(draws * sample_sizes.size(), [&](size_t task) {
    size_t draw = task / sample_sizes.size();
    size_t si = task % sample_sizes.size();
    try {
      std::mt19937_64 rng(detail::mix_seed(seed, draw, si));
      std::vector<size_t> picked = detail::sample_without_replacement(
          docs.size(), sample_sizes[si], rng);
      std::set<std::string> subset;
      for (size_t idx : picked) subset.insert(docs[idx]);
      auto [metric_means, human_means] =
          detail::system_means(ds, column, dimension, &subset);
      curve.per_draw[draw][si] = correlate(method, metric_means, human_means);
    } catch (const error& e) {
      failures[task] = e.what();
    }
  });
  for (size_t task = 0; task < failures.size(); ++task) {
    if (!failures[task].empty()) {
      throw degenerate_input_error(
          "scaling experiment failed at size " +
          std::to_string(sample_sizes[task % sample_sizes.size()]) +
          ", draw " + std::to_string(task / sample_sizes.size()) + ": " +
          failures[task]);
    }
  }
  detail::finalize_curve(curve);
  return curve;
}

// A metric participating in the robustness experiment. Either compute is
// set (and uses_references says whether altered references change it), or
// mix lists components to combine from columns computed in the same run.
struct metric_def {
  std::string name;
  bool uses_references = false;
  std::function<named_column(const evaluation_dataset&)> compute;
  mix_components mix;
};

// Correlation-vs-noise curves: per fraction and draw, replace references
// for a random document subset, recompute reference-based metrics, and
// correlate per-system means with the human dimension. Reference-free
// columns are computed once and reused unchanged.
inline std::map<std::string, experiment_curve> robustness_experiment(
    const evaluation_dataset& ds, const std::vector<metric_def>& metrics,
    const alteration_mode& mode, const std::vector<double>& fractions,
    size_t draws, uint64_t seed, const std::string& dimension,
    correlation_method method = correlation_method::pearson) {
  if (metrics.empty()) {
    throw argument_error("robustness experiment requires at least one metric");
  }
  if (fractions.empty()) {
    throw argument_error(
        "robustness experiment requires at least one fraction");
  }
  for (size_t i = 0; i < fractions.size(); ++i) {
    if (!(fractions[i] >= 0.0 && fractions[i] <= 1.0)) {
      throw argument_error("fractions must lie in [0, 1]");
    }
    if (i > 0 && fractions[i] <= fractions[i - 1]) {
      throw argument_error("fractions must be strictly increasing");
    }
  }
  if (draws < 1) throw argument_error("draws must be at least 1");

  std::set<std::string> names;
  for (const auto& def : metrics) {
    if (def.name.empty()) {
      throw argument_error("every metric must have a name");
    }
    if (!names.insert(def.name).second) {
      throw argument_error("duplicate metric name: " + def.name);
    }
    if (def.mix.empty() == !def.compute) {
      throw argument_error("metric '" + def.name +
                           "' must define exactly one of compute or mix");
    }
  }
  for (const auto& def : metrics) {
    for (const auto& [component, _] : def.mix) {
      if (names.count(component) == 0) {
        throw argument_error("mix '" + def.name +
                             "' references unknown metric '" + component +
                             "'");
      }
    }
  }

  // Reference-free columns: computed once, reused for every fraction/draw.
  std::map<std::string, named_column> fixed_columns;
  for (const auto& def : metrics) {
    if (def.compute && !def.uses_references) {
      fixed_columns[def.name] = def.compute(ds);
    }
  }

  std::map<std::string, experiment_curve> curves;
  for (const auto& def : metrics) {
    experiment_curve curve;
    curve.metric = def.name;
    curve.x = fractions;
    curve.draws = draws;
    curve.seed = seed;
    curve.per_draw.assign(draws, std::vector<double>(fractions.size(), 0.0));
    curves[def.name] = std::move(curve);
  }

  size_t tasks = draws * fractions.size();
  std::vector<std::string> failures(tasks);
  detail::parallel_for(tasks, [&](size_t task) {
    size_t draw = task / fractions.size();
    size_t fi = task % fractions.size();
    try {
      evaluation_dataset altered = alter_references(
          ds, mode, fractions[fi], detail::mix_seed(seed, draw, fi));
      score_matrix matrix;
      for (const auto& [_, column] : fixed_columns) {
        matrix.add_column(column);
      }
      for (const auto& def : metrics) {
        if (def.compute && def.uses_references) {
          matrix.add_column(def.compute(altered));
        }
      }
      for (const auto& def : metrics) {
        if (!def.mix.empty()) {
          named_column mixed = mix_metrics(matrix, def.mix);
          mixed.name = def.name;  // curves are keyed by the definition name
          matrix.add_column(std::move(mixed));
        }
      }
      for (const auto& def : metrics) {
        correlation_report report = system_level_correlation(
            altered, matrix, def.name, dimension, method);
        curves[def.name].per_draw[draw][fi] = report.value;
      }
    } catch (const error& e) {
      failures[task] = e.what();
    }
  });
  for (size_t task = 0; task < tasks; ++task) {
    if (!failures[task].empty()) {
      throw degenerate_input_error(
          "robustness experiment failed at fraction " +
          detail::format_double(fractions[task % fractions.size()]) +
          ", draw " + std::to_string(task / fractions.size()) + ": " +
          failures[task]);
    }
  }
  for (auto& [_, curve] : curves) detail::finalize_curve(curve);
  return curves;
}

// Spurious correlates of summary quality: extractive-fragment coverage and
// density, compression ratio, and summary length.
struct spurious_result {
  score_matrix scores;
  std::vector<record_key> empty_summaries;  // omitted from compression_ratio
};

namespace detail {

// Greedy extractive-fragment decomposition: at each summary position, take
// the longest token run that appears verbatim in the document, else advance
// one token.
inline std::vector<size_t> extractive_fragments(
    const std::vector<std::string>& summary,
    const std::vector<std::string>& document) {
  std::map<std::string, std::vector<size_t>> positions;
  for (size_t j = 0; j < document.size(); ++j) {
    positions[document[j]].push_back(j);
  }
  std::vector<size_t> fragments;
  size_t i = 0;
  while (i < summary.size()) {
    size_t best = 0;
    auto it = positions.find(summary[i]);
    if (it != positions.end()) {
      for (size_t j : it->second) {
        size_t length = 0;
        while (i + length < summary.size() && j + length < document.size() &&
               summary[i + length] == document[j + length]) {
          ++length;
        }
        best = std::max(best, length);
      }
    }
    if (best >= 1) {
      fragments.push_back(best);
      i += best;
    } else {
      ++i;
    }
  }
  return fragments;
}

}  // namespace detail

inline spurious_result spurious_correlates(const evaluation_dataset& ds,
                                           const tokenizer_spec& tokenizer) {
  tokenizer.validate();
  const auto& records = ds.records();

  std::map<std::string, std::vector<std::string>> doc_tokens;
  for (const auto& doc_id : ds.documents_with_records()) {
    doc_tokens[doc_id] =
        tokenize(tokenizer, ds.documents().document(doc_id).text).tokens;
  }

  struct row {
    double coverage = 0.0;
    double density = 0.0;
    double summary_length = 0.0;
    std::optional<double> compression;
  };
  std::vector<row> rows(records.size());
  detail::parallel_for(records.size(), [&](size_t i) {
    const auto& rec = records[i];
    std::vector<std::string> summary =
        tokenize(tokenizer, rec.summary).tokens;
    const std::vector<std::string>& document = doc_tokens.at(rec.doc_id);
    row r;
    r.summary_length = static_cast<double>(summary.size());
    if (!summary.empty()) {
      std::vector<size_t> fragments =
          detail::extractive_fragments(summary, document);
      double len_sum = 0.0;
      double len_sq_sum = 0.0;
      for (size_t f : fragments) {
        len_sum += static_cast<double>(f);
        len_sq_sum += static_cast<double>(f) * static_cast<double>(f);
      }
      r.coverage = len_sum / r.summary_length;
      r.density = len_sq_sum / r.summary_length;
      r.compression =
          static_cast<double>(document.size()) / r.summary_length;
    }
    rows[i] = std::move(r);
  });

  named_column coverage{"coverage", {}};
  named_column density{"density", {}};
  named_column compression{"compression_ratio", {}};
  named_column length{"summary_length", {}};
  spurious_result result;
  for (size_t i = 0; i < records.size(); ++i) {
    record_key key{records[i].system_id, records[i].doc_id};
    coverage.values[key] = rows[i].coverage;
    density.values[key] = rows[i].density;
    length.values[key] = rows[i].summary_length;
    if (rows[i].compression.has_value()) {
      compression.values[key] = *rows[i].compression;
    } else {
      result.empty_summaries.push_back(key);
    }
  }
  result.scores.add_column(std::move(coverage));
  result.scores.add_column(std::move(density));
  result.scores.add_column(std::move(compression));
  result.scores.add_column(std::move(length));
  return result;
}

struct histogram_bin {
  double lo = 0.0;
  double hi = 0.0;
  size_t count = 0;
};

struct distribution_summary {
  std::string metric;
  size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::vector<histogram_bin> bins;
};

namespace detail {

// Linear-interpolation quantile on a sorted sample (the common "type 7"
// definition).
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  double h = p * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(h));
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace detail

inline distribution_summary score_distribution(const score_matrix& scores,
                                               const std::string& metric,
                                               size_t bins = 20) {
  if (bins < 1) throw argument_error("histogram needs at least one bin");
  const score_column& column = scores.column(metric);
  if (column.empty()) {
    throw degenerate_input_error("metric '" + metric + "' has no scores");
  }
  std::vector<double> values;
  values.reserve(column.size());
  double mean = 0.0;
  for (const auto& [_, value] : column) {
    values.push_back(value);
    mean += value;
  }
  std::sort(values.begin(), values.end());

  distribution_summary summary;
  summary.metric = metric;
  summary.count = values.size();
  summary.min = values.front();
  summary.max = values.back();
  summary.q1 = detail::quantile_sorted(values, 0.25);
  summary.median = detail::quantile_sorted(values, 0.5);
  summary.q3 = detail::quantile_sorted(values, 0.75);
  summary.mean = mean / static_cast<double>(values.size());

  if (summary.min == summary.max) {
    summary.bins.push_back({summary.min, summary.max, values.size()});
    return summary;
  }
  double width = (summary.max - summary.min) / static_cast<double>(bins);
  summary.bins.resize(bins);
  for (size_t b = 0; b < bins; ++b) {
    summary.bins[b].lo = summary.min + width * static_cast<double>(b);
    summary.bins[b].hi =
        b + 1 == bins ? summary.max
                      : summary.min + width * static_cast<double>(b + 1);
  }
  for (double value : values) {
    size_t b = static_cast<size_t>((value - summary.min) / width);
    if (b >= bins) b = bins - 1;
    ++summary.bins[b].count;
  }
  return summary;
}

// Tidy CSV for experiment curves: one row per (metric, x, draw).
inline std::string curves_to_csv(
    const std::map<std::string, experiment_curve>& curves,
    const std::string& x_name,
    const std::vector<std::string>& comments = {}) {
  std::string out;
  for (const auto& line : comments) out += "# " + line + "\n";
  out += "metric," + x_name + ",draw,value\n";
  for (const auto& [name, curve] : curves) {
    for (size_t draw = 0; draw < curve.per_draw.size(); ++draw) {
      for (size_t xi = 0; xi < curve.x.size(); ++xi) {
        out += detail::csv_escape(name);
        out += ',';
        out += detail::format_double(curve.x[xi]);
        out += ',';
        out += std::to_string(draw);
        out += ',';
        out += detail::format_double(curve.per_draw[draw][xi]);
        out += '\n';
      }
    }
  }
  return out;
}

}  // namespace sumscore
