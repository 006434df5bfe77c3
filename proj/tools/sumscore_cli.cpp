// sumscore command-line tool: scoring, tokenizer training, and the
// meta-evaluation experiments, with reproducible artifacts under --out.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sumscore/sumscore.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sumscore;

namespace {

// ---------------------------------------------------------------------------
// Scoring configuration: paper defaults, overridden by a JSON config file,
// overridden by explicit flags.

struct metric_config {
  std::string tokenizer = "subword";
  std::string vocab_path;  // empty: train on the corpus at hand
  size_t merges = default_subword_merges;
  size_t ngram = 3;
  std::string weighting = "tfidf";
  std::string scheme = "tanh";
  double k1 = 1.2;
  double b = 0.75;
  bool length_penalty = true;
  double slope = 20.0;
  double offset = 10.0;
};

void apply_config_file(metric_config& cfg, const fs::path& path) {
  json obj;
  try {
    obj = json::parse(detail::read_text_file(path));
  } catch (const json::exception& e) {
    throw parse_error("config file " + path.string() + ": " + e.what());
  }
  if (!obj.is_object()) {
    throw parse_error("config file " + path.string() +
                      " must contain a JSON object");
  }
  const std::set<std::string> known = {
      "tokenizer", "vocab",  "merges", "ngram", "weighting",      "scheme",
      "k1",        "b",      "length_penalty", "slope", "offset"};
  for (const auto& [key, _] : obj.items()) {
    if (known.count(key) == 0) {
      throw parse_error("config file " + path.string() +
                        ": unknown key '" + key + "'");
    }
  }
  auto get = [&](const char* key) { return obj.find(key); };
  if (auto it = get("tokenizer"); it != obj.end()) {
    cfg.tokenizer = it->get<std::string>();
  }
  if (auto it = get("vocab"); it != obj.end() && !it->is_null()) {
    cfg.vocab_path = it->get<std::string>();
  }
  if (auto it = get("merges"); it != obj.end()) cfg.merges = it->get<size_t>();
  if (auto it = get("ngram"); it != obj.end()) cfg.ngram = it->get<size_t>();
  if (auto it = get("weighting"); it != obj.end()) {
    cfg.weighting = it->get<std::string>();
  }
  if (auto it = get("scheme"); it != obj.end()) {
    cfg.scheme = it->get<std::string>();
  }
  if (auto it = get("k1"); it != obj.end()) cfg.k1 = it->get<double>();
  if (auto it = get("b"); it != obj.end()) cfg.b = it->get<double>();
  if (auto it = get("length_penalty"); it != obj.end()) {
    cfg.length_penalty = it->get<bool>();
  }
  if (auto it = get("slope"); it != obj.end()) cfg.slope = it->get<double>();
  if (auto it = get("offset"); it != obj.end()) cfg.offset = it->get<double>();
}

// Flag plumbing shared by every subcommand that can score with the metric.
struct config_flags {
  metric_config flag_values;
  std::string config_source = "paper-default";

  CLI::Option* tokenizer = nullptr;
  CLI::Option* vocab = nullptr;
  CLI::Option* merges = nullptr;
  CLI::Option* ngram = nullptr;
  CLI::Option* weighting = nullptr;
  CLI::Option* scheme = nullptr;
  CLI::Option* k1 = nullptr;
  CLI::Option* b = nullptr;
  CLI::Option* penalty = nullptr;
  CLI::Option* slope = nullptr;
  CLI::Option* offset = nullptr;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_source,
                    "'paper-default' or path to a JSON config file")
        ->capture_default_str();
    tokenizer = cmd->add_option("--tokenizer", flag_values.tokenizer,
                                "whitespace, character, or subword");
    vocab = cmd->add_option("--vocab", flag_values.vocab_path,
                            "subword vocabulary JSON (skips training)");
    merges = cmd->add_option("--merges", flag_values.merges,
                             "merge count when training a subword vocabulary");
    ngram = cmd->add_option("--ngram", flag_values.ngram,
                            "n-gram order (2, 3, or 4)");
    weighting = cmd->add_option("--weighting", flag_values.weighting,
                                "tfidf or bm25");
    scheme = cmd->add_option(
        "--scheme", flag_values.scheme,
        "importance, exp-rank, inv-rank, constant, or tanh");
    k1 = cmd->add_option("--k1", flag_values.k1, "bm25 k1 parameter");
    b = cmd->add_option("--b", flag_values.b, "bm25 b parameter");
    penalty = cmd->add_flag("--length-penalty,!--no-length-penalty",
                            flag_values.length_penalty,
                            "toggle the summary-length penalty");
    slope = cmd->add_option("--slope", flag_values.slope,
                            "length penalty slope");
    offset = cmd->add_option("--offset", flag_values.offset,
                             "length penalty offset");
  }

  metric_config resolve() const {
    metric_config cfg;  // paper defaults
    if (config_source != "paper-default") {
      apply_config_file(cfg, config_source);
    }
    if (tokenizer->count()) cfg.tokenizer = flag_values.tokenizer;
    if (vocab->count()) cfg.vocab_path = flag_values.vocab_path;
    if (merges->count()) cfg.merges = flag_values.merges;
    if (ngram->count()) cfg.ngram = flag_values.ngram;
    if (weighting->count()) cfg.weighting = flag_values.weighting;
    if (scheme->count()) cfg.scheme = flag_values.scheme;
    if (k1->count()) cfg.k1 = flag_values.k1;
    if (b->count()) cfg.b = flag_values.b;
    if (penalty->count()) cfg.length_penalty = flag_values.length_penalty;
    if (slope->count()) cfg.slope = flag_values.slope;
    if (offset->count()) cfg.offset = flag_values.offset;
    return cfg;
  }
};

// Resolved scoring machinery plus its serialized form for manifests.
struct scoring_context {
  score_config cfg;
  json config_json;
};

// Builds the score_config, training (and persisting) a vocabulary when the
// subword tokenizer has none supplied.
scoring_context make_scoring_context(const metric_config& mc,
                                     const corpus& docs, uint64_t seed,
                                     const fs::path* vocab_out_dir,
                                     std::vector<std::string>* artifacts) {
  scoring_context ctx;
  tokenizer_mode mode = parse_tokenizer_mode(mc.tokenizer);
  json vocab_json;
  if (mode == tokenizer_mode::corpus_subword) {
    std::shared_ptr<const subword_vocab> vocab;
    std::string source;
    if (!mc.vocab_path.empty()) {
      vocab = std::make_shared<const subword_vocab>(load_vocab(mc.vocab_path));
      source = mc.vocab_path;
    } else {
      vocab = std::make_shared<const subword_vocab>(
          train_subword(docs, mc.merges, seed));
      source = "trained";
      if (vocab_out_dir != nullptr) {
        save_vocab(*vocab_out_dir / "vocab.json", *vocab);
        if (artifacts != nullptr) artifacts->push_back("vocab.json");
      }
    }
    vocab_json = {{"source", source},
                  {"requested_merges", vocab->requested_merges()},
                  {"merges", vocab->merges().size()},
                  {"vocab_size", vocab->vocab_size()},
                  {"content_hash", vocab->content_hash()}};
    ctx.cfg.tokenizer.vocab = std::move(vocab);
  } else {
    vocab_json = nullptr;
  }
  ctx.cfg.tokenizer.mode = mode;
  ctx.cfg.ngram.n = mc.ngram;
  ctx.cfg.ngram.method = parse_weighting_method(mc.weighting);
  ctx.cfg.ngram.scheme = parse_importance_scheme(mc.scheme);
  ctx.cfg.ngram.bm25_k1 = mc.k1;
  ctx.cfg.ngram.bm25_b = mc.b;
  ctx.cfg.use_length_penalty = mc.length_penalty;
  ctx.cfg.penalty_slope = mc.slope;
  ctx.cfg.penalty_offset = mc.offset;
  ctx.cfg.validate();

  ctx.config_json = {{"tokenizer", to_string(mode)},
                     {"vocab", vocab_json},
                     {"ngram", ctx.cfg.ngram.n},
                     {"weighting", to_string(ctx.cfg.ngram.method)},
                     {"scheme", to_string(ctx.cfg.ngram.scheme)},
                     {"bm25_k1", ctx.cfg.ngram.bm25_k1},
                     {"bm25_b", ctx.cfg.ngram.bm25_b},
                     {"length_penalty", ctx.cfg.use_length_penalty},
                     {"penalty_slope", ctx.cfg.penalty_slope},
                     {"penalty_offset", ctx.cfg.penalty_offset}};
  return ctx;
}

// ---------------------------------------------------------------------------
// Metric-by-name plumbing shared by evaluate / robustness / scaling /
// correlates. Names may also be mix expressions like "ours+rouge1".

const std::set<std::string> builtin_reference_metrics = {"rouge1", "rouge2",
                                                         "rougeL", "chrf"};

bool is_mix_expression(const std::string& name) {
  return name.find_first_of("+-") != std::string::npos;
}

mix_components parse_mix_expression(const std::string& text) {
  mix_components out;
  size_t i = 0;
  while (i < text.size()) {
    double sign = 1.0;
    if (text[i] == '+') {
      ++i;
    } else if (text[i] == '-') {
      sign = -1.0;
      ++i;
    } else if (!out.empty()) {
      throw argument_error("mix expression '" + text +
                           "' is missing a '+' or '-' between components");
    }
    size_t start = i;
    while (i < text.size() && text[i] != '+' && text[i] != '-') ++i;
    std::string name(detail::trim(std::string_view(text).substr(
        start, i - start)));
    if (name.empty()) {
      throw argument_error("mix expression '" + text +
                           "' has an empty component name");
    }
    out.emplace_back(std::move(name), sign);
  }
  if (out.empty()) {
    throw argument_error("mix expression must not be empty");
  }
  return out;
}

struct metric_source {
  const scoring_context* ctx = nullptr;  // needed only for "ours"
  std::map<std::string, named_column> imports;
};

named_column compute_base_metric(const std::string& name,
                                 const evaluation_dataset& ds,
                                 const metric_source& source) {
  if (name == "ours") {
    if (source.ctx == nullptr) {
      throw argument_error("metric 'ours' needs a scoring configuration");
    }
    return score_batch(ds, source.ctx->cfg);
  }
  if (name == "rouge1") return rouge_n_column(ds, 1);
  if (name == "rouge2") return rouge_n_column(ds, 2);
  if (name == "rougeL") return rouge_l_column(ds);
  if (name == "chrf") return chrf_column(ds);
  auto it = source.imports.find(name);
  if (it != source.imports.end()) {
    validate_column_coverage(it->second, ds);
    return it->second;
  }
  throw argument_error(
      "unknown metric '" + name +
      "' (expected ours, rouge1, rouge2, rougeL, chrf, an imported name, or "
      "a mix expression)");
}

bool metric_uses_references(const std::string& name) {
  return builtin_reference_metrics.count(name) != 0;
}

// Ensures the named metric (or mix) exists as a matrix column; returns the
// column name to read.
std::string add_metric_expression(score_matrix& matrix, const std::string& expr,
                                  const evaluation_dataset& ds,
                                  const metric_source& source) {
  if (!is_mix_expression(expr)) {
    if (!matrix.has_column(expr)) {
      matrix.add_column(compute_base_metric(expr, ds, source));
    }
    return expr;
  }
  mix_components components = parse_mix_expression(expr);
  std::string name = mix_name(components);
  if (matrix.has_column(name)) return name;
  for (const auto& [component, _] : components) {
    if (!matrix.has_column(component)) {
      matrix.add_column(compute_base_metric(component, ds, source));
    }
  }
  matrix.add_column(mix_metrics(matrix, components));
  return name;
}

// Parses repeated "name=path" import flags into labeled columns.
std::map<std::string, named_column> load_imports(
    const std::vector<std::string>& specs) {
  std::map<std::string, named_column> out;
  for (const auto& spec : specs) {
    size_t eq = spec.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
      throw argument_error("--import expects name=path.csv, got '" + spec +
                           "'");
    }
    std::string name = spec.substr(0, eq);
    if (is_mix_expression(name)) {
      throw argument_error("imported metric name '" + name +
                           "' must not contain '+' or '-'");
    }
    if (!out.emplace(name, import_scores_csv(spec.substr(eq + 1), name))
             .second) {
      throw argument_error("duplicate imported metric name '" + name + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Artifact plumbing.

struct output_sink {
  fs::path dir;
  std::vector<std::string> artifacts;

  explicit output_sink(const std::string& out_dir) : dir(out_dir) {
    fs::create_directories(dir);
  }

  void write(const std::string& filename, const std::string& content) {
    detail::write_text_file_atomic(dir / filename, content);
    artifacts.push_back(filename);
  }
};

std::string hash_file(const std::string& path) {
  return detail::hash_hex(detail::fnv1a64(detail::read_text_file(path)));
}

void write_manifest(output_sink& sink, const std::string& subcommand,
                    uint64_t seed, json inputs, json config, json parameters) {
  json manifest = {{"format", "sumscore-manifest-v1"},
                   {"subcommand", subcommand},
                   {"seed", seed},
                   {"workers", detail::resolve_worker_count()},
                   {"inputs", std::move(inputs)},
                   {"config", std::move(config)},
                   {"parameters", std::move(parameters)}};
  manifest["artifacts"] = sink.artifacts;
  manifest["artifacts"].push_back("manifest.json");
  detail::write_text_file_atomic(sink.dir / "manifest.json",
                                 manifest.dump(2) + "\n");
}

std::vector<std::string> csv_comments(const std::string& subcommand,
                                      uint64_t seed, const json& config,
                                      const json& parameters) {
  std::vector<std::string> out = {"tool=sumscore", "subcommand=" + subcommand,
                                  "seed=" + std::to_string(seed)};
  if (!config.is_null()) out.push_back("config=" + config.dump());
  if (!parameters.is_null()) out.push_back("parameters=" + parameters.dump());
  return out;
}

// Shared envelope so every JSON artifact carries its full provenance.
json artifact_envelope(const std::string& subcommand, uint64_t seed,
                       const json& config, const json& parameters) {
  return json{{"tool", "sumscore"},
              {"subcommand", subcommand},
              {"seed", seed},
              {"config", config},
              {"parameters", parameters}};
}

void print_column_summary(const std::string& name, const score_column& column) {
  double lo = 0.0;
  double hi = 0.0;
  double mean = 0.0;
  bool first = true;
  for (const auto& [_, value] : column) {
    if (first) {
      lo = hi = value;
      first = false;
    }
    lo = std::min(lo, value);
    hi = std::max(hi, value);
    mean += value;
  }
  if (!column.empty()) mean /= static_cast<double>(column.size());
  std::cout << name << ": n=" << column.size()
            << " mean=" << detail::format_double(mean)
            << " min=" << detail::format_double(lo)
            << " max=" << detail::format_double(hi) << "\n";
}

// ---------------------------------------------------------------------------
// Subcommand options and runners.

struct common_options {
  std::string out_dir = "out";
  uint64_t seed = 7;
};

struct train_options {
  common_options common;
  std::string corpus_path;
  size_t merges = default_subword_merges;
};

int run_train(const train_options& opt) {
  corpus docs = load_corpus(opt.corpus_path);
  subword_vocab vocab = train_subword(docs, opt.merges, opt.common.seed);
  output_sink sink(opt.common.out_dir);
  save_vocab(sink.dir / "vocab.json", vocab);
  sink.artifacts.push_back("vocab.json");
  json inputs = {{"corpus",
                  {{"path", opt.corpus_path},
                   {"documents", docs.size()},
                   {"content_hash", docs.content_hash()}}}};
  json parameters = {{"merges", opt.merges}};
  write_manifest(sink, "train-tokenizer", opt.common.seed, std::move(inputs),
                 nullptr, std::move(parameters));
  std::cout << "vocab: 256 byte tokens + " << vocab.merges().size()
            << " merges (requested " << opt.merges << "), hash "
            << vocab.content_hash() << "\n";
  return 0;
}

struct score_options {
  common_options common;
  config_flags config;
  std::string corpus_path;
  std::string dataset_path;
  std::string stats_cache;
  bool with_baselines = false;
};

int run_score(const score_options& opt) {
  auto docs = std::make_shared<const corpus>(load_corpus(opt.corpus_path));
  evaluation_dataset ds = load_dataset(opt.dataset_path, docs);
  output_sink sink(opt.common.out_dir);
  scoring_context ctx = make_scoring_context(
      opt.config.resolve(), *docs, opt.common.seed, &sink.dir,
      &sink.artifacts);

  std::optional<corpus_stats> stats;
  std::string cache_state = "unused";
  if (!opt.stats_cache.empty()) {
    if (fs::exists(opt.stats_cache)) {
      stats = load_corpus_stats(opt.stats_cache);
      validate_stats_cache(*stats, *docs, ctx.cfg.tokenizer, ctx.cfg.ngram.n);
      cache_state = "loaded";
    } else {
      stats = build_corpus_stats(*docs, ctx.cfg.tokenizer, ctx.cfg.ngram.n);
      save_corpus_stats(opt.stats_cache, *stats);
      cache_state = "created";
    }
  }

  score_matrix matrix;
  matrix.add_column(score_batch(ds, ctx.cfg, stats ? &*stats : nullptr));
  if (opt.with_baselines) {
    matrix.add_column(rouge_n_column(ds, 1));
    matrix.add_column(rouge_n_column(ds, 2));
    matrix.add_column(rouge_l_column(ds));
    matrix.add_column(chrf_column(ds));
  }

  json parameters = {{"with_baselines", opt.with_baselines},
                     {"stats_cache", opt.stats_cache.empty()
                                         ? json(nullptr)
                                         : json(opt.stats_cache)},
                     {"stats_cache_state", cache_state}};
  sink.write("scores.csv",
             scores_to_csv(matrix, csv_comments("score", opt.common.seed,
                                                ctx.config_json, parameters)));
  json inputs = {{"corpus",
                  {{"path", opt.corpus_path},
                   {"documents", docs->size()},
                   {"content_hash", docs->content_hash()}}},
                 {"dataset",
                  {{"path", opt.dataset_path},
                   {"records", ds.records().size()},
                   {"systems", ds.systems().size()},
                   {"content_hash", hash_file(opt.dataset_path)}}}};
  write_manifest(sink, "score", opt.common.seed, std::move(inputs),
                 ctx.config_json, std::move(parameters));
  for (const auto& name : matrix.names()) {
    print_column_summary(name, matrix.column(name));
  }
  return 0;
}

struct evaluate_options {
  common_options common;
  config_flags config;
  std::string corpus_path;
  std::string dataset_path;
  std::vector<std::string> metrics = {"ours"};
  std::vector<std::string> imports;
  std::string dimension = "relevance";
  std::string level = "system";
  std::string method = "spearman";
};

int run_evaluate(const evaluate_options& opt) {
  auto docs = std::make_shared<const corpus>(load_corpus(opt.corpus_path));
  evaluation_dataset ds = load_dataset(opt.dataset_path, docs);
  correlation_level level = parse_correlation_level(opt.level);
  correlation_method method = parse_correlation_method(opt.method);
  output_sink sink(opt.common.out_dir);

  bool needs_ours = false;
  for (const auto& expr : opt.metrics) {
    if (expr == "ours" || (is_mix_expression(expr) &&
                           expr.find("ours") != std::string::npos)) {
      needs_ours = true;
    }
  }
  std::optional<scoring_context> ctx;
  if (needs_ours) {
    ctx = make_scoring_context(opt.config.resolve(), *docs, opt.common.seed,
                               &sink.dir, &sink.artifacts);
  }
  metric_source source;
  source.ctx = ctx ? &*ctx : nullptr;
  source.imports = load_imports(opt.imports);

  score_matrix matrix;
  std::vector<std::string> column_names;
  for (const auto& expr : opt.metrics) {
    column_names.push_back(add_metric_expression(matrix, expr, ds, source));
  }

  json config_json = ctx ? ctx->config_json : json(nullptr);
  json parameters = {{"metrics", opt.metrics},
                     {"dimension", opt.dimension},
                     {"level", opt.level},
                     {"method", opt.method}};

  json results = json::array();
  std::string csv = "metric,level,method,dimension,value,n\n";
  for (const auto& name : column_names) {
    correlation_report report =
        level == correlation_level::system
            ? system_level_correlation(ds, matrix, name, opt.dimension, method)
            : summary_level_correlation(ds, matrix, name, opt.dimension,
                                        method);
    results.push_back({{"metric", name},
                       {"level", to_string(report.level)},
                       {"method", to_string(report.method)},
                       {"dimension", report.dimension},
                       {"value", report.value},
                       {"n", report.n_points}});
    csv += detail::csv_escape(name) + "," + to_string(report.level) + "," +
           to_string(report.method) + "," + detail::csv_escape(opt.dimension) +
           "," + detail::format_double(report.value) + "," +
           std::to_string(report.n_points) + "\n";
    std::cout << to_string(report.level) << "-level " << to_string(method)
              << " vs " << opt.dimension << ": " << name << " = "
              << detail::format_double(report.value)
              << " (n=" << report.n_points << ")\n";
  }

  sink.write("scores.csv",
             scores_to_csv(matrix, csv_comments("evaluate", opt.common.seed,
                                                config_json, parameters)));
  std::string comment_block;
  for (const auto& line :
       csv_comments("evaluate", opt.common.seed, config_json, parameters)) {
    comment_block += "# " + line + "\n";
  }
  sink.write("correlations.csv", comment_block + csv);
  json correlations =
      artifact_envelope("evaluate", opt.common.seed, config_json, parameters);
  correlations["results"] = results;
  sink.write("correlations.json", correlations.dump(2) + "\n");

  json inputs = {{"corpus",
                  {{"path", opt.corpus_path},
                   {"documents", docs->size()},
                   {"content_hash", docs->content_hash()}}},
                 {"dataset",
                  {{"path", opt.dataset_path},
                   {"records", ds.records().size()},
                   {"systems", ds.systems().size()},
                   {"content_hash", hash_file(opt.dataset_path)}}}};
  write_manifest(sink, "evaluate", opt.common.seed, std::move(inputs),
                 config_json, std::move(parameters));
  return 0;
}

struct robustness_options {
  common_options common;
  config_flags config;
  std::string corpus_path;
  std::string dataset_path;
  std::string mode = "rand3";
  std::vector<double> fractions = {0.0, 0.25, 0.5, 0.75, 1.0};
  size_t draws = 20;
  std::vector<std::string> metrics = {"ours", "rouge1"};
  std::vector<std::string> mixes = {"ours+rouge1"};
  std::vector<std::string> imports;
  std::string dimension = "relevance";
  std::string method = "pearson";
};

json curve_to_json(const experiment_curve& curve) {
  return {{"metric", curve.metric},
          {"x", curve.x},
          {"mean", curve.mean_y},
          {"draws", curve.draws}};
}

int run_robustness(const robustness_options& opt) {
  auto docs = std::make_shared<const corpus>(load_corpus(opt.corpus_path));
  evaluation_dataset ds = load_dataset(opt.dataset_path, docs);
  alteration_mode mode = parse_alteration_mode(opt.mode);
  correlation_method method = parse_correlation_method(opt.method);
  output_sink sink(opt.common.out_dir);

  bool needs_ours = false;
  for (const auto& name : opt.metrics) {
    if (name == "ours") needs_ours = true;
  }
  for (const auto& expr : opt.mixes) {
    for (const auto& [component, _] : parse_mix_expression(expr)) {
      if (component == "ours") needs_ours = true;
    }
  }
  std::optional<scoring_context> ctx;
  if (needs_ours) {
    ctx = make_scoring_context(opt.config.resolve(), *docs, opt.common.seed,
                               &sink.dir, &sink.artifacts);
  }
  metric_source source;
  source.ctx = ctx ? &*ctx : nullptr;
  source.imports = load_imports(opt.imports);

  std::vector<metric_def> defs;
  for (const auto& name : opt.metrics) {
    if (is_mix_expression(name)) {
      throw argument_error("pass mixes through --mix, not --metric: '" + name +
                           "'");
    }
    metric_def def;
    def.name = name;
    def.uses_references = metric_uses_references(name);
    def.compute = [name, &source](const evaluation_dataset& d) {
      named_column column = compute_base_metric(name, d, source);
      column.name = name;
      return column;
    };
    defs.push_back(std::move(def));
  }
  for (const auto& expr : opt.mixes) {
    metric_def def;
    def.mix = parse_mix_expression(expr);
    def.name = mix_name(def.mix);
    defs.push_back(std::move(def));
  }

  auto curves =
      robustness_experiment(ds, defs, mode, opt.fractions, opt.draws,
                            opt.common.seed, opt.dimension, method);

  json config_json = ctx ? ctx->config_json : json(nullptr);
  json parameters = {{"mode", opt.mode},
                     {"fractions", opt.fractions},
                     {"draws", opt.draws},
                     {"metrics", opt.metrics},
                     {"mixes", opt.mixes},
                     {"dimension", opt.dimension},
                     {"method", opt.method},
                     {"level", "system"}};
  sink.write("robustness.csv",
             curves_to_csv(curves, "fraction",
                           csv_comments("robustness", opt.common.seed,
                                        config_json, parameters)));
  json summary = json::array();
  for (const auto& [_, curve] : curves) summary.push_back(curve_to_json(curve));
  json robustness = artifact_envelope("robustness", opt.common.seed,
                                      config_json, parameters);
  robustness["curves"] = summary;
  sink.write("robustness.json", robustness.dump(2) + "\n");

  json inputs = {{"corpus",
                  {{"path", opt.corpus_path},
                   {"documents", docs->size()},
                   {"content_hash", docs->content_hash()}}},
                 {"dataset",
                  {{"path", opt.dataset_path},
                   {"records", ds.records().size()},
                   {"systems", ds.systems().size()},
                   {"content_hash", hash_file(opt.dataset_path)}}}};
  write_manifest(sink, "robustness", opt.common.seed, std::move(inputs),
                 config_json, std::move(parameters));
  for (const auto& [name, curve] : curves) {
    std::cout << name << ": mean " << opt.method << " "
              << detail::format_double(curve.mean_y.front()) << " at fraction "
              << detail::format_double(curve.x.front()) << " -> "
              << detail::format_double(curve.mean_y.back()) << " at fraction "
              << detail::format_double(curve.x.back()) << " (" << opt.draws
              << " draws)\n";
  }
  return 0;
}

struct scaling_options {
  common_options common;
  config_flags config;
  std::string corpus_path;
  std::string dataset_path;
  std::string metric = "ours";
  std::vector<size_t> sizes;
  size_t draws = 20;
  std::vector<std::string> imports;
  std::string dimension = "relevance";
  std::string method = "pearson";
};

int run_scaling(const scaling_options& opt) {
  auto docs = std::make_shared<const corpus>(load_corpus(opt.corpus_path));
  evaluation_dataset ds = load_dataset(opt.dataset_path, docs);
  correlation_method method = parse_correlation_method(opt.method);
  output_sink sink(opt.common.out_dir);

  bool needs_ours = opt.metric.find("ours") != std::string::npos;
  std::optional<scoring_context> ctx;
  if (needs_ours) {
    ctx = make_scoring_context(opt.config.resolve(), *docs, opt.common.seed,
                               &sink.dir, &sink.artifacts);
  }
  metric_source source;
  source.ctx = ctx ? &*ctx : nullptr;
  source.imports = load_imports(opt.imports);

  score_matrix matrix;
  std::string column = add_metric_expression(matrix, opt.metric, ds, source);
  experiment_curve curve =
      scaling_experiment(ds, matrix, column, opt.dimension, opt.sizes,
                         opt.draws, opt.common.seed, method);

  json config_json = ctx ? ctx->config_json : json(nullptr);
  json parameters = {{"metric", opt.metric},
                     {"sizes", opt.sizes},
                     {"draws", opt.draws},
                     {"dimension", opt.dimension},
                     {"method", opt.method},
                     {"level", "system"}};
  std::map<std::string, experiment_curve> curves;
  curves[curve.metric] = curve;
  sink.write("scaling.csv",
             curves_to_csv(curves, "sample_size",
                           csv_comments("scaling", opt.common.seed,
                                        config_json, parameters)));
  json scaling =
      artifact_envelope("scaling", opt.common.seed, config_json, parameters);
  scaling["curves"] = json::array({curve_to_json(curve)});
  sink.write("scaling.json", scaling.dump(2) + "\n");

  json inputs = {{"corpus",
                  {{"path", opt.corpus_path},
                   {"documents", docs->size()},
                   {"content_hash", docs->content_hash()}}},
                 {"dataset",
                  {{"path", opt.dataset_path},
                   {"records", ds.records().size()},
                   {"systems", ds.systems().size()},
                   {"content_hash", hash_file(opt.dataset_path)}}}};
  write_manifest(sink, "scaling", opt.common.seed, std::move(inputs),
                 config_json, std::move(parameters));
  std::cout << column << ": mean " << opt.method << " "
            << detail::format_double(curve.mean_y.front()) << " at n="
            << detail::format_double(curve.x.front()) << " -> "
            << detail::format_double(curve.mean_y.back()) << " at n="
            << detail::format_double(curve.x.back()) << " (" << opt.draws
            << " draws)\n";
  return 0;
}

struct correlates_options {
  common_options common;
  config_flags config;
  std::string corpus_path;
  std::string dataset_path;
  std::vector<std::string> metrics = {"ours", "rouge1"};
  std::vector<std::string> imports;
  std::string dimension;  // optional human dimension to include
};

int run_correlates(const correlates_options& opt) {
  auto docs = std::make_shared<const corpus>(load_corpus(opt.corpus_path));
  evaluation_dataset ds = load_dataset(opt.dataset_path, docs);
  output_sink sink(opt.common.out_dir);

  bool needs_ours = false;
  for (const auto& expr : opt.metrics) {
    if (expr.find("ours") != std::string::npos) needs_ours = true;
  }
  std::optional<scoring_context> ctx;
  if (needs_ours) {
    ctx = make_scoring_context(opt.config.resolve(), *docs, opt.common.seed,
                               &sink.dir, &sink.artifacts);
  }
  metric_source source;
  source.ctx = ctx ? &*ctx : nullptr;
  source.imports = load_imports(opt.imports);

  // Fragment statistics are defined on words; use the whitespace tokenizer
  // regardless of the metric's own tokenizer.
  spurious_result spurious = spurious_correlates(
      ds, tokenizer_spec{tokenizer_mode::whitespace, nullptr});

  score_matrix matrix;
  std::vector<std::string> metric_names;
  for (const auto& expr : opt.metrics) {
    metric_names.push_back(add_metric_expression(matrix, expr, ds, source));
  }
  if (!opt.dimension.empty()) {
    named_column human{"human:" + opt.dimension, {}};
    for (const auto& rec : ds.records()) {
      auto it = rec.human.find(opt.dimension);
      if (it != rec.human.end()) {
        human.values[record_key{rec.system_id, rec.doc_id}] = it->second;
      }
    }
    if (human.values.empty()) {
      throw argument_error("no record carries human dimension '" +
                           opt.dimension + "'");
    }
    matrix.add_column(std::move(human));
    metric_names.push_back("human:" + opt.dimension);
  }

  // Pooled Pearson of every metric against every correlate, aligned on the
  // records both columns cover.
  json results = json::array();
  std::string csv = "correlate,metric,pearson,n\n";
  for (const auto& correlate : spurious.scores.names()) {
    const score_column& feature = spurious.scores.column(correlate);
    for (const auto& metric : metric_names) {
      const score_column& values = matrix.column(metric);
      std::vector<double> xs;
      std::vector<double> ys;
      for (const auto& [key, value] : feature) {
        auto it = values.find(key);
        if (it == values.end()) continue;
        xs.push_back(value);
        ys.push_back(it->second);
      }
      std::optional<double> r;
      try {
        r = pearson(xs, ys);
      } catch (const degenerate_input_error&) {
        // A constant column (fixed-length summaries, say) makes the pooled
        // correlation undefined; report that instead of failing the run.
      }
      std::string shown = r ? detail::format_double(*r) : "undefined";
      results.push_back({{"correlate", correlate},
                         {"metric", metric},
                         {"pearson", r ? json(*r) : json(nullptr)},
                         {"n", xs.size()}});
      csv += detail::csv_escape(correlate) + "," + detail::csv_escape(metric) +
             "," + shown + "," + std::to_string(xs.size()) + "\n";
      std::cout << correlate << " vs " << metric << ": pearson=" << shown
                << " (n=" << xs.size() << ")\n";
    }
  }

  score_matrix everything;
  for (const auto& name : spurious.scores.names()) {
    everything.add_column(named_column{name, spurious.scores.column(name)});
  }
  for (const auto& name : matrix.names()) {
    everything.add_column(named_column{name, matrix.column(name)});
  }
  json config_json = ctx ? ctx->config_json : json(nullptr);
  json parameters = {{"metrics", opt.metrics},
                     {"dimension", opt.dimension.empty()
                                       ? json(nullptr)
                                       : json(opt.dimension)},
                     {"fragment_tokenizer", "whitespace"}};
  sink.write("correlates.csv",
             scores_to_csv(everything,
                           csv_comments("correlates", opt.common.seed,
                                        config_json, parameters)));
  std::string comment_block;
  for (const auto& line : csv_comments("correlates", opt.common.seed,
                                       config_json, parameters)) {
    comment_block += "# " + line + "\n";
  }
  sink.write("correlate_correlations.csv", comment_block + csv);
  json empty_keys = json::array();
  for (const auto& key : spurious.empty_summaries) {
    empty_keys.push_back({{"system_id", key.system_id},
                          {"doc_id", key.doc_id}});
  }
  json correlates = artifact_envelope("correlates", opt.common.seed,
                                      config_json, parameters);
  correlates["results"] = results;
  correlates["empty_summaries"] = empty_keys;
  sink.write("correlates.json", correlates.dump(2) + "\n");

  json inputs = {{"corpus",
                  {{"path", opt.corpus_path},
                   {"documents", docs->size()},
                   {"content_hash", docs->content_hash()}}},
                 {"dataset",
                  {{"path", opt.dataset_path},
                   {"records", ds.records().size()},
                   {"systems", ds.systems().size()},
                   {"content_hash", hash_file(opt.dataset_path)}}}};
  write_manifest(sink, "correlates", opt.common.seed, std::move(inputs),
                 config_json, std::move(parameters));
  return 0;
}

struct report_options {
  common_options common;
  std::string scores_path;
  std::vector<std::string> metrics;  // empty: every column in the file
  size_t bins = 20;
};

int run_report(const report_options& opt) {
  score_matrix matrix = read_scores_csv(opt.scores_path);
  std::vector<std::string> metrics =
      opt.metrics.empty() ? matrix.names() : opt.metrics;
  output_sink sink(opt.common.out_dir);

  json summaries = json::array();
  std::string csv = "metric,bin_lo,bin_hi,count\n";
  for (const auto& name : metrics) {
    distribution_summary summary = score_distribution(matrix, name, opt.bins);
    json bins = json::array();
    for (const auto& bin : summary.bins) {
      bins.push_back({{"lo", bin.lo}, {"hi", bin.hi}, {"count", bin.count}});
      csv += detail::csv_escape(name) + "," + detail::format_double(bin.lo) +
             "," + detail::format_double(bin.hi) + "," +
             std::to_string(bin.count) + "\n";
    }
    summaries.push_back({{"metric", summary.metric},
                         {"count", summary.count},
                         {"min", summary.min},
                         {"q1", summary.q1},
                         {"median", summary.median},
                         {"q3", summary.q3},
                         {"max", summary.max},
                         {"mean", summary.mean},
                         {"bins", bins}});
    std::cout << name << ": n=" << summary.count
              << " min=" << detail::format_double(summary.min)
              << " q1=" << detail::format_double(summary.q1)
              << " median=" << detail::format_double(summary.median)
              << " q3=" << detail::format_double(summary.q3)
              << " max=" << detail::format_double(summary.max)
              << " mean=" << detail::format_double(summary.mean) << "\n";
  }

  json parameters = {{"metrics", metrics}, {"bins", opt.bins}};
  std::string comment_block;
  for (const auto& line :
       csv_comments("report", opt.common.seed, nullptr, parameters)) {
    comment_block += "# " + line + "\n";
  }
  sink.write("distributions.csv", comment_block + csv);
  json distributions =
      artifact_envelope("report", opt.common.seed, nullptr, parameters);
  distributions["distributions"] = summaries;
  sink.write("distributions.json", distributions.dump(2) + "\n");
  json inputs = {{"scores",
                  {{"path", opt.scores_path},
                   {"content_hash", hash_file(opt.scores_path)}}}};
  write_manifest(sink, "report", opt.common.seed, std::move(inputs), nullptr,
                 std::move(parameters));
  return 0;
}

void attach_common(CLI::App* cmd, common_options& opt) {
  cmd->add_option("--out", opt.out_dir, "output directory for artifacts")
      ->capture_default_str();
  cmd->add_option("--seed", opt.seed, "seed for every random choice")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sumscore: reference-free importance-weighted n-gram relevance "
      "scoring for summaries, with baseline metrics and meta-evaluation "
      "experiments"};
  app.require_subcommand(1);

  train_options train_opt;
  CLI::App* train = app.add_subcommand(
      "train-tokenizer", "train a byte-pair subword vocabulary on a corpus");
  attach_common(train, train_opt.common);
  train->add_option("--corpus", train_opt.corpus_path, "corpus JSONL")
      ->required();
  train->add_option("--merges", train_opt.merges, "number of merges to learn")
      ->capture_default_str();

  score_options score_opt;
  CLI::App* score = app.add_subcommand(
      "score", "score every dataset record with the relevance metric");
  attach_common(score, score_opt.common);
  score_opt.config.attach(score);
  score->add_option("--corpus", score_opt.corpus_path, "corpus JSONL")
      ->required();
  score->add_option("--dataset", score_opt.dataset_path, "dataset JSONL")
      ->required();
  score->add_option("--stats-cache", score_opt.stats_cache,
                    "corpus statistics cache file (created if absent)");
  score->add_flag("--with-baselines", score_opt.with_baselines,
                  "also score rouge1, rouge2, rougeL, and chrf");

  evaluate_options eval_opt;
  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "correlate metric scores with a human dimension");
  attach_common(evaluate, eval_opt.common);
  eval_opt.config.attach(evaluate);
  evaluate->add_option("--corpus", eval_opt.corpus_path, "corpus JSONL")
      ->required();
  evaluate->add_option("--dataset", eval_opt.dataset_path, "dataset JSONL")
      ->required();
  evaluate
      ->add_option("--metric", eval_opt.metrics,
                   "metric name or mix expression (repeatable)")
      ->capture_default_str();
  evaluate->add_option("--import", eval_opt.imports,
                       "name=path.csv of externally computed scores");
  evaluate->add_option("--dimension", eval_opt.dimension, "human dimension")
      ->capture_default_str();
  evaluate->add_option("--level", eval_opt.level, "system or summary")
      ->capture_default_str();
  evaluate->add_option("--method", eval_opt.method, "pearson or spearman")
      ->capture_default_str();

  robustness_options robust_opt;
  CLI::App* robustness = app.add_subcommand(
      "robustness",
      "correlation vs fraction of documents with altered references");
  attach_common(robustness, robust_opt.common);
  robust_opt.config.attach(robustness);
  robustness->add_option("--corpus", robust_opt.corpus_path, "corpus JSONL")
      ->required();
  robustness->add_option("--dataset", robust_opt.dataset_path, "dataset JSONL")
      ->required();
  robustness->add_option("--mode", robust_opt.mode, "rand3, lead3, or tail3")
      ->capture_default_str();
  robustness
      ->add_option("--fractions", robust_opt.fractions,
                   "fractions of documents to alter")
      ->delimiter(',')
      ->capture_default_str();
  robustness->add_option("--draws", robust_opt.draws, "random draws per point")
      ->capture_default_str();
  robustness
      ->add_option("--metric", robust_opt.metrics,
                   "base metric names (repeatable)")
      ->capture_default_str();
  robustness
      ->add_option("--mix", robust_opt.mixes,
                   "mix expressions over the base metrics (repeatable)")
      ->capture_default_str();
  robustness->add_option("--import", robust_opt.imports,
                         "name=path.csv of externally computed scores");
  robustness
      ->add_option("--dimension", robust_opt.dimension, "human dimension")
      ->capture_default_str();
  robustness->add_option("--method", robust_opt.method, "pearson or spearman")
      ->capture_default_str();

  scaling_options scale_opt;
  CLI::App* scaling = app.add_subcommand(
      "scaling", "correlation vs number of sampled documents");
  attach_common(scaling, scale_opt.common);
  scale_opt.config.attach(scaling);
  scaling->add_option("--corpus", scale_opt.corpus_path, "corpus JSONL")
      ->required();
  scaling->add_option("--dataset", scale_opt.dataset_path, "dataset JSONL")
      ->required();
  scaling
      ->add_option("--metric", scale_opt.metric,
                   "metric name or mix expression")
      ->capture_default_str();
  scaling
      ->add_option("--sizes", scale_opt.sizes,
                   "strictly increasing sample sizes")
      ->delimiter(',')
      ->required();
  scaling->add_option("--draws", scale_opt.draws, "random draws per size")
      ->capture_default_str();
  scaling->add_option("--import", scale_opt.imports,
                      "name=path.csv of externally computed scores");
  scaling->add_option("--dimension", scale_opt.dimension, "human dimension")
      ->capture_default_str();
  scaling->add_option("--method", scale_opt.method, "pearson or spearman")
      ->capture_default_str();

  correlates_options corr_opt;
  CLI::App* correlates = app.add_subcommand(
      "correlates",
      "spurious correlates: coverage, density, compression, length");
  attach_common(correlates, corr_opt.common);
  corr_opt.config.attach(correlates);
  correlates->add_option("--corpus", corr_opt.corpus_path, "corpus JSONL")
      ->required();
  correlates->add_option("--dataset", corr_opt.dataset_path, "dataset JSONL")
      ->required();
  correlates
      ->add_option("--metric", corr_opt.metrics,
                   "metric name or mix expression (repeatable)")
      ->capture_default_str();
  correlates->add_option("--import", corr_opt.imports,
                         "name=path.csv of externally computed scores");
  correlates->add_option(
      "--dimension", corr_opt.dimension,
      "also correlate against this human dimension when present");

  report_options report_opt;
  CLI::App* report = app.add_subcommand(
      "report", "score distributions for a previously written scores CSV");
  attach_common(report, report_opt.common);
  report->add_option("--scores", report_opt.scores_path, "scores CSV")
      ->required();
  report->add_option("--metric", report_opt.metrics,
                     "columns to summarize (default: all)");
  report->add_option("--bins", report_opt.bins, "histogram bin count")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (train->parsed()) return run_train(train_opt);
    if (score->parsed()) return run_score(score_opt);
    if (evaluate->parsed()) return run_evaluate(eval_opt);
    if (robustness->parsed()) return run_robustness(robust_opt);
    if (scaling->parsed()) return run_scaling(scale_opt);
    if (correlates->parsed()) return run_correlates(corr_opt);
    if (report->parsed()) return run_report(report_opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no subcommand executed\n";
  return 2;
}
