#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "sumscore/sumscore.hpp"
#include "support/fixtures.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sumscore;

namespace {

struct cli_fixture {
  fs::path dir;
  fs::path corpus_path;
  fs::path dataset_path;

  cli_fixture() {
    static std::atomic<unsigned> counter{0};
    auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    dir = fs::temp_directory_path() /
          ("sumscore-cli-" + std::to_string(stamp) + "-" +
           std::to_string(counter.fetch_add(1)));
    fs::create_directories(dir);

    fixtures::synthetic_options opt;
    opt.num_systems = 4;
    opt.num_docs = 8;
    opt.filler_sentences = 5;
    evaluation_dataset ds = fixtures::synthetic_dataset(opt);
    corpus_path = dir / "corpus.jsonl";
    dataset_path = dir / "dataset.jsonl";
    save_corpus(corpus_path, ds.documents());
    save_dataset(dataset_path, ds);
  }

  ~cli_fixture() { fs::remove_all(dir); }

  int run(const std::string& args, std::string* out = nullptr,
          std::string* err = nullptr) const {
    fs::path out_log = dir / "stdout.log";
    fs::path err_log = dir / "stderr.log";
    std::string command = std::string(SUMSCORE_CLI_PATH) + " " + args + " > " +
                          out_log.string() + " 2> " + err_log.string();
    int status = std::system(command.c_str());
    if (out != nullptr) *out = detail::read_text_file(out_log);
    if (err != nullptr) *err = detail::read_text_file(err_log);
    if (status == -1 || !WIFEXITED(status)) return -1;
    return WEXITSTATUS(status);
  }

  std::string data_args() const {
    return "--corpus " + corpus_path.string() + " --dataset " +
           dataset_path.string();
  }
};

json read_json(const fs::path& path) {
  return json::parse(detail::read_text_file(path));
}

size_t data_line_count(const std::string& csv) {
  size_t lines = 0;
  size_t pos = 0;
  while (pos < csv.size()) {
    size_t eol = csv.find('\n', pos);
    if (eol == std::string::npos) eol = csv.size();
    if (eol > pos && csv[pos] != '#') ++lines;
    pos = eol + 1;
  }
  return lines;
}

}  // namespace

TEST_CASE("cli exits 0 on help and 2 on usage errors") {
  cli_fixture cli;
  CHECK(cli.run("--help") == 0);
  CHECK(cli.run("score --help") == 0);
  CHECK(cli.run("") == 2);                  // a subcommand is required
  CHECK(cli.run("frobnicate") == 2);        // unknown subcommand
  CHECK(cli.run("score --bogus-flag") == 2);
  std::string err;
  CHECK(cli.run("score " + cli.data_args() + " --ngram nine", nullptr, &err) ==
        2);
}

TEST_CASE("cli exits 1 on data errors with a structured message") {
  cli_fixture cli;
  std::string err;
  int code = cli.run("score --corpus " + (cli.dir / "missing.jsonl").string() +
                         " --dataset " + cli.dataset_path.string() + " --out " +
                         (cli.dir / "out").string(),
                     nullptr, &err);
  CHECK(code == 1);
  CHECK(err.find("error:") != std::string::npos);

  // Data validation failures (not just I/O) also exit 1.
  code = cli.run("score " + cli.data_args() + " --tokenizer whitespace " +
                     "--ngram 5 --out " + (cli.dir / "out2").string(),
                 nullptr, &err);
  CHECK(code == 1);
  CHECK(err.find("error:") != std::string::npos);
}

TEST_CASE("score writes scores, manifest, and a per-metric summary") {
  cli_fixture cli;
  fs::path out = cli.dir / "run1";
  std::string stdout_text;
  int code = cli.run("score " + cli.data_args() +
                         " --tokenizer whitespace --ngram 2 --seed 3 --out " +
                         out.string(),
                     &stdout_text);
  REQUIRE(code == 0);
  CHECK(stdout_text.find("ours:") != std::string::npos);

  score_matrix scores = read_scores_csv(out / "scores.csv");
  REQUIRE(scores.has_column("ours"));
  CHECK(scores.column("ours").size() == 32);  // 4 systems x 8 docs
  for (const auto& [_, value] : scores.column("ours")) {
    CHECK(value >= 0.0);
    CHECK(value <= 1.0);
  }
  CHECK_FALSE(fs::exists(out / "vocab.json"));  // whitespace needs none

  json manifest = read_json(out / "manifest.json");
  CHECK(manifest.at("subcommand") == "score");
  CHECK(manifest.at("seed") == 3);
  CHECK(manifest.at("config").at("tokenizer") == "whitespace");
  CHECK(manifest.at("config").at("ngram") == 2);
  CHECK(manifest.at("inputs").at("dataset").at("records") == 32);
  bool lists_scores = false;
  for (const auto& artifact : manifest.at("artifacts")) {
    if (artifact == "scores.csv") lists_scores = true;
  }
  CHECK(lists_scores);
}

TEST_CASE("score trains and persists a subword vocabulary by default") {
  cli_fixture cli;
  fs::path out = cli.dir / "run-subword";
  int code = cli.run("score " + cli.data_args() +
                     " --merges 10 --out " + out.string());
  REQUIRE(code == 0);
  subword_vocab vocab = load_vocab(out / "vocab.json");
  CHECK(vocab.requested_merges() == 10);
  CHECK(vocab.merges().size() <= 10);
  json manifest = read_json(out / "manifest.json");
  CHECK(manifest.at("config").at("tokenizer") == "subword");
  CHECK(manifest.at("config").at("vocab").at("source") == "trained");

  // Reusing the persisted vocabulary reproduces the same scores (the
  // provenance comments differ, so compare parsed values).
  fs::path out2 = cli.dir / "run-subword2";
  code = cli.run("score " + cli.data_args() + " --vocab " +
                 (out / "vocab.json").string() + " --out " + out2.string());
  REQUIRE(code == 0);
  CHECK(read_scores_csv(out2 / "scores.csv").column("ours") ==
        read_scores_csv(out / "scores.csv").column("ours"));
}

TEST_CASE("score uses and fills the stats cache transparently") {
  cli_fixture cli;
  fs::path cache = cli.dir / "stats.json";
  fs::path out1 = cli.dir / "cache1";
  fs::path out2 = cli.dir / "cache2";
  std::string base_args = "score " + cli.data_args() +
                          " --tokenizer whitespace --ngram 2 --stats-cache " +
                          cache.string();
  REQUIRE(cli.run(base_args + " --out " + out1.string()) == 0);
  REQUIRE(fs::exists(cache));
  CHECK(read_json(out1 / "manifest.json")
            .at("parameters")
            .at("stats_cache_state") == "created");
  REQUIRE(cli.run(base_args + " --out " + out2.string()) == 0);
  CHECK(read_json(out2 / "manifest.json")
            .at("parameters")
            .at("stats_cache_state") == "loaded");
  CHECK(read_scores_csv(out1 / "scores.csv").column("ours") ==
        read_scores_csv(out2 / "scores.csv").column("ours"));
}

TEST_CASE("evaluate reports correlations for metrics and mixes") {
  cli_fixture cli;
  fs::path out = cli.dir / "eval";
  std::string stdout_text;
  int code = cli.run(
      "evaluate " + cli.data_args() +
          " --tokenizer whitespace --ngram 2 --metric rouge1 " +
          "--metric ours+rouge1 --dimension relevance --level system " +
          "--method spearman --out " + out.string(),
      &stdout_text);
  REQUIRE(code == 0);
  json report = read_json(out / "correlations.json");
  REQUIRE(report.at("results").size() == 2);
  CHECK(report.at("results")[0].at("metric") == "rouge1");
  CHECK(report.at("results")[1].at("metric") == "ours+rouge1");
  for (const auto& entry : report.at("results")) {
    double value = entry.at("value").get<double>();
    CHECK(value >= -1.0);
    CHECK(value <= 1.0);
    CHECK(entry.at("n") == 4);
    CHECK(entry.at("level") == "system");
    CHECK(entry.at("method") == "spearman");
  }
  CHECK(stdout_text.find("rouge1") != std::string::npos);
  score_matrix scores = read_scores_csv(out / "scores.csv");
  CHECK(scores.has_column("ours+rouge1"));
}

TEST_CASE("robustness writes one row per metric, fraction, and draw") {
  cli_fixture cli;
  fs::path out = cli.dir / "robust";
  int code = cli.run("robustness " + cli.data_args() +
                     " --tokenizer whitespace --ngram 2 --mode lead3 " +
                     "--fractions 0,1 --draws 2 --out " + out.string());
  REQUIRE(code == 0);
  std::string csv = detail::read_text_file(out / "robustness.csv");
  // Default metrics: ours, rouge1, and the ours+rouge1 mix.
  CHECK(data_line_count(csv) == 1 + 3 * 2 * 2);
  json report = read_json(out / "robustness.json");
  REQUIRE(report.at("curves").size() == 3);
  json manifest = read_json(out / "manifest.json");
  CHECK(manifest.at("parameters").at("mode") == "lead3");
  CHECK(manifest.at("parameters").at("draws") == 2);
}

TEST_CASE("scaling sweeps sample sizes for one metric") {
  cli_fixture cli;
  fs::path out = cli.dir / "scale";
  int code = cli.run("scaling " + cli.data_args() +
                     " --metric rouge1 --sizes 4,8 --draws 2 --out " +
                     out.string());
  REQUIRE(code == 0);
  std::string csv = detail::read_text_file(out / "scaling.csv");
  CHECK(data_line_count(csv) == 1 + 2 * 2);
  json report = read_json(out / "scaling.json");
  REQUIRE(report.at("curves").size() == 1);
  CHECK(report.at("curves")[0].at("metric") == "rouge1");
  CHECK(report.at("curves")[0].at("x") == json::array({4.0, 8.0}));
}

TEST_CASE("correlates reports spurious-feature correlations") {
  cli_fixture cli;
  fs::path out = cli.dir / "spurious";
  std::string stdout_text;
  int code = cli.run("correlates " + cli.data_args() +
                         " --metric rouge1 --dimension relevance --out " +
                         out.string(),
                     &stdout_text);
  REQUIRE(code == 0);
  score_matrix features = read_scores_csv(out / "correlates.csv");
  for (const char* column :
       {"coverage", "density", "compression_ratio", "summary_length",
        "rouge1", "human:relevance"}) {
    CHECK(features.has_column(column));
  }
  json report = read_json(out / "correlates.json");
  // 4 correlates x (rouge1, human:relevance).
  CHECK(report.at("results").size() == 8);
  CHECK(stdout_text.find("coverage vs rouge1") != std::string::npos);
}

TEST_CASE("report summarizes a previously written scores file") {
  cli_fixture cli;
  fs::path score_out = cli.dir / "for-report";
  REQUIRE(cli.run("score " + cli.data_args() +
                  " --tokenizer whitespace --ngram 2 --with-baselines --out " +
                  score_out.string()) == 0);
  fs::path out = cli.dir / "report";
  std::string stdout_text;
  int code = cli.run("report --scores " + (score_out / "scores.csv").string() +
                         " --bins 5 --out " + out.string(),
                     &stdout_text);
  REQUIRE(code == 0);
  json report = read_json(out / "distributions.json");
  CHECK(report.at("distributions").size() == 5);  // ours + four baselines
  for (const auto& entry : report.at("distributions")) {
    CHECK(entry.at("count") == 32);
    CHECK(entry.at("min").get<double>() <= entry.at("median").get<double>());
    CHECK(entry.at("median").get<double>() <= entry.at("max").get<double>());
  }
  CHECK(stdout_text.find("median=") != std::string::npos);
}

TEST_CASE("train-tokenizer persists a loadable vocabulary") {
  cli_fixture cli;
  fs::path out = cli.dir / "vocab-out";
  std::string stdout_text;
  int code = cli.run("train-tokenizer --corpus " + cli.corpus_path.string() +
                         " --merges 25 --out " + out.string(),
                     &stdout_text);
  REQUIRE(code == 0);
  subword_vocab vocab = load_vocab(out / "vocab.json");
  CHECK(vocab.requested_merges() == 25);
  CHECK(vocab.vocab_size() == 256 + vocab.merges().size());
  CHECK(stdout_text.find("merges") != std::string::npos);
  json manifest = read_json(out / "manifest.json");
  CHECK(manifest.at("subcommand") == "train-tokenizer");
}
