#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "sumscore/sumscore.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace sumscore;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<std::string> toks(const std::string& text) {
  return tokenize(tokenizer_mode::whitespace, nullptr, text).tokens;
}

oracle::corpus_view fixture_view(size_t n) {
  oracle::corpus_view view;
  for (const auto& text : fixtures::three_doc_texts()) {
    view.doc_tokens.push_back(oracle::ws_tokens(text));
  }
  view.n = n;
  return view;
}

oracle::scheme to_oracle(importance_scheme scheme) {
  switch (scheme) {
    case importance_scheme::importance: return oracle::scheme::importance;
    case importance_scheme::exp_rank: return oracle::scheme::exp_rank;
    case importance_scheme::inv_rank: return oracle::scheme::inv_rank;
    case importance_scheme::constant: return oracle::scheme::constant;
    case importance_scheme::tanh: return oracle::scheme::tanh;
  }
  return oracle::scheme::constant;
}

}  // namespace

TEST_CASE("extract_ngrams enumerates sliding windows") {
  auto counts = extract_ngrams(toks("a b c d"), 2);
  REQUIRE(counts.size() == 3);
  CHECK(counts.at(ngram_key(toks("a b"))) == 1);
  CHECK(counts.at(ngram_key(toks("b c"))) == 1);
  CHECK(counts.at(ngram_key(toks("c d"))) == 1);

  auto repeated = extract_ngrams(toks("a a a"), 2);
  REQUIRE(repeated.size() == 1);
  CHECK(repeated.at(ngram_key(toks("a a"))) == 2);

  CHECK(extract_ngrams(toks("a"), 3).empty());
  CHECK_THROWS_AS(extract_ngrams(toks("a b"), 0), argument_error);
}

TEST_CASE("ngram keys split back into their tokens") {
  std::vector<std::string> tokens = {"the", "cat", "sat"};
  CHECK(split_ngram_key(ngram_key(tokens)) == tokens);
}

TEST_CASE("corpus stats match direct counting") {
  corpus docs = fixtures::three_doc_corpus();
  corpus_stats stats =
      build_corpus_stats(docs, fixtures::whitespace_tokenizer(), 3);

  CHECK(stats.num_docs == 3);
  CHECK(stats.n == 3);
  // Every document has 6 tokens, so 4 trigram occurrences each.
  CHECK(stats.avg_doc_len == 4.0);
  for (const auto& doc : docs.documents()) {
    CHECK(stats.doc(doc.doc_id).token_count == 6);
    CHECK(stats.doc(doc.doc_id).ngram_count == 4);
  }
  // "sat on the" appears in doc1 and doc2.
  CHECK(stats.doc_freq.at(ngram_key(toks("sat on the"))) == 2);
  for (const auto& [key, df] : stats.doc_freq) {
    CHECK(df >= 1);
    CHECK(df <= static_cast<long long>(stats.num_docs));
  }
  for (const auto& [_, per_doc] : stats.per_doc) {
    for (const auto& [key, tf] : per_doc.term_freq) CHECK(tf >= 1);
  }
}

TEST_CASE("corpus stats are independent of document order") {
  std::vector<source_document> forward = fixtures::three_doc_corpus().documents();
  std::vector<source_document> reversed(forward.rbegin(), forward.rend());
  corpus_stats a = build_corpus_stats(corpus(forward),
                                      fixtures::whitespace_tokenizer(), 2);
  corpus_stats b = build_corpus_stats(corpus(reversed),
                                      fixtures::whitespace_tokenizer(), 2);
  CHECK(a.doc_freq == b.doc_freq);
  CHECK(a.avg_doc_len == b.avg_doc_len);
  for (const auto& [doc_id, ds] : a.per_doc) {
    CHECK(b.doc(doc_id).term_freq == ds.term_freq);
  }
}

TEST_CASE("tf-idf importance matches hand-computed values") {
  corpus docs(std::vector<source_document>{{"d1", "q r q r"}, {"d2", "s t u v"}});
  corpus_stats stats =
      build_corpus_stats(docs, fixtures::whitespace_tokenizer(), 2);
  ngram_config cfg;
  cfg.n = 2;
  cfg.method = weighting_method::tfidf;

  // tf=2, df=1, 2 docs: w = 2 ln 2.
  CHECK_THAT(importance(ngram_key(toks("q r")), "d1", stats, cfg),
             WithinAbs(1.3862943611198906, 1e-15));

  corpus shared(std::vector<source_document>{{"d1", "q r x"}, {"d2", "q r y"}});
  corpus_stats shared_stats =
      build_corpus_stats(shared, fixtures::whitespace_tokenizer(), 2);
  // A term present in every document has idf ln(1) = 0.
  CHECK(importance(ngram_key(toks("q r")), "d1", shared_stats, cfg) == 0.0);
}

TEST_CASE("bm25 importance matches the hand-computed oracle") {
  corpus docs(std::vector<source_document>{{"d1", "q r q r"}, {"d2", "s t u v"}});
  corpus_stats stats =
      build_corpus_stats(docs, fixtures::whitespace_tokenizer(), 2);
  ngram_config cfg;
  cfg.n = 2;
  cfg.method = weighting_method::bm25;

  // tf=2, df=1, N=2, dl=avgdl=3: idf=ln 2, saturation=4.4/3.2.
  CHECK_THAT(importance(ngram_key(toks("q r")), "d1", stats, cfg),
             WithinAbs(0.9530773732699248, 1e-15));
}

TEST_CASE("importance validates its lookups") {
  corpus docs = fixtures::three_doc_corpus();
  corpus_stats stats =
      build_corpus_stats(docs, fixtures::whitespace_tokenizer(), 2);
  ngram_config cfg;
  cfg.n = 2;
  CHECK_THROWS_AS(importance(ngram_key(toks("the cat")), "nope", stats, cfg),
                  argument_error);
  CHECK_THROWS_AS(importance(ngram_key(toks("no such")), "doc1", stats, cfg),
                  argument_error);
}

TEST_CASE("ranks order by importance with lexicographic ties") {
  corpus docs(std::vector<source_document>{{"d1", "a b c"}, {"d2", "x y z"}});
  corpus_stats stats =
      build_corpus_stats(docs, fixtures::whitespace_tokenizer(), 2);
  ngram_config cfg;
  cfg.n = 2;
  auto ranks = rank_ngrams("d1", stats, cfg);
  // Both bigrams have tf=1, df=1: tied importance, lexicographic order.
  CHECK(ranks.at(ngram_key(toks("a b"))) == 1);
  CHECK(ranks.at(ngram_key(toks("b c"))) == 2);
}

TEST_CASE("ranks form a bijection sorted by importance") {
  corpus docs = fixtures::three_doc_corpus();
  for (size_t n : {2, 3, 4}) {
    corpus_stats stats =
        build_corpus_stats(docs, fixtures::whitespace_tokenizer(), n);
    ngram_config cfg;
    cfg.n = n;
    for (const auto& doc : docs.documents()) {
      auto ranks = rank_ngrams(doc.doc_id, stats, cfg);
      std::vector<double> by_rank(ranks.size(), 0.0);
      std::vector<bool> seen(ranks.size(), false);
      for (const auto& [key, rank] : ranks) {
        REQUIRE(rank >= 1);
        REQUIRE(rank <= static_cast<long long>(ranks.size()));
        seen[static_cast<size_t>(rank - 1)] = true;
        by_rank[static_cast<size_t>(rank - 1)] =
            importance(key, doc.doc_id, stats, cfg);
      }
      for (bool s : seen) CHECK(s);
      for (size_t i = 1; i < by_rank.size(); ++i) {
        CHECK(by_rank[i - 1] >= by_rank[i]);
      }
    }
  }
}

TEST_CASE("scheme weights follow their formulas") {
  CHECK(ngram_weight(0.0, 5, importance_scheme::tanh) == 0.0);
  CHECK(ngram_weight(3.7, 9, importance_scheme::constant) == 1.0);
  CHECK(ngram_weight(2.5, 1, importance_scheme::importance) == 2.5);
  CHECK(ngram_weight(1.0, 4, importance_scheme::inv_rank) == 0.25);
  CHECK_THAT(ngram_weight(0.0, 2, importance_scheme::exp_rank),
             WithinAbs(std::exp(-2.0), 1e-15));
  // tanh(2 ln 2) = 15/17.
  CHECK_THAT(ngram_weight(1.3862943611198906, 1, importance_scheme::tanh),
             WithinAbs(15.0 / 17.0, 1e-15));
  CHECK_THROWS_AS(ngram_weight(1.0, 0, importance_scheme::tanh),
                  argument_error);
  CHECK_THROWS_AS(ngram_weight(-0.5, 1, importance_scheme::tanh),
                  argument_error);
}

TEST_CASE("tanh weights stay in [0,1] and respect monotonicity") {
  // tanh saturates to exactly 1.0 in double precision for large w/r.
  for (double w : {0.0, 0.3, 1.0, 4.0, 50.0}) {
    for (long long r : {1, 2, 5, 40}) {
      double weight = ngram_weight(w, r, importance_scheme::tanh);
      CHECK(weight >= 0.0);
      CHECK(weight <= 1.0);
      CHECK(ngram_weight(w + 0.5, r, importance_scheme::tanh) >= weight);
      CHECK(ngram_weight(w, r + 1, importance_scheme::tanh) <= weight);
    }
  }
}

TEST_CASE("weight tables match the brute-force oracle") {
  corpus docs = fixtures::three_doc_corpus();
  for (size_t n : {2, 3, 4}) {
    corpus_stats stats =
        build_corpus_stats(docs, fixtures::whitespace_tokenizer(), n);
    oracle::corpus_view view = fixture_view(n);
    for (bool bm25 : {false, true}) {
      for (importance_scheme scheme :
           {importance_scheme::importance, importance_scheme::exp_rank,
            importance_scheme::inv_rank, importance_scheme::constant,
            importance_scheme::tanh}) {
        ngram_config cfg;
        cfg.n = n;
        cfg.method = bm25 ? weighting_method::bm25 : weighting_method::tfidf;
        cfg.scheme = scheme;
        oracle::weighting_params params;
        params.bm25 = bm25;

        for (size_t d = 0; d < view.doc_tokens.size(); ++d) {
          std::string doc_id = docs.documents()[d].doc_id;
          weighted_ngram_table table = build_weight_table(doc_id, stats, cfg);
          auto oracle_ranks = oracle::ranks(view, d, params);
          REQUIRE(table.entries.size() == oracle_ranks.size());
          double oracle_n = 0.0;
          for (const auto& [gram, rank] : oracle_ranks) {
            const auto& entry = table.entries.at(oracle::joined(gram));
            double w = oracle::importance(view, d, gram, params);
            double weight = oracle::scheme_weight(w, rank, to_oracle(scheme));
            CHECK_THAT(entry.importance, WithinAbs(w, 1e-12));
            CHECK(entry.rank == rank);
            CHECK_THAT(entry.weight, WithinAbs(weight, 1e-12));
            oracle_n += weight;
          }
          CHECK_THAT(table.normalizer, WithinAbs(oracle_n, 1e-12));
          CHECK(table.doc_ngram_count ==
                static_cast<long long>(view.doc_tokens[d].size() - n + 1));
          CHECK(table.doc_token_count ==
                static_cast<long long>(view.doc_tokens[d].size()));
        }
      }
    }
  }
}

TEST_CASE("normalizer equals the sum of weights") {
  corpus docs = fixtures::three_doc_corpus();
  corpus_stats stats =
      build_corpus_stats(docs, fixtures::whitespace_tokenizer(), 2);
  ngram_config cfg;
  cfg.n = 2;
  cfg.scheme = importance_scheme::inv_rank;
  weighted_ngram_table table = build_weight_table("doc1", stats, cfg);
  double sum = 0.0;
  for (const auto& [_, entry] : table.entries) sum += entry.weight;
  CHECK(table.normalizer != 0.0);
  CHECK_THAT((table.normalizer - sum) / table.normalizer,
             WithinAbs(0.0, 1e-12));
}

TEST_CASE("single-document corpora produce degenerate tf-idf tables") {
  corpus docs(std::vector<source_document>{{"only", "a b c d e"}});
  corpus_stats stats =
      build_corpus_stats(docs, fixtures::whitespace_tokenizer(), 2);
  ngram_config cfg;
  cfg.n = 2;
  cfg.method = weighting_method::tfidf;
  cfg.scheme = importance_scheme::tanh;
  weighted_ngram_table table = build_weight_table("only", stats, cfg);
  CHECK(table.degenerate());

  // Rank-driven schemes remain usable on the same corpus.
  cfg.scheme = importance_scheme::inv_rank;
  CHECK_FALSE(build_weight_table("only", stats, cfg).degenerate());

  // The constant scheme counts distinct n-grams.
  cfg.scheme = importance_scheme::constant;
  CHECK(build_weight_table("only", stats, cfg).normalizer == 4.0);
}

TEST_CASE("ngram_config validates its domains") {
  ngram_config cfg;
  cfg.n = 1;
  CHECK_THROWS_AS(cfg.validate(), argument_error);
  cfg.n = 5;
  CHECK_THROWS_AS(cfg.validate(), argument_error);
  cfg.n = 3;
  cfg.bm25_k1 = 0.0;
  CHECK_THROWS_AS(cfg.validate(), argument_error);
  cfg.bm25_k1 = 1.2;
  cfg.bm25_b = 1.5;
  CHECK_THROWS_AS(cfg.validate(), argument_error);
  cfg.bm25_b = 0.75;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("corpus stats cache round-trips and validates") {
  corpus docs = fixtures::three_doc_corpus();
  tokenizer_spec tokenizer = fixtures::whitespace_tokenizer();
  corpus_stats stats = build_corpus_stats(docs, tokenizer, 3);

  namespace fs = std::filesystem;
  fs::path path = fs::temp_directory_path() / "sumscore_stats_test.json";
  save_corpus_stats(path, stats);
  corpus_stats reloaded = load_corpus_stats(path);
  fs::remove(path);

  CHECK(reloaded.n == stats.n);
  CHECK(reloaded.num_docs == stats.num_docs);
  CHECK(reloaded.avg_doc_len == stats.avg_doc_len);
  CHECK(reloaded.doc_freq == stats.doc_freq);
  CHECK(reloaded.corpus_hash == stats.corpus_hash);
  CHECK(reloaded.tokenizer_hash == stats.tokenizer_hash);
  for (const auto& [doc_id, per_doc] : stats.per_doc) {
    CHECK(reloaded.doc(doc_id).term_freq == per_doc.term_freq);
    CHECK(reloaded.doc(doc_id).ngram_count == per_doc.ngram_count);
    CHECK(reloaded.doc(doc_id).token_count == per_doc.token_count);
  }

  CHECK_NOTHROW(validate_stats_cache(reloaded, docs, tokenizer, 3));
  CHECK_THROWS_AS(validate_stats_cache(reloaded, docs, tokenizer, 2),
                  integrity_error);
  corpus other(std::vector<source_document>{{"different", "corpus entirely"}});
  CHECK_THROWS_AS(validate_stats_cache(reloaded, other, tokenizer, 3),
                  integrity_error);
  tokenizer_spec char_tok{tokenizer_mode::character, nullptr};
  CHECK_THROWS_AS(validate_stats_cache(reloaded, docs, char_tok, 3),
                  integrity_error);
}
