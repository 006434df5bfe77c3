#pragma once

#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sumscore/corpus.hpp"
#include "sumscore/detail/util.hpp"
#include "sumscore/errors.hpp"
#include "sumscore/score_matrix.hpp"
#include "sumscore/tokenize.hpp"
#include "sumscore/weighting.hpp"

namespace sumscore {

// Full configuration of the relevance metric.
struct score_config {
  ngram_config ngram;
  tokenizer_spec tokenizer;
  bool use_length_penalty = true;
  double penalty_slope = 20.0;
  double penalty_offset = 10.0;

  void validate() const {
    ngram.validate();
    tokenizer.validate();
    if (!(penalty_slope > 0.0)) {
      throw argument_error("penalty_slope must be positive");
    }
    if (!std::isfinite(penalty_offset)) {
      throw argument_error("penalty_offset must be finite");
    }
  }
};

// Default configuration: corpus-trained subword tokenizer, trigrams,
// tf-idf importance, tanh scheme, length penalty enabled.
inline score_config default_score_config(
    std::shared_ptr<const subword_vocab> vocab) {
  score_config cfg;
  cfg.ngram.n = 3;
  cfg.ngram.method = weighting_method::tfidf;
  cfg.ngram.scheme = importance_scheme::tanh;
  cfg.tokenizer.mode = tokenizer_mode::corpus_subword;
  cfg.tokenizer.vocab = std::move(vocab);
  cfg.use_length_penalty = true;
  cfg.penalty_slope = 20.0;
  cfg.penalty_offset = 10.0;
  return cfg;
}

inline constexpr size_t default_subword_merges = 100;

// alpha = 1 / (1 + exp(slope * |s|/|d| - offset)), strictly in (0, 1).
inline double length_penalty(long long summary_len, long long doc_len,
                             double slope = 20.0, double offset = 10.0) {
  if (doc_len <= 0) {
    throw argument_error("length penalty requires a positive document length");
  }
  if (summary_len < 0) {
    throw argument_error("summary length must be nonnegative");
  }
  double ratio =
      static_cast<double>(summary_len) / static_cast<double>(doc_len);
  return 1.0 / (1.0 + std::exp(slope * ratio - offset));
}

struct relevance_score {
  double value = 0.0;        // alpha * raw_overlap
  double raw_overlap = 0.0;  // (sum of W over summary n-grams) / N, in [0,1]
  double alpha = 1.0;
  long long summary_len = 0;
  long long doc_len = 0;
};

// m(s, d, D): weighted n-gram overlap of the summary against the document's
// weight table, normalized by N and scaled by the length penalty.
inline relevance_score score_summary(const std::string& summary,
                                     const weighted_ngram_table& table,
                                     const score_config& cfg) {
  cfg.validate();
  if (table.degenerate()) {
    throw degenerate_input_error(
        "document '" + table.doc_id +
        "' has an all-zero weight table; the metric is undefined on it");
  }
  token_sequence seq = tokenize(cfg.tokenizer, summary);
  relevance_score score;
  score.summary_len = static_cast<long long>(seq.size());
  score.doc_len = table.doc_token_count;

  std::map<std::string, long long> summary_ngrams =
      extract_ngrams(seq.tokens, cfg.ngram.n);
  double overlap = 0.0;
  // Iterating the table (not the summary) keeps the summation order of the
  // full-document summary identical to the normalizer's, so that case is
  // exactly 1.
  for (const auto& [key, entry] : table.entries) {
    if (summary_ngrams.count(key) != 0) overlap += entry.weight;
  }
  score.raw_overlap = overlap / table.normalizer;
  score.alpha = cfg.use_length_penalty
                    ? length_penalty(score.summary_len, score.doc_len,
                                     cfg.penalty_slope, cfg.penalty_offset)
                    : 1.0;
  score.value = score.alpha * score.raw_overlap;
  return score;
}

// Scores every record of the dataset; the result column is named "ours".
// Per-record failures are aggregated with record identity.
inline named_column score_batch(const evaluation_dataset& ds,
                                const score_config& cfg,
                                const corpus_stats* stats = nullptr) {
  cfg.validate();
  corpus_stats local_stats;
  if (stats == nullptr) {
    local_stats = build_corpus_stats(ds.documents(), cfg.tokenizer,
                                     cfg.ngram.n);
    stats = &local_stats;
  } else {
    validate_stats_cache(*stats, ds.documents(), cfg.tokenizer, cfg.ngram.n);
  }

  std::vector<std::string> doc_ids = ds.documents_with_records();
  std::vector<weighted_ngram_table> tables(doc_ids.size());
  detail::parallel_for(doc_ids.size(), [&](size_t i) {
    tables[i] = build_weight_table(doc_ids[i], *stats, cfg.ngram);
  });
  std::map<std::string, const weighted_ngram_table*> table_by_doc;
  for (size_t i = 0; i < doc_ids.size(); ++i) {
    table_by_doc[doc_ids[i]] = &tables[i];
  }

  const auto& records = ds.records();
  std::vector<std::optional<double>> values(records.size());
  std::vector<std::string> failures(records.size());
  std::vector<bool> failure_degenerate(records.size(), false);
  detail::parallel_for(records.size(), [&](size_t i) {
    const auto& rec = records[i];
    try {
      relevance_score score =
          score_summary(rec.summary, *table_by_doc.at(rec.doc_id), cfg);
      values[i] = score.value;
    } catch (const degenerate_input_error& e) {
      failures[i] = e.what();
      failure_degenerate[i] = true;
    } catch (const error& e) {
      failures[i] = e.what();
    }
  });

  std::vector<std::string> messages;
  bool all_degenerate = true;
  for (size_t i = 0; i < records.size(); ++i) {
    if (values[i].has_value()) continue;
    messages.push_back("system '" + records[i].system_id + "', document '" +
                       records[i].doc_id + "': " + failures[i]);
    if (!failure_degenerate[i]) all_degenerate = false;
  }
  if (!messages.empty()) {
    std::string combined = "scoring failed for " +
                           std::to_string(messages.size()) + " record(s):";
    size_t shown = std::min<size_t>(messages.size(), 8);
    for (size_t i = 0; i < shown; ++i) combined += "\n  " + messages[i];
    if (messages.size() > shown) {
      combined +=
          "\n  ... and " + std::to_string(messages.size() - shown) + " more";
    }
    if (all_degenerate) throw degenerate_input_error(combined);
    throw error(combined);
  }

  named_column out;
  out.name = "ours";
  for (size_t i = 0; i < records.size(); ++i) {
    out.values[record_key{records[i].system_id, records[i].doc_id}] =
        *values[i];
  }
  return out;
}

}  // namespace sumscore
