#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sumscore/corpus.hpp"
#include "sumscore/detail/util.hpp"
#include "sumscore/errors.hpp"
#include "sumscore/tokenize.hpp"

namespace sumscore {

// Canonical n-gram key: tokens joined by the unit separator byte 0x1f.
// Key comparison is byte-lexicographic on this joined form.
inline std::string ngram_key(std::span<const std::string> tokens) {
  std::string key;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) key.push_back('\x1f');
    key += tokens[i];
  }
  return key;
}

inline std::vector<std::string> split_ngram_key(std::string_view key) {
  std::vector<std::string> tokens;
  size_t pos = 0;
  for (;;) {
    size_t sep = key.find('\x1f', pos);
    if (sep == std::string_view::npos) {
      tokens.emplace_back(key.substr(pos));
      return tokens;
    }
    tokens.emplace_back(key.substr(pos, sep - pos));
    pos = sep + 1;
  }
}

// Counts of contiguous token windows of length n.
inline std::map<std::string, long long> extract_ngrams(
    std::span<const std::string> tokens, size_t n) {
  if (n < 1) throw argument_error("n-gram order must be at least 1");
  std::map<std::string, long long> counts;
  if (tokens.size() < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[ngram_key(tokens.subspan(i, n))];
  }
  return counts;
}

enum class weighting_method { tfidf, bm25 };

inline weighting_method parse_weighting_method(std::string_view name) {
  std::string lower = detail::to_lower_ascii(name);
  if (lower == "tfidf" || lower == "tf-idf") return weighting_method::tfidf;
  if (lower == "bm25" || lower == "bm-25") return weighting_method::bm25;
  throw argument_error("unknown weighting method: '" + std::string(name) +
                       "' (expected tfidf or bm25)");
}

inline std::string to_string(weighting_method method) {
  return method == weighting_method::tfidf ? "tfidf" : "bm25";
}

enum class importance_scheme { importance, exp_rank, inv_rank, constant, tanh };

inline importance_scheme parse_importance_scheme(std::string_view name) {
  std::string lower = detail::to_lower_ascii(name);
  std::replace(lower.begin(), lower.end(), '-', '_');
  if (lower == "importance") return importance_scheme::importance;
  if (lower == "exp_rank") return importance_scheme::exp_rank;
  if (lower == "inv_rank") return importance_scheme::inv_rank;
  if (lower == "constant") return importance_scheme::constant;
  if (lower == "tanh") return importance_scheme::tanh;
  throw argument_error(
      "unknown importance scheme: '" + std::string(name) +
      "' (expected importance, exp-rank, inv-rank, constant, or tanh)");
}

inline std::string to_string(importance_scheme scheme) {
  switch (scheme) {
    case importance_scheme::importance: return "importance";
    case importance_scheme::exp_rank: return "exp-rank";
    case importance_scheme::inv_rank: return "inv-rank";
    case importance_scheme::constant: return "constant";
    case importance_scheme::tanh: return "tanh";
  }
  throw argument_error("invalid importance scheme value");
}

struct ngram_config {
  size_t n = 3;
  weighting_method method = weighting_method::tfidf;
  importance_scheme scheme = importance_scheme::tanh;
  double bm25_k1 = 1.2;
  double bm25_b = 0.75;

  void validate() const {
    if (n < 2 || n > 4) {
      throw argument_error("n-gram order must be 2, 3, or 4, got " +
                           std::to_string(n));
    }
    if (!(bm25_k1 > 0.0)) {
      throw argument_error("bm25_k1 must be positive");
    }
    if (!(bm25_b >= 0.0 && bm25_b <= 1.0)) {
      throw argument_error("bm25_b must lie in [0, 1]");
    }
  }
};

struct doc_stats {
  std::map<std::string, long long> term_freq;
  long long ngram_count = 0;  // occurrences, i.e. max(0, tokens - n + 1)
  long long token_count = 0;
};

// Corpus-level n-gram statistics for one (tokenizer, n) configuration.
struct corpus_stats {
  size_t n = 0;
  size_t num_docs = 0;
  double avg_doc_len = 0.0;  // mean n-gram occurrences per document
  std::map<std::string, long long> doc_freq;
  std::map<std::string, doc_stats> per_doc;
  std::string corpus_hash;
  std::string tokenizer_hash;
  std::string tokenizer_name;

  const doc_stats& doc(const std::string& doc_id) const {
    auto it = per_doc.find(doc_id);
    if (it == per_doc.end()) {
      throw argument_error("unknown doc_id in corpus stats: " + doc_id);
    }
    return it->second;
  }
};

inline corpus_stats build_corpus_stats(const corpus& docs,
                                       const tokenizer_spec& tokenizer,
                                       size_t n) {
  if (n < 1) throw argument_error("n-gram order must be at least 1");
  tokenizer.validate();
  corpus_stats stats;
  stats.n = n;
  stats.num_docs = docs.size();
  stats.corpus_hash = docs.content_hash();
  stats.tokenizer_hash = tokenizer.content_hash();
  stats.tokenizer_name = to_string(tokenizer.mode);

  std::vector<doc_stats> per_doc(docs.size());
  detail::parallel_for(docs.size(), [&](size_t i) {
    const auto& doc = docs.documents()[i];
    token_sequence seq = tokenize(tokenizer, doc.text);
    doc_stats ds;
    ds.token_count = static_cast<long long>(seq.size());
    ds.term_freq = extract_ngrams(seq.tokens, n);
    ds.ngram_count = 0;
    for (const auto& [_, count] : ds.term_freq) ds.ngram_count += count;
    per_doc[i] = std::move(ds);
  });

  long long total_ngrams = 0;
  for (size_t i = 0; i < docs.size(); ++i) {
    const auto& doc = docs.documents()[i];
    total_ngrams += per_doc[i].ngram_count;
    for (const auto& [key, _] : per_doc[i].term_freq) {
      ++stats.doc_freq[key];
    }
    stats.per_doc[doc.doc_id] = std::move(per_doc[i]);
  }
  stats.avg_doc_len =
      static_cast<double>(total_ngrams) / static_cast<double>(docs.size());
  return stats;
}

// w_{t,d,D}: tf-idf or bm-25 importance of n-gram t within document doc_id.
inline double importance(const std::string& t, const std::string& doc_id,
                         const corpus_stats& stats, const ngram_config& cfg) {
  const doc_stats& doc = stats.doc(doc_id);
  auto tf_it = doc.term_freq.find(t);
  if (tf_it == doc.term_freq.end()) {
    throw argument_error("n-gram is not present in document '" + doc_id + "'");
  }
  double tf = static_cast<double>(tf_it->second);
  auto df_it = stats.doc_freq.find(t);
  double df = df_it == stats.doc_freq.end()
                  ? 0.0
                  : static_cast<double>(df_it->second);
  double num_docs = static_cast<double>(stats.num_docs);
  if (cfg.method == weighting_method::tfidf) {
    return tf * std::log(num_docs / df);
  }
  double idf = std::log((num_docs - df + 0.5) / (df + 0.5) + 1.0);
  double dl = static_cast<double>(doc.ngram_count);
  double norm =
      1.0 - cfg.bm25_b + cfg.bm25_b * dl / stats.avg_doc_len;
  double saturation = tf * (cfg.bm25_k1 + 1.0) / (tf + cfg.bm25_k1 * norm);
  return idf * saturation;
}

// r_{t,d,D}: 1 for the most important n-gram; ties broken by lexicographic
// key order. Bijection onto 1..#distinct n-grams of the document.
inline std::map<std::string, long long> rank_ngrams(const std::string& doc_id,
                                                    const corpus_stats& stats,
                                                    const ngram_config& cfg) {
  const doc_stats& doc = stats.doc(doc_id);
  if (doc.term_freq.empty()) {
    throw argument_error("document '" + doc_id +
                         "' has no n-grams to rank");
  }
  std::vector<std::pair<std::string, double>> scored;
  scored.reserve(doc.term_freq.size());
  for (const auto& [key, _] : doc.term_freq) {
    scored.emplace_back(key, importance(key, doc_id, stats, cfg));
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::map<std::string, long long> ranks;
  for (size_t i = 0; i < scored.size(); ++i) {
    ranks[scored[i].first] = static_cast<long long>(i + 1);
  }
  return ranks;
}

// W_{t,d,D} under the configured scheme, for an n-gram present in the
// document. Absent n-grams contribute exactly 0 upstream of this call.
inline double ngram_weight(double w, long long r, importance_scheme scheme) {
  if (r < 1) throw argument_error("rank must be at least 1");
  if (!(w >= 0.0)) throw argument_error("importance must be nonnegative");
  switch (scheme) {
    case importance_scheme::importance: return w;
    case importance_scheme::exp_rank: return std::exp(-static_cast<double>(r));
    case importance_scheme::inv_rank: return 1.0 / static_cast<double>(r);
    case importance_scheme::constant: return 1.0;
    case importance_scheme::tanh: return std::tanh(w / static_cast<double>(r));
  }
  throw argument_error("invalid importance scheme value");
}

struct weighted_ngram_entry {
  double importance = 0.0;
  long long rank = 0;
  double weight = 0.0;
};

// All distinct n-grams of one document with importance, rank, weight, and
// the normalizer N (sum of weights in key order).
struct weighted_ngram_table {
  std::string doc_id;
  std::map<std::string, weighted_ngram_entry> entries;
  double normalizer = 0.0;
  long long doc_ngram_count = 0;
  long long doc_token_count = 0;

  bool degenerate() const { return !(normalizer > 0.0); }
};

inline weighted_ngram_table build_weight_table(const std::string& doc_id,
                                               const corpus_stats& stats,
                                               const ngram_config& cfg) {
  cfg.validate();
  const doc_stats& doc = stats.doc(doc_id);
  weighted_ngram_table table;
  table.doc_id = doc_id;
  table.doc_ngram_count = doc.ngram_count;
  table.doc_token_count = doc.token_count;
  if (doc.term_freq.empty()) return table;

  std::map<std::string, long long> ranks = rank_ngrams(doc_id, stats, cfg);
  for (const auto& [key, _] : doc.term_freq) {
    weighted_ngram_entry entry;
    entry.importance = importance(key, doc_id, stats, cfg);
    entry.rank = ranks.at(key);
    entry.weight = ngram_weight(entry.importance, entry.rank, cfg.scheme);
    table.entries[key] = entry;
  }
  double n_sum = 0.0;
  for (const auto& [_, entry] : table.entries) n_sum += entry.weight;
  table.normalizer = n_sum;
  return table;
}

inline std::string stats_to_json(const corpus_stats& stats) {
  nlohmann::json obj;
  obj["format"] = "sumscore-stats-v1";
  obj["n"] = stats.n;
  obj["num_docs"] = stats.num_docs;
  obj["avg_doc_len"] = stats.avg_doc_len;
  obj["corpus_hash"] = stats.corpus_hash;
  obj["tokenizer_hash"] = stats.tokenizer_hash;
  obj["tokenizer_name"] = stats.tokenizer_name;
  nlohmann::json doc_freq = nlohmann::json::object();
  for (const auto& [key, df] : stats.doc_freq) {
    doc_freq[detail::hex_encode(key)] = df;
  }
  obj["doc_freq"] = doc_freq;
  nlohmann::json per_doc = nlohmann::json::object();
  for (const auto& [doc_id, ds] : stats.per_doc) {
    nlohmann::json tf = nlohmann::json::object();
    for (const auto& [key, count] : ds.term_freq) {
      tf[detail::hex_encode(key)] = count;
    }
    per_doc[doc_id] = {{"term_freq", tf},
                       {"ngram_count", ds.ngram_count},
                       {"token_count", ds.token_count}};
  }
  obj["per_doc"] = per_doc;
  return obj.dump() + "\n";
}

inline void save_corpus_stats(const std::filesystem::path& path,
                              const corpus_stats& stats) {
  detail::write_text_file_atomic(path, stats_to_json(stats));
}

inline corpus_stats stats_from_json(const std::string& text,
                                    const std::string& path_label =
                                        "<stats>") {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path_label + ": " + e.what());
  }
  if (!obj.is_object() || obj.value("format", "") != "sumscore-stats-v1") {
    throw integrity_error(path_label + ": not a sumscore-stats-v1 cache file");
  }
  try {
    corpus_stats stats;
    stats.n = obj.at("n").get<size_t>();
    stats.num_docs = obj.at("num_docs").get<size_t>();
    stats.avg_doc_len = obj.at("avg_doc_len").get<double>();
    stats.corpus_hash = obj.at("corpus_hash").get<std::string>();
    stats.tokenizer_hash = obj.at("tokenizer_hash").get<std::string>();
    stats.tokenizer_name = obj.at("tokenizer_name").get<std::string>();
    for (const auto& [hex_key, df] : obj.at("doc_freq").items()) {
      stats.doc_freq[detail::hex_decode(hex_key)] = df.get<long long>();
    }
    for (const auto& [doc_id, entry] : obj.at("per_doc").items()) {
      doc_stats ds;
      ds.ngram_count = entry.at("ngram_count").get<long long>();
      ds.token_count = entry.at("token_count").get<long long>();
      for (const auto& [hex_key, count] : entry.at("term_freq").items()) {
        ds.term_freq[detail::hex_decode(hex_key)] = count.get<long long>();
      }
      stats.per_doc[doc_id] = std::move(ds);
    }
    return stats;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path_label + ": malformed stats cache: " + e.what());
  }
}

inline corpus_stats load_corpus_stats(const std::filesystem::path& path) {
  return stats_from_json(detail::read_text_file(path), path.string());
}

// Guards a loaded cache against reuse with the wrong corpus, tokenizer,
// or n-gram order.
inline void validate_stats_cache(const corpus_stats& stats,
                                 const corpus& docs,
                                 const tokenizer_spec& tokenizer, size_t n) {
  if (stats.corpus_hash != docs.content_hash()) {
    throw integrity_error("stats cache was built from a different corpus");
  }
  if (stats.tokenizer_hash != tokenizer.content_hash()) {
    throw integrity_error(
        "stats cache was built with a different tokenizer configuration");
  }
  if (stats.n != n) {
    throw integrity_error("stats cache was built for n=" +
                          std::to_string(stats.n) + ", requested n=" +
                          std::to_string(n));
  }
}

}  // namespace sumscore
