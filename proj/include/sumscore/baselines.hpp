#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sumscore/detail/util.hpp"
#include "sumscore/errors.hpp"
#include "sumscore/tokenize.hpp"
#include "sumscore/weighting.hpp"

namespace sumscore {

struct overlap_score {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

namespace detail {

// Lowercased whitespace tokens, the shared preprocessing of both ROUGE
// variants. No stemming, no punctuation stripping.
inline std::vector<std::string> rouge_tokens(std::string_view text) {
  token_sequence seq = tokenize(tokenizer_mode::whitespace, nullptr,
                                to_lower_ascii(text));
  return std::move(seq.tokens);
}

inline overlap_score clipped_overlap(
    const std::map<std::string, long long>& cand,
    const std::map<std::string, long long>& ref) {
  long long cand_total = 0;
  long long ref_total = 0;
  long long matched = 0;
  for (const auto& [_, count] : cand) cand_total += count;
  for (const auto& [_, count] : ref) ref_total += count;
  for (const auto& [key, count] : cand) {
    auto it = ref.find(key);
    if (it != ref.end()) matched += std::min(count, it->second);
  }
  overlap_score score;
  if (cand_total > 0) {
    score.precision =
        static_cast<double>(matched) / static_cast<double>(cand_total);
  }
  if (ref_total > 0) {
    score.recall =
        static_cast<double>(matched) / static_cast<double>(ref_total);
  }
  // Algebraically 2PR/(P+R); this form keeps simple fractions exact.
  if (cand_total + ref_total > 0) {
    score.f1 = 2.0 * static_cast<double>(matched) /
               static_cast<double>(cand_total + ref_total);
  }
  return score;
}

inline long long lcs_length(const std::vector<std::string>& a,
                            const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<long long> prev(b.size() + 1, 0);
  std::vector<long long> curr(b.size() + 1, 0);
  for (size_t i = 1; i <= a.size(); ++i) {
    for (size_t j = 1; j <= b.size(); ++j) {
      if (a[i - 1] == b[j - 1]) {
        curr[j] = prev[j - 1] + 1;
      } else {
        curr[j] = std::max(prev[j], curr[j - 1]);
      }
    }
    std::swap(prev, curr);
  }
  return prev[b.size()];
}

inline std::map<std::string, long long> char_ngrams(std::string_view text,
                                                    size_t n) {
  std::map<std::string, long long> counts;
  if (text.size() < n) return counts;
  for (size_t i = 0; i + n <= text.size(); ++i) {
    ++counts[std::string(text.substr(i, n))];
  }
  return counts;
}

inline std::string strip_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (!is_space(c)) out.push_back(c);
  }
  return out;
}

}  // namespace detail

// ROUGE-N: clipped n-gram overlap on lowercased whitespace tokens; with
// several references, the one with the best F1 wins.
inline overlap_score rouge_n(const std::string& candidate,
                             const std::vector<std::string>& references,
                             size_t n) {
  if (n < 1) throw argument_error("ROUGE-N order must be at least 1");
  if (references.empty()) {
    throw argument_error("ROUGE requires at least one reference");
  }
  std::vector<std::string> cand_tokens = detail::rouge_tokens(candidate);
  std::map<std::string, long long> cand_ngrams =
      extract_ngrams(cand_tokens, n);
  overlap_score best;
  bool first = true;
  for (const auto& reference : references) {
    std::vector<std::string> ref_tokens = detail::rouge_tokens(reference);
    overlap_score score =
        detail::clipped_overlap(cand_ngrams, extract_ngrams(ref_tokens, n));
    if (first || score.f1 > best.f1) {
      best = score;
      first = false;
    }
  }
  return best;
}

// ROUGE-L: longest-common-subsequence F1 on lowercased whitespace tokens.
inline overlap_score rouge_l(const std::string& candidate,
                             const std::vector<std::string>& references) {
  if (references.empty()) {
    throw argument_error("ROUGE requires at least one reference");
  }
  std::vector<std::string> cand_tokens = detail::rouge_tokens(candidate);
  overlap_score best;
  bool first = true;
  for (const auto& reference : references) {
    std::vector<std::string> ref_tokens = detail::rouge_tokens(reference);
    long long lcs = detail::lcs_length(cand_tokens, ref_tokens);
    overlap_score score;
    if (!cand_tokens.empty()) {
      score.precision =
          static_cast<double>(lcs) / static_cast<double>(cand_tokens.size());
    }
    if (!ref_tokens.empty()) {
      score.recall =
          static_cast<double>(lcs) / static_cast<double>(ref_tokens.size());
    }
    if (!cand_tokens.empty() || !ref_tokens.empty()) {
      score.f1 = 2.0 * static_cast<double>(lcs) /
                 static_cast<double>(cand_tokens.size() + ref_tokens.size());
    }
    if (first || score.f1 > best.f1) {
      best = score;
      first = false;
    }
  }
  return best;
}

// chrF: character n-gram F_beta averaged over orders 1..char_n on
// whitespace-stripped text; orders where neither side has n-grams are
// skipped; max over references.
inline double chrf(const std::string& candidate,
                   const std::vector<std::string>& references,
                   size_t char_n = 6, double beta = 2.0) {
  if (char_n < 1) throw argument_error("chrF order must be at least 1");
  if (!(beta > 0.0)) throw argument_error("chrF beta must be positive");
  if (references.empty()) {
    throw argument_error("chrF requires at least one reference");
  }
  std::string cand = detail::strip_whitespace(candidate);
  double beta2 = beta * beta;
  double best = 0.0;
  bool first = true;
  for (const auto& reference : references) {
    std::string ref = detail::strip_whitespace(reference);
    double f_sum = 0.0;
    size_t effective_orders = 0;
    for (size_t k = 1; k <= char_n; ++k) {
      bool cand_has = cand.size() >= k;
      bool ref_has = ref.size() >= k;
      if (!cand_has && !ref_has) continue;
      ++effective_orders;
      if (!cand_has || !ref_has) continue;  // F contribution is 0
      overlap_score po = detail::clipped_overlap(detail::char_ngrams(cand, k),
                                                 detail::char_ngrams(ref, k));
      double denom = beta2 * po.precision + po.recall;
      if (denom > 0.0) {
        f_sum += (1.0 + beta2) * po.precision * po.recall / denom;
      }
    }
    double value = effective_orders == 0
                       ? 1.0  // both sides empty: vacuously identical
                       : f_sum / static_cast<double>(effective_orders);
    if (first || value > best) {
      best = value;
      first = false;
    }
  }
  return best;
}

// Batch helpers producing score-matrix columns over a dataset. Records are
// scored independently; the empty-reference error carries record identity.
template <typename Fn>
named_column reference_metric_column(const evaluation_dataset& ds,
                                     const std::string& name, Fn&& fn) {
  const auto& records = ds.records();
  std::vector<double> values(records.size());
  std::vector<std::string> failures(records.size());
  detail::parallel_for(records.size(), [&](size_t i) {
    try {
      values[i] = fn(records[i]);
    } catch (const error& e) {
      failures[i] = e.what();
    }
  });
  named_column out;
  out.name = name;
  for (size_t i = 0; i < records.size(); ++i) {
    if (!failures[i].empty()) {
      throw argument_error("metric '" + name + "' failed for system '" +
                           records[i].system_id + "', document '" +
                           records[i].doc_id + "': " + failures[i]);
    }
    out.values[record_key{records[i].system_id, records[i].doc_id}] =
        values[i];
  }
  return out;
}

inline named_column rouge_n_column(const evaluation_dataset& ds, size_t n) {
  return reference_metric_column(
      ds, "rouge" + std::to_string(n), [n](const evaluation_record& rec) {
        return rouge_n(rec.summary, rec.references, n).f1;
      });
}

inline named_column rouge_l_column(const evaluation_dataset& ds) {
  return reference_metric_column(ds, "rougeL", [](const evaluation_record& rec) {
    return rouge_l(rec.summary, rec.references).f1;
  });
}

inline named_column chrf_column(const evaluation_dataset& ds,
                                size_t char_n = 6, double beta = 2.0) {
  return reference_metric_column(
      ds, "chrf", [char_n, beta](const evaluation_record& rec) {
        return chrf(rec.summary, rec.references, char_n, beta);
      });
}

}  // namespace sumscore
