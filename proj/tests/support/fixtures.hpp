#pragma once

// Shared test fixtures: a small hand-checkable corpus and a synthetic
// system-ranking dataset whose references are informative while its source
// sentences are mostly interchangeable filler.

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "sumscore/sumscore.hpp"

namespace fixtures {

inline std::vector<std::string> three_doc_texts() {
  return {
      "the cat sat on the mat",
      "the dog sat on the log",
      "a bird flew over the log",
  };
}

inline sumscore::corpus three_doc_corpus() {
  std::vector<sumscore::source_document> docs;
  std::vector<std::string> texts = three_doc_texts();
  for (size_t i = 0; i < texts.size(); ++i) {
    docs.push_back({"doc" + std::to_string(i + 1), texts[i]});
  }
  return sumscore::corpus(std::move(docs));
}

inline sumscore::tokenizer_spec whitespace_tokenizer() {
  return sumscore::tokenizer_spec{sumscore::tokenizer_mode::whitespace, nullptr};
}

struct synthetic_options {
  size_t num_systems = 12;
  size_t num_docs = 100;
  size_t filler_sentences = 20;  // per document, around one key sentence
  size_t key_tokens = 8;
  size_t summary_tokens = 12;
  size_t filler_vocab = 40;
  uint64_t seed = 11;
};

// Builds a dataset where each document hides one key sentence of
// document-specific tokens among generic filler sentences. References quote
// the key sentence; better systems copy longer prefixes of it and pad less
// with filler. Human relevance tracks the copied length, so reference-based
// metrics correlate strongly until the references are replaced by source
// filler.
inline sumscore::evaluation_dataset synthetic_dataset(
    const synthetic_options& opt = {}) {
  std::mt19937_64 rng(opt.seed);
  auto filler_token = [&](size_t index) {
    return "filler" + std::to_string(index);
  };
  auto key_token = [&](size_t doc, size_t index) {
    return "key" + std::to_string(doc) + "x" + std::to_string(index);
  };

  std::vector<sumscore::source_document> docs;
  std::vector<std::string> key_sentences;
  for (size_t d = 0; d < opt.num_docs; ++d) {
    std::string key_sentence;
    for (size_t i = 0; i < opt.key_tokens; ++i) {
      if (i > 0) key_sentence += ' ';
      key_sentence += key_token(d, i);
    }
    key_sentence += '.';
    key_sentences.push_back(key_sentence);

    std::vector<std::string> sentences;
    for (size_t s = 0; s < opt.filler_sentences; ++s) {
      std::string sentence;
      for (size_t i = 0; i < 7; ++i) {
        if (i > 0) sentence += ' ';
        sentence += filler_token(static_cast<size_t>(
            sumscore::detail::uniform_below(rng, opt.filler_vocab)));
      }
      sentence += '.';
      sentences.push_back(sentence);
    }
    sentences.insert(sentences.begin() + opt.filler_sentences / 2,
                     key_sentence);
    std::string text;
    for (size_t i = 0; i < sentences.size(); ++i) {
      if (i > 0) text += ' ';
      text += sentences[i];
    }
    docs.push_back({"doc" + std::to_string(d), text});
  }

  std::vector<sumscore::evaluation_record> records;
  for (size_t s = 0; s < opt.num_systems; ++s) {
    double quality = opt.num_systems > 1
                         ? static_cast<double>(s) /
                               static_cast<double>(opt.num_systems - 1)
                         : 1.0;
    for (size_t d = 0; d < opt.num_docs; ++d) {
      long long jitter = static_cast<long long>(
                             sumscore::detail::uniform_below(rng, 3)) - 1;
      long long copied = static_cast<long long>(std::llround(
                             quality * static_cast<double>(opt.key_tokens))) +
                         jitter;
      copied = std::max<long long>(
          0, std::min<long long>(copied,
                                 static_cast<long long>(opt.key_tokens)));

      std::string summary;
      for (long long i = 0; i < copied; ++i) {
        if (i > 0) summary += ' ';
        summary += key_token(d, static_cast<size_t>(i));
      }
      for (size_t i = static_cast<size_t>(copied); i < opt.summary_tokens;
           ++i) {
        if (!summary.empty()) summary += ' ';
        summary += filler_token(static_cast<size_t>(
            sumscore::detail::uniform_below(rng, opt.filler_vocab)));
      }

      double noise =
          static_cast<double>(sumscore::detail::uniform_below(rng, 100)) /
          1000.0;
      sumscore::evaluation_record rec;
      rec.doc_id = "doc" + std::to_string(d);
      rec.system_id = "sys" + std::to_string(s);
      rec.summary = summary;
      rec.references = {key_sentences[d]};
      rec.human["relevance"] = static_cast<double>(copied) + noise;
      records.push_back(std::move(rec));
    }
  }
  return sumscore::evaluation_dataset(sumscore::corpus(std::move(docs)),
                                      std::move(records));
}

// Small dataset for analysis unit tests: 4 systems x 3 docs with scripted
// human scores.
inline sumscore::evaluation_dataset small_dataset() {
  std::vector<sumscore::source_document> docs = {
      {"a", "alpha beta gamma delta. second sentence here. third one ends."},
      {"b", "epsilon zeta eta theta. more words follow. final part now."},
      {"c", "iota kappa lambda mu. padding text again. closing words done."},
  };
  std::vector<sumscore::evaluation_record> records;
  const std::vector<std::string> doc_ids = {"a", "b", "c"};
  for (size_t s = 0; s < 4; ++s) {
    for (size_t d = 0; d < doc_ids.size(); ++d) {
      sumscore::evaluation_record rec;
      rec.doc_id = doc_ids[d];
      rec.system_id = "sys" + std::to_string(s);
      rec.summary = "summary from system " + std::to_string(s) + " for " +
                    doc_ids[d];
      rec.references = {"reference text for " + doc_ids[d] + "."};
      rec.human["relevance"] =
          static_cast<double>(s) + 0.1 * static_cast<double>(d);
      rec.human["coherence"] =
          3.0 - static_cast<double>(s) + 0.05 * static_cast<double>(d);
      records.push_back(std::move(rec));
    }
  }
  return sumscore::evaluation_dataset(sumscore::corpus(std::move(docs)),
                                      std::move(records));
}

}  // namespace fixtures
