#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sumscore/corpus.hpp"
#include "sumscore/detail/util.hpp"
#include "sumscore/errors.hpp"

namespace sumscore {

enum class tokenizer_mode { whitespace, character, corpus_subword };

inline tokenizer_mode parse_tokenizer_mode(std::string_view name) {
  std::string lower = detail::to_lower_ascii(name);
  if (lower == "whitespace") return tokenizer_mode::whitespace;
  if (lower == "character") return tokenizer_mode::character;
  if (lower == "subword" || lower == "corpus_subword") {
    return tokenizer_mode::corpus_subword;
  }
  throw argument_error("unknown tokenizer mode: '" + std::string(name) +
                       "' (expected whitespace, character, or subword)");
}

inline std::string to_string(tokenizer_mode mode) {
  switch (mode) {
    case tokenizer_mode::whitespace: return "whitespace";
    case tokenizer_mode::character: return "character";
    case tokenizer_mode::corpus_subword: return "subword";
  }
  throw argument_error("invalid tokenizer mode value");
}

// Tokens plus the whitespace around them, so the original text can be
// reassembled byte-for-byte: leading + tokens[0] + separators[0] + ...
struct token_sequence {
  std::vector<std::string> tokens;
  std::string leading;
  std::vector<std::string> separators;  // separators[i] follows tokens[i]

  size_t size() const { return tokens.size(); }

  std::string detokenize() const {
    std::string out = leading;
    for (size_t i = 0; i < tokens.size(); ++i) {
      out += tokens[i];
      if (i < separators.size()) out += separators[i];
    }
    return out;
  }
};

// Byte-level pair-merge vocabulary. The base alphabet is all 256 byte
// values, so every input is tokenizable; merges extend it in order.
class subword_vocab {
 public:
  subword_vocab(std::vector<std::pair<std::string, std::string>> merges,
                std::string corpus_hash, size_t requested_merges,
                uint64_t seed)
      : merges_(std::move(merges)),
        corpus_hash_(std::move(corpus_hash)),
        requested_merges_(requested_merges),
        seed_(seed) {
    std::set<std::string> known;
    for (size_t i = 0; i < merges_.size(); ++i) {
      const auto& [left, right] = merges_[i];
      if (left.empty() || right.empty()) {
        throw integrity_error("merge " + std::to_string(i + 1) +
                              " has an empty side");
      }
      if ((left.size() > 1 && known.count(left) == 0) ||
          (right.size() > 1 && known.count(right) == 0)) {
        throw integrity_error("merge " + std::to_string(i + 1) +
                              " references a token no earlier merge produced");
      }
      known.insert(left + right);
    }
    uint64_t h = detail::fnv1a64("sumscore-vocab");
    for (const auto& [left, right] : merges_) {
      h = detail::fnv1a64(left, h);
      h = detail::fnv1a64(std::string_view("\x1e", 1), h);
      h = detail::fnv1a64(right, h);
      h = detail::fnv1a64(std::string_view("\x1d", 1), h);
    }
    content_hash_ = detail::hash_hex(h);
  }

  const std::vector<std::pair<std::string, std::string>>& merges() const {
    return merges_;
  }

  // 256 base byte tokens plus one learned token per merge.
  size_t vocab_size() const { return 256 + merges_.size(); }

  const std::string& corpus_hash() const { return corpus_hash_; }
  size_t requested_merges() const { return requested_merges_; }
  uint64_t seed() const { return seed_; }
  const std::string& content_hash() const { return content_hash_; }

 private:
  std::vector<std::pair<std::string, std::string>> merges_;
  std::string corpus_hash_;
  size_t requested_merges_ = 0;
  uint64_t seed_ = 0;
  std::string content_hash_;
};

// A tokenizer mode bundled with the vocabulary it needs (subword only).
struct tokenizer_spec {
  tokenizer_mode mode = tokenizer_mode::whitespace;
  std::shared_ptr<const subword_vocab> vocab;

  void validate() const {
    if (mode == tokenizer_mode::corpus_subword && !vocab) {
      throw argument_error("subword tokenizer mode requires a vocabulary");
    }
  }

  std::string content_hash() const {
    uint64_t h = detail::fnv1a64(to_string(mode));
    if (vocab) h = detail::fnv1a64(vocab->content_hash(), h);
    return detail::hash_hex(h);
  }
};

namespace detail {

struct pair_count {
  long long count = 0;
  std::string concat;
  std::string left;
};

// Selection order: highest count, then lexicographically smallest
// concatenated pair, then smallest left side.
inline bool better_merge(const pair_count& a, const pair_count& b) {
  if (a.count != b.count) return a.count > b.count;
  if (a.concat != b.concat) return a.concat < b.concat;
  return a.left < b.left;
}

inline std::vector<std::string> apply_merge(
    const std::vector<std::string>& tokens, const std::string& left,
    const std::string& right) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  size_t i = 0;
  while (i < tokens.size()) {
    if (i + 1 < tokens.size() && tokens[i] == left && tokens[i + 1] == right) {
      out.push_back(left + right);
      i += 2;
    } else {
      out.push_back(tokens[i]);
      ++i;
    }
  }
  return out;
}

}  // namespace detail

// Learns up to num_merges byte-pair merges: each step merges the most
// frequent adjacent token pair across all documents, ties broken
// lexicographically by the concatenated pair. Stops early if no adjacent
// pairs remain. Deterministic; the seed is recorded as metadata only.
inline subword_vocab train_subword(const corpus& docs, size_t num_merges,
                                   uint64_t seed) {
  if (num_merges == 0) {
    throw argument_error("num_merges must be positive");
  }
  size_t total_bytes = 0;
  for (const auto& doc : docs.documents()) total_bytes += doc.text.size();
  if (total_bytes < 2) {
    throw argument_error(
        "subword training requires a corpus with at least 2 bytes");
  }

  std::vector<std::vector<std::string>> sequences;
  sequences.reserve(docs.size());
  for (const auto& doc : docs.documents()) {
    std::vector<std::string> seq;
    seq.reserve(doc.text.size());
    for (char c : doc.text) seq.emplace_back(1, c);
    sequences.push_back(std::move(seq));
  }

  std::vector<std::pair<std::string, std::string>> merges;
  for (size_t step = 0; step < num_merges; ++step) {
    std::map<std::pair<std::string, std::string>, long long> counts;
    for (const auto& seq : sequences) {
      for (size_t i = 0; i + 1 < seq.size(); ++i) {
        ++counts[{seq[i], seq[i + 1]}];
      }
    }
    if (counts.empty()) break;
    const std::pair<std::string, std::string>* best_pair = nullptr;
    detail::pair_count best;
    for (const auto& [pair, count] : counts) {
      detail::pair_count candidate{count, pair.first + pair.second,
                                   pair.first};
      if (best_pair == nullptr || detail::better_merge(candidate, best)) {
        best_pair = &pair;
        best = std::move(candidate);
      }
    }
    merges.push_back(*best_pair);
    for (auto& seq : sequences) {
      seq = detail::apply_merge(seq, best_pair->first, best_pair->second);
    }
  }
  return subword_vocab(std::move(merges), docs.content_hash(), num_merges,
                       seed);
}

inline token_sequence tokenize(tokenizer_mode mode, const subword_vocab* vocab,
                               std::string_view text) {
  token_sequence out;
  switch (mode) {
    case tokenizer_mode::whitespace: {
      size_t i = 0;
      while (i < text.size() && detail::is_space(text[i])) ++i;
      out.leading = std::string(text.substr(0, i));
      while (i < text.size()) {
        size_t start = i;
        while (i < text.size() && !detail::is_space(text[i])) ++i;
        out.tokens.emplace_back(text.substr(start, i - start));
        size_t sep_start = i;
        while (i < text.size() && detail::is_space(text[i])) ++i;
        out.separators.emplace_back(text.substr(sep_start, i - sep_start));
      }
      break;
    }
    case tokenizer_mode::character: {
      out.tokens.reserve(text.size());
      for (char c : text) out.tokens.emplace_back(1, c);
      out.separators.assign(text.size(), std::string());
      break;
    }
    case tokenizer_mode::corpus_subword: {
      if (vocab == nullptr) {
        throw argument_error("subword tokenization requires a vocabulary");
      }
      std::vector<std::string> seq;
      seq.reserve(text.size());
      for (char c : text) seq.emplace_back(1, c);
      for (const auto& [left, right] : vocab->merges()) {
        seq = detail::apply_merge(seq, left, right);
      }
      out.tokens = std::move(seq);
      out.separators.assign(out.tokens.size(), std::string());
      break;
    }
  }
  return out;
}

inline token_sequence tokenize(const tokenizer_spec& spec,
                               std::string_view text) {
  spec.validate();
  return tokenize(spec.mode, spec.vocab.get(), text);
}

inline std::string vocab_to_json(const subword_vocab& vocab) {
  nlohmann::json obj;
  obj["format"] = "sumscore-vocab-v1";
  obj["corpus_hash"] = vocab.corpus_hash();
  obj["num_merges"] = vocab.requested_merges();
  obj["seed"] = vocab.seed();
  nlohmann::json merges = nlohmann::json::array();
  for (const auto& [left, right] : vocab.merges()) {
    merges.push_back({detail::hex_encode(left), detail::hex_encode(right)});
  }
  obj["merges"] = merges;
  return obj.dump(2) + "\n";
}

inline void save_vocab(const std::filesystem::path& path,
                       const subword_vocab& vocab) {
  detail::write_text_file_atomic(path, vocab_to_json(vocab));
}

inline subword_vocab vocab_from_json(const std::string& text,
                                     const std::string& path_label =
                                         "<vocab>") {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path_label + ": " + e.what());
  }
  if (!obj.is_object() || obj.value("format", "") != "sumscore-vocab-v1") {
    throw integrity_error(path_label +
                          ": not a sumscore-vocab-v1 vocabulary file");
  }
  if (!obj.contains("merges") || !obj["merges"].is_array() ||
      !obj.contains("corpus_hash") || !obj["corpus_hash"].is_string() ||
      !obj.contains("num_merges") || !obj["num_merges"].is_number_unsigned()) {
    throw parse_error(path_label + ": vocabulary file is missing fields");
  }
  std::vector<std::pair<std::string, std::string>> merges;
  for (const auto& entry : obj["merges"]) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_string() ||
        !entry[1].is_string()) {
      throw parse_error(path_label +
                        ": each merge must be a pair of hex strings");
    }
    merges.emplace_back(detail::hex_decode(entry[0].get<std::string>()),
                        detail::hex_decode(entry[1].get<std::string>()));
  }
  uint64_t seed = obj.value("seed", 0ull);
  return subword_vocab(std::move(merges), obj["corpus_hash"].get<std::string>(),
                       obj["num_merges"].get<size_t>(), seed);
}

inline subword_vocab load_vocab(const std::filesystem::path& path) {
  return vocab_from_json(detail::read_text_file(path), path.string());
}

}  // namespace sumscore
