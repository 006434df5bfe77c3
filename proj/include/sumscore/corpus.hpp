#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sumscore/detail/util.hpp"
#include "sumscore/errors.hpp"
#include "sumscore/score_matrix.hpp"

namespace sumscore {

struct source_document {
  std::string doc_id;
  std::string text;

  bool operator==(const source_document&) const = default;
};

// An ordered, validated collection of source documents.
class corpus {
 public:
  explicit corpus(std::vector<source_document> documents)
      : documents_(std::move(documents)) {
    if (documents_.empty()) {
      throw argument_error("corpus must contain at least one document");
    }
    for (size_t i = 0; i < documents_.size(); ++i) {
      const auto& doc = documents_[i];
      if (doc.doc_id.empty()) {
        throw argument_error("document at position " + std::to_string(i) +
                             " has an empty doc_id");
      }
      if (doc.text.empty()) {
        throw argument_error("document '" + doc.doc_id + "' has empty text");
      }
      auto [_, inserted] = index_.emplace(doc.doc_id, i);
      if (!inserted) {
        throw argument_error("duplicate doc_id: " + doc.doc_id);
      }
    }
    uint64_t h = detail::fnv1a64("sumscore-corpus");
    for (const auto& doc : documents_) {
      h = detail::fnv1a64(doc.doc_id, h);
      h = detail::fnv1a64(std::string_view("\x1e", 1), h);
      h = detail::fnv1a64(doc.text, h);
      h = detail::fnv1a64(std::string_view("\x1d", 1), h);
    }
    content_hash_ = detail::hash_hex(h);
  }

  const std::vector<source_document>& documents() const { return documents_; }

  size_t size() const { return documents_.size(); }

  bool contains(const std::string& doc_id) const {
    return index_.count(doc_id) != 0;
  }

  const source_document& document(const std::string& doc_id) const {
    auto it = index_.find(doc_id);
    if (it == index_.end()) {
      throw argument_error("unknown doc_id: " + doc_id);
    }
    return documents_[it->second];
  }

  // Stable fingerprint of ids and raw text, used to key derived artifacts.
  const std::string& content_hash() const { return content_hash_; }

 private:
  std::vector<source_document> documents_;
  std::map<std::string, size_t> index_;
  std::string content_hash_;
};

struct evaluation_record {
  std::string doc_id;
  std::string system_id;
  std::string summary;
  std::vector<std::string> references;
  std::map<std::string, double> human;

  bool operator==(const evaluation_record&) const = default;
};

// Summaries with optional references and human judgments, resolved against
// a corpus. Immutable after construction.
class evaluation_dataset {
 public:
  evaluation_dataset(std::shared_ptr<const corpus> docs,
                     std::vector<evaluation_record> records)
      : corpus_(std::move(docs)), records_(std::move(records)) {
    if (!corpus_) throw argument_error("dataset requires a corpus");
    if (records_.empty()) {
      throw argument_error("dataset must contain at least one record");
    }
    std::set<std::pair<std::string, std::string>> seen;
    for (size_t i = 0; i < records_.size(); ++i) {
      const auto& rec = records_[i];
      if (rec.system_id.empty()) {
        throw argument_error("record " + std::to_string(i + 1) +
                             " has an empty system_id");
      }
      if (rec.doc_id.empty()) {
        throw argument_error("record " + std::to_string(i + 1) +
                             " has an empty doc_id");
      }
      if (!corpus_->contains(rec.doc_id)) {
        throw integrity_error("record for system '" + rec.system_id +
                              "' references unknown doc_id '" + rec.doc_id +
                              "'");
      }
      for (const auto& [dim, value] : rec.human) {
        if (!std::isfinite(value)) {
          throw argument_error("record for system '" + rec.system_id +
                               "', document '" + rec.doc_id +
                               "' has non-finite human score for dimension '" +
                               dim + "'");
        }
      }
      if (!seen.emplace(rec.system_id, rec.doc_id).second) {
        throw argument_error("duplicate record for system '" + rec.system_id +
                             "', document '" + rec.doc_id + "'");
      }
      if (std::find(systems_.begin(), systems_.end(), rec.system_id) ==
          systems_.end()) {
        systems_.push_back(rec.system_id);
      }
    }
  }

  evaluation_dataset(corpus docs, std::vector<evaluation_record> records)
      : evaluation_dataset(std::make_shared<const corpus>(std::move(docs)),
                           std::move(records)) {}

  const std::vector<evaluation_record>& records() const { return records_; }

  // System ids in order of first appearance.
  const std::vector<std::string>& systems() const { return systems_; }

  const corpus& documents() const { return *corpus_; }

  const std::shared_ptr<const corpus>& corpus_ptr() const { return corpus_; }

  // Doc ids that appear in at least one record, in corpus order.
  std::vector<std::string> documents_with_records() const {
    std::set<std::string> used;
    for (const auto& rec : records_) used.insert(rec.doc_id);
    std::vector<std::string> out;
    for (const auto& doc : corpus_->documents()) {
      if (used.count(doc.doc_id) != 0) out.push_back(doc.doc_id);
    }
    return out;
  }

 private:
  std::shared_ptr<const corpus> corpus_;
  std::vector<evaluation_record> records_;
  std::vector<std::string> systems_;
};

enum class alteration_kind { rand, lead, tail };

// How altered references are built: sentence_count sentences taken at
// random, from the head, or from the tail of the source document.
struct alteration_mode {
  alteration_kind kind = alteration_kind::rand;
  int sentence_count = 3;
};

inline alteration_mode parse_alteration_mode(std::string_view name) {
  std::string lower = detail::to_lower_ascii(name);
  if (lower == "rand3") return {alteration_kind::rand, 3};
  if (lower == "lead3") return {alteration_kind::lead, 3};
  if (lower == "tail3") return {alteration_kind::tail, 3};
  throw argument_error("unknown alteration mode: '" + std::string(name) +
                       "' (expected rand3, lead3, or tail3)");
}

inline std::string to_string(const alteration_mode& mode) {
  const char* base = mode.kind == alteration_kind::rand   ? "rand"
                     : mode.kind == alteration_kind::lead ? "lead"
                                                          : "tail";
  return base + std::to_string(mode.sentence_count);
}

// Splits text on '.', '!', '?' followed by whitespace or end of input,
// keeping the delimiter. No abbreviation handling; empty segments dropped.
inline std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    bool terminal = c == '.' || c == '!' || c == '?';
    bool at_boundary =
        terminal && (i + 1 == text.size() || detail::is_space(text[i + 1]));
    if (at_boundary) {
      std::string_view sentence = detail::trim(text.substr(start, i + 1 - start));
      if (!sentence.empty()) out.emplace_back(sentence);
      start = i + 1;
    }
  }
  if (start < text.size()) {
    std::string_view rest = detail::trim(text.substr(start));
    if (!rest.empty()) out.emplace_back(rest);
  }
  return out;
}

namespace detail {

inline std::string build_altered_reference(const source_document& doc,
                                           const alteration_mode& mode,
                                           std::mt19937_64& rng) {
  std::vector<std::string> sentences = segment_sentences(doc.text);
  if (sentences.empty()) {
    throw argument_error("document '" + doc.doc_id +
                         "' has no sentences to alter references with");
  }
  size_t k = std::min<size_t>(static_cast<size_t>(mode.sentence_count),
                              sentences.size());
  std::vector<size_t> picked;
  switch (mode.kind) {
    case alteration_kind::lead:
      for (size_t i = 0; i < k; ++i) picked.push_back(i);
      break;
    case alteration_kind::tail:
      for (size_t i = sentences.size() - k; i < sentences.size(); ++i) {
        picked.push_back(i);
      }
      break;
    case alteration_kind::rand:
      picked = sample_without_replacement(sentences.size(), k, rng);
      std::sort(picked.begin(), picked.end());
      break;
  }
  std::string joined;
  for (size_t i = 0; i < picked.size(); ++i) {
    if (i > 0) joined += ' ';
    joined += sentences[picked[i]];
  }
  return joined;
}

}  // namespace detail

// Replaces the references of all records for a random ceil(fraction * n)
// subset of the documents that appear in records. Pure: equal inputs give
// bit-identical outputs; the input dataset is not modified.
inline evaluation_dataset alter_references(const evaluation_dataset& ds,
                                           const alteration_mode& mode,
                                           double fraction, uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw argument_error("alteration fraction must lie in [0, 1], got " +
                         detail::format_double(fraction));
  }
  if (mode.sentence_count < 1) {
    throw argument_error("alteration sentence_count must be >= 1");
  }
  std::vector<std::string> docs = ds.documents_with_records();
  size_t k = static_cast<size_t>(
      std::ceil(fraction * static_cast<double>(docs.size())));
  k = std::min(k, docs.size());

  std::mt19937_64 rng(seed);
  std::vector<size_t> chosen =
      detail::sample_without_replacement(docs.size(), k, rng);
  std::set<std::string> selected;
  for (size_t idx : chosen) selected.insert(docs[idx]);

  std::map<std::string, std::string> altered;
  for (const auto& doc_id : docs) {
    if (selected.count(doc_id) == 0) continue;
    altered[doc_id] = detail::build_altered_reference(
        ds.documents().document(doc_id), mode, rng);
  }

  std::vector<evaluation_record> records = ds.records();
  for (auto& rec : records) {
    auto it = altered.find(rec.doc_id);
    if (it != altered.end()) {
      rec.references = {it->second};
    }
  }
  return evaluation_dataset(ds.corpus_ptr(), std::move(records));
}

namespace detail {

inline nlohmann::json parse_jsonl_line(const std::string& path_label,
                                       size_t line_number,
                                       std::string_view line) {
  try {
    nlohmann::json value = nlohmann::json::parse(line);
    if (!value.is_object()) {
      throw parse_error(path_label + ":" + std::to_string(line_number) +
                        ": expected a JSON object");
    }
    return value;
  } catch (const nlohmann::json::exception& e) {
    throw parse_error(path_label + ":" + std::to_string(line_number) + ": " +
                      e.what());
  }
}

inline std::string require_string(const nlohmann::json& obj,
                                  const char* field,
                                  const std::string& path_label,
                                  size_t line_number) {
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw parse_error(path_label + ":" + std::to_string(line_number) +
                      ": missing field '" + field + "'");
  }
  if (!it->is_string()) {
    throw parse_error(path_label + ":" + std::to_string(line_number) +
                      ": field '" + field + "' must be a string");
  }
  return it->get<std::string>();
}

template <typename Fn>
void for_each_jsonl_line(const std::string& text, Fn&& fn) {
  size_t pos = 0;
  size_t line_number = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    bool last = eol == std::string::npos;
    std::string_view line(text.data() + pos,
                          (last ? text.size() : eol) - pos);
    ++line_number;
    if (!trim(line).empty()) fn(line_number, line);
    if (last) break;
    pos = eol + 1;
  }
}

}  // namespace detail

inline corpus corpus_from_jsonl(const std::string& text,
                                const std::string& path_label = "<corpus>") {
  std::vector<source_document> docs;
  detail::for_each_jsonl_line(text, [&](size_t lineno, std::string_view line) {
    nlohmann::json obj = detail::parse_jsonl_line(path_label, lineno, line);
    source_document doc;
    doc.doc_id = detail::require_string(obj, "doc_id", path_label, lineno);
    doc.text = detail::require_string(obj, "text", path_label, lineno);
    docs.push_back(std::move(doc));
  });
  if (docs.empty()) {
    throw parse_error(path_label + ": corpus file contains no documents");
  }
  return corpus(std::move(docs));
}

inline corpus load_corpus(const std::filesystem::path& path) {
  return corpus_from_jsonl(detail::read_text_file(path), path.string());
}

inline std::string corpus_to_jsonl(const corpus& docs) {
  std::string out;
  for (const auto& doc : docs.documents()) {
    nlohmann::json obj;
    obj["doc_id"] = doc.doc_id;
    obj["text"] = doc.text;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

inline void save_corpus(const std::filesystem::path& path, const corpus& docs) {
  detail::write_text_file_atomic(path, corpus_to_jsonl(docs));
}

inline evaluation_dataset dataset_from_jsonl(
    const std::string& text, std::shared_ptr<const corpus> docs,
    const std::string& path_label = "<dataset>") {
  std::vector<evaluation_record> records;
  detail::for_each_jsonl_line(text, [&](size_t lineno, std::string_view line) {
    nlohmann::json obj = detail::parse_jsonl_line(path_label, lineno, line);
    evaluation_record rec;
    rec.doc_id = detail::require_string(obj, "doc_id", path_label, lineno);
    rec.system_id =
        detail::require_string(obj, "system_id", path_label, lineno);
    rec.summary = detail::require_string(obj, "summary", path_label, lineno);
    if (auto it = obj.find("references"); it != obj.end()) {
      if (!it->is_array()) {
        throw parse_error(path_label + ":" + std::to_string(lineno) +
                          ": field 'references' must be an array of strings");
      }
      for (const auto& ref : *it) {
        if (!ref.is_string()) {
          throw parse_error(path_label + ":" + std::to_string(lineno) +
                            ": field 'references' must contain only strings");
        }
        rec.references.push_back(ref.get<std::string>());
      }
    }
    if (auto it = obj.find("human"); it != obj.end()) {
      if (!it->is_object()) {
        throw parse_error(path_label + ":" + std::to_string(lineno) +
                          ": field 'human' must be an object");
      }
      for (const auto& [dim, value] : it->items()) {
        if (!value.is_number()) {
          throw parse_error(path_label + ":" + std::to_string(lineno) +
                            ": human score '" + dim + "' must be a number");
        }
        rec.human[dim] = value.get<double>();
      }
    }
    records.push_back(std::move(rec));
  });
  if (records.empty()) {
    throw parse_error(path_label + ": dataset file contains no records");
  }
  return evaluation_dataset(std::move(docs), std::move(records));
}

inline evaluation_dataset load_dataset(const std::filesystem::path& path,
                                       std::shared_ptr<const corpus> docs) {
  return dataset_from_jsonl(detail::read_text_file(path), std::move(docs),
                            path.string());
}

inline std::string dataset_to_jsonl(const evaluation_dataset& ds) {
  std::string out;
  for (const auto& rec : ds.records()) {
    nlohmann::json obj;
    obj["doc_id"] = rec.doc_id;
    obj["system_id"] = rec.system_id;
    obj["summary"] = rec.summary;
    obj["references"] = rec.references;
    nlohmann::json human = nlohmann::json::object();
    for (const auto& [dim, value] : rec.human) human[dim] = value;
    obj["human"] = human;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

inline void save_dataset(const std::filesystem::path& path,
                         const evaluation_dataset& ds) {
  detail::write_text_file_atomic(path, dataset_to_jsonl(ds));
}

// Checks that an imported column and a dataset cover exactly the same
// (system, doc) pairs.
inline void validate_column_coverage(const named_column& column,
                                     const evaluation_dataset& ds) {
  std::set<record_key> dataset_keys;
  for (const auto& rec : ds.records()) {
    dataset_keys.insert(record_key{rec.system_id, rec.doc_id});
  }
  std::vector<std::string> problems;
  for (const auto& [key, _] : column.values) {
    if (dataset_keys.count(key) == 0) {
      problems.push_back("unknown pair (" + key.system_id + ", " + key.doc_id +
                         ")");
    }
  }
  for (const auto& key : dataset_keys) {
    if (column.values.count(key) == 0) {
      problems.push_back("missing pair (" + key.system_id + ", " + key.doc_id +
                         ")");
    }
  }
  if (!problems.empty()) {
    std::string message =
        "imported column '" + column.name + "' does not join the dataset:";
    size_t shown = std::min<size_t>(problems.size(), 8);
    for (size_t i = 0; i < shown; ++i) message += " " + problems[i] + ";";
    if (problems.size() > shown) {
      message += " and " + std::to_string(problems.size() - shown) + " more";
    }
    throw integrity_error(message);
  }
}

}  // namespace sumscore
