#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sumscore/detail/util.hpp"
#include "sumscore/errors.hpp"

namespace sumscore {

// Identifies one scored summary: which system produced it for which document.
struct record_key {
  std::string system_id;
  std::string doc_id;

  auto operator<=>(const record_key&) const = default;
};

// One metric's scores over a set of records, keyed for deterministic
// iteration.
using score_column = std::map<record_key, double>;

struct named_column {
  std::string name;
  score_column values;
};

// Scores from several metrics over the same evaluation run. Metrics may
// cover different record sets; alignment is checked where an operation
// requires it.
class score_matrix {
 public:
  void add_column(named_column column) {
    if (column.name.empty()) {
      throw argument_error("score column name must not be empty");
    }
    if (columns_.count(column.name) != 0) {
      throw argument_error("duplicate score column: " + column.name);
    }
    columns_[column.name] = std::move(column.values);
  }

  bool has_column(const std::string& name) const {
    return columns_.count(name) != 0;
  }

  const score_column& column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) {
      throw argument_error("unknown score column: " + name);
    }
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& [name, _] : columns_) out.push_back(name);
    return out;
  }

  const std::map<std::string, score_column>& columns() const {
    return columns_;
  }

  bool empty() const { return columns_.empty(); }

 private:
  std::map<std::string, score_column> columns_;
};

inline bool same_grid(const score_column& a, const score_column& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.begin();
  auto ib = b.begin();
  for (; ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) return false;
  }
  return true;
}

// Serializes a matrix as CSV with one row per (metric, record) cell.
// Leading '#' lines carry free-form provenance comments.
inline std::string scores_to_csv(const score_matrix& matrix,
                                 const std::vector<std::string>& comments = {}) {
  std::string out;
  for (const auto& line : comments) {
    out += "# " + line + "\n";
  }
  out += "metric,system_id,doc_id,score\n";
  for (const auto& [metric, column] : matrix.columns()) {
    for (const auto& [key, value] : column) {
      out += detail::csv_escape(metric);
      out += ',';
      out += detail::csv_escape(key.system_id);
      out += ',';
      out += detail::csv_escape(key.doc_id);
      out += ',';
      out += detail::format_double(value);
      out += '\n';
    }
  }
  return out;
}

inline void write_scores_csv(const std::filesystem::path& path,
                             const score_matrix& matrix,
                             const std::vector<std::string>& comments = {}) {
  detail::write_text_file_atomic(path, scores_to_csv(matrix, comments));
}

inline score_matrix scores_from_csv(const std::string& text) {
  std::string body;
  body.reserve(text.size());
  size_t pos = 0;
  while (pos < text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    std::string_view trimmed = detail::trim(line);
    if (trimmed.empty() || trimmed[0] != '#') {
      body.append(line);
      body.push_back('\n');
    }
    pos = eol + 1;
  }
  auto rows = detail::parse_csv(body);
  if (rows.empty()) throw parse_error("scores CSV is empty");
  const std::vector<std::string> header = {"metric", "system_id", "doc_id",
                                           "score"};
  if (rows[0] != header) {
    throw parse_error(
        "scores CSV must start with header metric,system_id,doc_id,score");
  }
  std::map<std::string, score_column> columns;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 4) {
      throw parse_error("scores CSV row " + std::to_string(i + 1) +
                        " has " + std::to_string(row.size()) +
                        " fields, expected 4");
    }
    record_key key{row[1], row[2]};
    double value = detail::parse_double(row[3]);
    auto [_, inserted] = columns[row[0]].emplace(key, value);
    if (!inserted) {
      throw parse_error("duplicate score for metric '" + row[0] +
                        "', system '" + row[1] + "', document '" + row[2] +
                        "'");
    }
  }
  score_matrix matrix;
  for (auto& [name, column] : columns) {
    matrix.add_column(named_column{name, std::move(column)});
  }
  return matrix;
}

inline score_matrix read_scores_csv(const std::filesystem::path& path) {
  return scores_from_csv(detail::read_text_file(path));
}

// Reads a three-column CSV (system_id,doc_id,score) of externally computed
// scores and labels it with the given metric name.
inline named_column import_scores_from_csv(const std::string& text,
                                           const std::string& metric_name) {
  if (metric_name.empty()) {
    throw argument_error("imported metric name must not be empty");
  }
  auto rows = detail::parse_csv(text);
  if (rows.empty()) throw parse_error("imported scores CSV is empty");
  const std::vector<std::string> header = {"system_id", "doc_id", "score"};
  if (rows[0] != header) {
    throw parse_error(
        "imported scores CSV must start with header system_id,doc_id,score");
  }
  named_column out;
  out.name = metric_name;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 3) {
      throw parse_error("imported scores CSV row " + std::to_string(i + 1) +
                        " has " + std::to_string(row.size()) +
                        " fields, expected 3");
    }
    record_key key{row[0], row[1]};
    double value = detail::parse_double(row[2]);
    auto [_, inserted] = out.values.emplace(key, value);
    if (!inserted) {
      throw parse_error("duplicate imported score for system '" + row[0] +
                        "', document '" + row[1] + "'");
    }
  }
  if (out.values.empty()) {
    throw parse_error("imported scores CSV has no data rows");
  }
  return out;
}

inline named_column import_scores_csv(const std::filesystem::path& path,
                                      const std::string& metric_name) {
  return import_scores_from_csv(detail::read_text_file(path), metric_name);
}

}  // namespace sumscore
