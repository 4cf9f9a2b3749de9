// Tabular view used between extraction and learning: named columns, rows of
// optionally-missing values, one label per row. Columns normally carry one of
// the thirteen extracted features; tests may add free-named columns.
#pragma once

#include <istream>
#include <ostream>
#include <sstream>

#include "features.hpp"

namespace expertise {

struct Dataset {
  std::vector<std::string> column_names;
  std::vector<std::optional<FeatureId>> column_ids;  // parallel to column_names
  std::vector<std::string> session_ids;
  std::vector<Label> labels;
  std::vector<std::vector<std::optional<double>>> rows;

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return column_names.size(); }

  std::optional<std::size_t> column_index(std::string_view name) const {
    for (std::size_t c = 0; c < column_names.size(); ++c)
      if (column_names[c] == name) return c;
    return std::nullopt;
  }

  const std::optional<double>& value(std::size_t r, std::size_t c) const { return rows[r][c]; }

  void add_column(const std::string& name, const std::vector<std::optional<double>>& values,
                  std::optional<FeatureId> id = std::nullopt) {
    if (values.size() != rows.size() && !rows.empty())
      throw Error("add_column: value count does not match row count");
    if (column_index(name)) throw Error("add_column: duplicate column '" + name + "'");
    column_names.push_back(name);
    column_ids.push_back(id);
    if (rows.empty() && !values.empty()) {
      rows.resize(values.size());
      session_ids.resize(values.size());
      labels.resize(values.size(), Label::Unlabeled);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r].push_back(values[r]);
  }

  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(3, 0);
    for (Label l : labels) ++counts[static_cast<std::size_t>(l)];
    return counts;
  }
};

// Every vector must carry the same feature domain; row order is input order.
inline Dataset dataset_from_vectors(const std::vector<FeatureVector>& vectors) {
  if (vectors.empty()) throw Error("dataset_from_vectors: no rows");
  Dataset d;
  std::vector<FeatureId> domain = vectors.front().domain();
  if (domain.empty()) throw Error("dataset_from_vectors: empty feature domain");
  for (FeatureId f : domain) {
    d.column_names.push_back(feature_name(f));
    d.column_ids.push_back(f);
  }
  for (const FeatureVector& v : vectors) {
    if (v.domain() != domain)
      throw Error("dataset_from_vectors: inconsistent feature domains across rows");
    std::vector<std::optional<double>> row;
    row.reserve(domain.size());
    for (FeatureId f : domain) row.push_back(v.get(f));
    d.rows.push_back(std::move(row));
    d.session_ids.push_back(v.session_id);
    d.labels.push_back(v.label);
  }
  return d;
}

inline FeatureVector row_to_vector(const Dataset& d, std::size_t r) {
  FeatureVector v;
  v.session_id = d.session_ids[r];
  v.label = d.labels[r];
  for (std::size_t c = 0; c < d.n_cols(); ++c) {
    if (!d.column_ids[c])
      throw Error("row_to_vector: column '" + d.column_names[c] + "' is not a known feature");
    if (d.rows[r][c])
      v.set(*d.column_ids[c], *d.rows[r][c]);
    else
      v.set_missing(*d.column_ids[c]);
  }
  return v;
}

inline Dataset select_columns(const Dataset& d, const std::vector<std::size_t>& cols) {
  Dataset out;
  out.session_ids = d.session_ids;
  out.labels = d.labels;
  for (std::size_t c : cols) {
    out.column_names.push_back(d.column_names[c]);
    out.column_ids.push_back(d.column_ids[c]);
  }
  out.rows.reserve(d.n_rows());
  for (const auto& row : d.rows) {
    std::vector<std::optional<double>> r;
    r.reserve(cols.size());
    for (std::size_t c : cols) r.push_back(row[c]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

inline Dataset select_rows(const Dataset& d, const std::vector<std::size_t>& idx) {
  Dataset out;
  out.column_names = d.column_names;
  out.column_ids = d.column_ids;
  for (std::size_t r : idx) {
    out.rows.push_back(d.rows[r]);
    out.session_ids.push_back(d.session_ids[r]);
    out.labels.push_back(d.labels[r]);
  }
  return out;
}

inline Dataset project_dataset(const Dataset& d, const FeatureSet& set) {
  std::vector<std::size_t> cols;
  for (FeatureId f : set.members()) {
    if (auto c = d.column_index(feature_name(f))) cols.push_back(*c);
  }
  if (cols.empty()) throw Error("projection leaves no columns: " + set.name());
  return select_columns(d, cols);
}

// --- feature-matrix file format ---
// Comment lines start with '#'; then a header of session_id,label and feature
// names; one row per session with '?' for missing values.

inline void write_matrix_csv(std::ostream& out, const Dataset& d,
                             const std::vector<std::string>& comments = {}) {
  for (const auto& c : comments) out << "# " << c << "\n";
  out << "session_id,label";
  for (const auto& name : d.column_names) {
    if (name.find(',') != std::string::npos || name.find('\n') != std::string::npos)
      throw Error("column name not representable in matrix file: '" + name + "'");
    out << "," << name;
  }
  out << "\n";
  for (std::size_t r = 0; r < d.n_rows(); ++r) {
    if (d.session_ids[r].find(',') != std::string::npos ||
        d.session_ids[r].find('\n') != std::string::npos)
      throw Error("session_id not representable in matrix file: '" + d.session_ids[r] + "'");
    out << d.session_ids[r] << "," << label_name(d.labels[r]);
    for (std::size_t c = 0; c < d.n_cols(); ++c) {
      out << ",";
      if (d.rows[r][c])
        out << format_double(*d.rows[r][c]);
      else
        out << "?";
    }
    out << "\n";
  }
}

inline Dataset read_matrix_csv(std::istream& in) {
  Dataset d;
  std::string line;
  bool saw_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (!saw_header) {
      if (fields.size() < 3 || fields[0] != "session_id" || fields[1] != "label")
        throw ParseError("line " + std::to_string(line_no) +
                         ": matrix header must start with session_id,label");
      for (std::size_t c = 2; c < fields.size(); ++c) {
        d.column_names.push_back(fields[c]);
        std::optional<FeatureId> id;
        try {
          id = feature_from_name(fields[c]);
        } catch (const ParseError&) {
          // free-named column: usable for selection work but not prediction
        }
        d.column_ids.push_back(id);
      }
      saw_header = true;
      continue;
    }
    if (fields.size() != d.n_cols() + 2)
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(d.n_cols() + 2) + " fields, got " +
                       std::to_string(fields.size()));
    d.session_ids.push_back(fields[0]);
    d.labels.push_back(parse_label(fields[1]));
    std::vector<std::optional<double>> row;
    row.reserve(d.n_cols());
    for (std::size_t c = 2; c < fields.size(); ++c) {
      if (fields[c] == "?")
        row.emplace_back(std::nullopt);
      else
        row.emplace_back(parse_double(fields[c]));
    }
    d.rows.push_back(std::move(row));
  }
  if (!saw_header || d.rows.empty()) throw ParseError("empty feature matrix");
  return d;
}

inline Dataset extract_dataset(const Corpus& corpus, const ExtractionConfig& config,
                               std::vector<std::string>* warnings = nullptr) {
  std::vector<FeatureVector> vectors;
  vectors.reserve(corpus.sessions.size());
  for (const Session& s : corpus.sessions) {
    if (!s.has_interaction()) {
      if (warnings)
        warnings->push_back("session '" + s.session_id + "' skipped: no user interaction");
      continue;
    }
    vectors.push_back(extract_features(s, config, warnings));
  }
  if (vectors.empty()) throw Error("no extractable sessions in corpus '" + corpus.name + "'");
  return dataset_from_vectors(vectors);
}

}  // namespace expertise
