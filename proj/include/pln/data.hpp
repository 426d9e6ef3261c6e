#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pln {

enum class TaskKind { Classification, Regression };

struct Dataset {
  Eigen::MatrixXd X;  // P x J, one column per sample
  Eigen::MatrixXd T;  // Q x J; one-hot columns for classification
  TaskKind task = TaskKind::Classification;
  std::vector<std::string> class_names;  // label -> index map, by position

  Eigen::Index input_dim() const { return X.rows(); }
  Eigen::Index target_dim() const { return T.rows(); }
  Eigen::Index size() const { return X.cols(); }
};

struct CsvSchema {
  char delimiter = ',';
  // Classification: index of the label column. Regression: number of
  // trailing target columns.
  int label_column = -1;
  int target_columns = 0;
  TaskKind task = TaskKind::Classification;
};

namespace detail {

inline Eigen::MatrixXd one_hot(const std::vector<std::string>& labels,
                               std::vector<std::string>& class_names) {
  std::map<std::string, Eigen::Index> index;
  if (class_names.empty()) {
    for (const auto& l : labels) index.emplace(l, 0);
    Eigen::Index next = 0;
    for (auto& [k, v] : index) v = next++;
    class_names.resize(index.size());
    for (const auto& [k, v] : index)
      class_names[static_cast<std::size_t>(v)] = k;
  } else {
    for (std::size_t i = 0; i < class_names.size(); ++i)
      index.emplace(class_names[i], static_cast<Eigen::Index>(i));
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(
      static_cast<Eigen::Index>(index.size()),
      static_cast<Eigen::Index>(labels.size()));
  for (std::size_t j = 0; j < labels.size(); ++j) {
    auto it = index.find(labels[j]);
    if (it == index.end())
      throw std::runtime_error("one_hot: unknown label '" + labels[j] + "'");
    T(it->second, static_cast<Eigen::Index>(j)) = 1.0;
  }
  return T;
}

inline double parse_number(const std::string& tok, const std::string& where) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("non-numeric value '" + tok + "' in " + where);
  }
}

}  // namespace detail

// Rows are samples; columns become features after transposition into the
// P x J layout. Labels may be arbitrary strings; the label -> index map is
// sorted and stable.
inline Dataset load_csv(const std::string& path, const CsvSchema& schema,
                        std::vector<std::string> fixed_class_names = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);

  std::vector<std::vector<double>> features;
  std::vector<std::string> labels;
  std::vector<std::vector<double>> targets;
  std::string line;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> toks;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, schema.delimiter)) toks.push_back(tok);
    if (width == 0) width = toks.size();
    if (toks.size() != width)
      throw std::runtime_error("load_csv: ragged row in " + path);

    std::vector<double> row;
    if (schema.task == TaskKind::Classification) {
      int lc = schema.label_column < 0
                   ? static_cast<int>(toks.size()) - 1
                   : schema.label_column;
      if (lc >= static_cast<int>(toks.size()))
        throw std::runtime_error("load_csv: label column out of range");
      labels.push_back(toks[static_cast<std::size_t>(lc)]);
      for (int i = 0; i < static_cast<int>(toks.size()); ++i)
        if (i != lc)
          row.push_back(detail::parse_number(toks[static_cast<std::size_t>(i)],
                                             path));
      features.push_back(std::move(row));
    } else {
      int tc = schema.target_columns > 0 ? schema.target_columns : 1;
      if (tc >= static_cast<int>(toks.size()))
        throw std::runtime_error("load_csv: too many target columns");
      std::size_t nf = toks.size() - static_cast<std::size_t>(tc);
      std::vector<double> tg;
      for (std::size_t i = 0; i < nf; ++i)
        row.push_back(detail::parse_number(toks[i], path));
      for (std::size_t i = nf; i < toks.size(); ++i)
        tg.push_back(detail::parse_number(toks[i], path));
      features.push_back(std::move(row));
      targets.push_back(std::move(tg));
    }
  }
  if (features.empty())
    throw std::runtime_error("load_csv: no samples in " + path);

  Dataset d;
  d.task = schema.task;
  const Eigen::Index P = static_cast<Eigen::Index>(features[0].size());
  const Eigen::Index J = static_cast<Eigen::Index>(features.size());
  d.X.resize(P, J);
  for (Eigen::Index j = 0; j < J; ++j)
    for (Eigen::Index i = 0; i < P; ++i)
      d.X(i, j) = features[static_cast<std::size_t>(j)]
                          [static_cast<std::size_t>(i)];
  if (schema.task == TaskKind::Classification) {
    d.class_names = std::move(fixed_class_names);
    d.T = detail::one_hot(labels, d.class_names);
  } else {
    const Eigen::Index Q = static_cast<Eigen::Index>(targets[0].size());
    d.T.resize(Q, J);
    for (Eigen::Index j = 0; j < J; ++j)
      for (Eigen::Index i = 0; i < Q; ++i)
        d.T(i, j) = targets[static_cast<std::size_t>(j)]
                           [static_cast<std::size_t>(i)];
  }
  return d;
}

// Sparse "label index:value ..." format with 1-based feature indices.
inline Dataset load_libsvm(const std::string& path, TaskKind task,
                           Eigen::Index n_features = 0,
                           std::vector<std::string> fixed_class_names = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_libsvm: cannot open " + path);

  std::vector<std::vector<std::pair<Eigen::Index, double>>> rows;
  std::vector<std::string> labels;
  std::vector<double> reg_targets;
  Eigen::Index max_index = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    ss >> tok;
    if (task == TaskKind::Classification)
      labels.push_back(tok);
    else
      reg_targets.push_back(detail::parse_number(tok, path));
    std::vector<std::pair<Eigen::Index, double>> row;
    while (ss >> tok) {
      std::size_t colon = tok.find(':');
      if (colon == std::string::npos)
        throw std::runtime_error("load_libsvm: malformed entry '" + tok + "'");
      Eigen::Index idx = static_cast<Eigen::Index>(
          detail::parse_number(tok.substr(0, colon), path));
      double val = detail::parse_number(tok.substr(colon + 1), path);
      if (idx < 1)
        throw std::runtime_error("load_libsvm: indices are 1-based");
      for (const auto& [i, v] : row)
        if (i == idx)
          throw std::runtime_error("load_libsvm: duplicate feature index");
      if (n_features > 0 && idx > n_features)
        throw std::runtime_error("load_libsvm: index exceeds declared range");
      max_index = std::max(max_index, idx);
      row.emplace_back(idx, val);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("load_libsvm: no samples");

  const Eigen::Index P = n_features > 0 ? n_features : max_index;
  const Eigen::Index J = static_cast<Eigen::Index>(rows.size());
  Dataset d;
  d.task = task;
  d.X = Eigen::MatrixXd::Zero(P, J);
  for (Eigen::Index j = 0; j < J; ++j)
    for (const auto& [idx, val] : rows[static_cast<std::size_t>(j)])
      d.X(idx - 1, j) = val;
  if (task == TaskKind::Classification) {
    d.class_names = std::move(fixed_class_names);
    d.T = detail::one_hot(labels, d.class_names);
  } else {
    d.T.resize(1, J);
    for (Eigen::Index j = 0; j < J; ++j)
      d.T(0, j) = reg_targets[static_cast<std::size_t>(j)];
  }
  return d;
}

inline Dataset select_columns(const Dataset& d,
                              const std::vector<Eigen::Index>& idx) {
  Dataset out;
  out.task = d.task;
  out.class_names = d.class_names;
  out.X.resize(d.X.rows(), static_cast<Eigen::Index>(idx.size()));
  out.T.resize(d.T.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t j = 0; j < idx.size(); ++j) {
    out.X.col(static_cast<Eigen::Index>(j)) = d.X.col(idx[j]);
    out.T.col(static_cast<Eigen::Index>(j)) = d.T.col(idx[j]);
  }
  return out;
}

// Seeded shuffle followed by a disjoint split.
inline std::pair<Dataset, Dataset> partition(const Dataset& d,
                                             Eigen::Index train_count,
                                             Eigen::Index test_count,
                                             std::uint64_t seed) {
  if (train_count + test_count > d.size())
    throw std::invalid_argument("partition: counts exceed dataset size");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  std::vector<Eigen::Index> train_idx(idx.begin(), idx.begin() + train_count);
  std::vector<Eigen::Index> test_idx(idx.begin() + train_count,
                                     idx.begin() + train_count + test_count);
  return {select_columns(d, train_idx), select_columns(d, test_idx)};
}

}  // namespace pln
