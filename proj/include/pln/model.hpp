#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "pln/activations.hpp"

namespace pln {

inline Eigen::MatrixXd uniform_matrix(Eigen::Index rows, Eigen::Index cols,
                                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  // row-major draw order, so appending rows continues the stream
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

// One hidden layer: the top 2Q rows of its weight matrix are V_Q times the
// previous optimal map, the remaining rows are a random instance.
struct PlnLayer {
  Eigen::MatrixXd top_map;       // 2Q x prev_dim
  Eigen::MatrixXd random_block;  // (n - 2Q) x prev_dim
  Eigen::MatrixXd output_matrix; // Q x n, empty until optimized
  bool normalize_random = true;

  Eigen::Index n_nodes() const {
    return top_map.rows() + random_block.rows();
  }
  Eigen::Index prev_dim() const { return top_map.cols(); }
  bool optimized() const { return output_matrix.size() > 0; }

  Eigen::MatrixXd weight_matrix() const {
    Eigen::MatrixXd W(n_nodes(), prev_dim());
    W.topRows(top_map.rows()) = top_map;
    W.bottomRows(random_block.rows()) = random_block;
    return W;
  }
};

inline PlnLayer build_layer(const Eigen::MatrixXd& prev_map,
                            Eigen::Index n_nodes, std::mt19937_64& rng,
                            bool normalize_random = true) {
  const Eigen::Index Q = prev_map.rows();
  if (n_nodes < 2 * Q)
    throw std::invalid_argument("build_layer: need n_nodes >= 2Q");
  PlnLayer layer;
  layer.top_map = v_apply(prev_map);
  layer.random_block = uniform_matrix(n_nodes - 2 * Q, prev_map.cols(), rng);
  layer.normalize_random = normalize_random;
  return layer;
}

inline PlnLayer build_layer(const Eigen::MatrixXd& prev_map,
                            Eigen::Index n_nodes, std::uint64_t rng_seed,
                            bool normalize_random = true) {
  std::mt19937_64 rng(rng_seed);
  return build_layer(prev_map, n_nodes, rng, normalize_random);
}

// Appends delta random rows; the existing rows are unchanged and the
// output matrix is invalidated.
inline void extend_layer(PlnLayer& layer, Eigen::Index delta,
                         std::mt19937_64& rng) {
  if (delta < 1) throw std::invalid_argument("extend_layer: delta must be >= 1");
  Eigen::MatrixXd fresh = uniform_matrix(delta, layer.prev_dim(), rng);
  Eigen::MatrixXd grown(layer.random_block.rows() + delta, layer.prev_dim());
  grown.topRows(layer.random_block.rows()) = layer.random_block;
  grown.bottomRows(delta) = fresh;
  layer.random_block = std::move(grown);
  layer.output_matrix.resize(0, 0);
}

inline void extend_layer(PlnLayer& layer, Eigen::Index delta,
                         std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  extend_layer(layer, delta, rng);
}

struct ForwardTrace {
  std::vector<Eigen::MatrixXd> pre_activations;   // z_i, one per layer
  std::vector<Eigen::MatrixXd> post_activations;  // y_i
  std::vector<Eigen::MatrixXd> partials;          // s_i
};

struct PlnModel {
  ActivationSpec activation;
  Eigen::MatrixXd w_ls_star;  // Q x P
  std::vector<PlnLayer> layers;
  int q = 2;
  double alpha = 2.0;
  std::uint64_t seed = 0;
  std::vector<std::string> class_names;

  Eigen::Index input_dim() const { return w_ls_star.cols(); }
  Eigen::Index target_dim() const { return w_ls_star.rows(); }
};

namespace detail {

// Per-sample unit l2-norm scaling of the random-node sub-vector; the top
// 2Q entries carry the PP-protected signal and stay untouched. Zero
// columns are left as zero.
inline void normalize_random_rows(Eigen::MatrixXd& y, Eigen::Index top_rows) {
  const Eigen::Index nr = y.rows() - top_rows;
  if (nr <= 0) return;
  auto block = y.bottomRows(nr);
  for (Eigen::Index j = 0; j < y.cols(); ++j) {
    const double norm = block.col(j).norm();
    if (norm > 0.0) block.col(j) /= norm;
  }
}

}  // namespace detail

// Computes y_i for one layer given the previous prediction s and the
// previous layer output (or x for the first layer).
inline Eigen::MatrixXd layer_output(const ActivationSpec& act,
                                    const PlnLayer& layer,
                                    const Eigen::MatrixXd& prev_output,
                                    Eigen::MatrixXd* pre_activation = nullptr) {
  Eigen::MatrixXd z(layer.n_nodes(), prev_output.cols());
  z.topRows(layer.top_map.rows()) = layer.top_map * prev_output;
  if (layer.random_block.rows() > 0)
    z.bottomRows(layer.random_block.rows()) = layer.random_block * prev_output;
  Eigen::MatrixXd y = apply_activation(act, z);
  if (layer.normalize_random)
    detail::normalize_random_rows(y, layer.top_map.rows());
  if (pre_activation) *pre_activation = std::move(z);
  return y;
}

struct ForwardResult {
  Eigen::MatrixXd predictions;  // Q x J
  ForwardTrace trace;
};

// depth < 0 means full depth; depth = 0 is the linear baseline.
inline ForwardResult forward(const PlnModel& model, const Eigen::MatrixXd& X,
                             int depth = -1, bool want_trace = false) {
  if (X.rows() != model.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  const int max_depth = static_cast<int>(model.layers.size());
  if (depth < 0) depth = max_depth;
  if (depth > max_depth)
    throw std::invalid_argument("forward: depth exceeds layer count");

  ForwardResult out;
  Eigen::MatrixXd s = model.w_ls_star * X;
  if (depth == 0) {
    out.predictions = std::move(s);
    return out;
  }
  Eigen::MatrixXd y = X;
  for (int i = 0; i < depth; ++i) {
    const PlnLayer& layer = model.layers[static_cast<std::size_t>(i)];
    if (!layer.optimized())
      throw std::invalid_argument("forward: layer not optimized");
    Eigen::MatrixXd z;
    y = layer_output(model.activation, layer, y,
                     want_trace ? &z : nullptr);
    if (want_trace) {
      out.trace.partials.push_back(s);
      out.trace.pre_activations.push_back(std::move(z));
      out.trace.post_activations.push_back(y);
    }
    s = layer.output_matrix * y;
  }
  out.predictions = std::move(s);
  return out;
}

// Learned parameters only: the linear baseline plus every output matrix.
inline Eigen::Index count_parameters(const PlnModel& model) {
  Eigen::Index count = model.w_ls_star.size();
  for (const auto& layer : model.layers)
    count += model.target_dim() * layer.n_nodes();
  return count;
}

}  // namespace pln
