#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "pln/model.hpp"

namespace pln {

// Model container: magic "PLN1", version, header (dims, activation spec,
// q, alpha, seed), then matrices in row-major 64-bit little-endian floats.

inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "serializer assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("model stream truncated or corrupted");
  return v;
}

inline void put_string(std::ostream& os, const std::string& s) {
  put<std::uint64_t>(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& is) {
  auto len = get<std::uint64_t>(is);
  std::string s(len, '\0');
  is.read(s.data(), static_cast<std::streamsize>(len));
  if (!is) throw std::runtime_error("model stream truncated or corrupted");
  return s;
}

inline void put_matrix(std::ostream& os, const Eigen::MatrixXd& m) {
  put<std::int64_t>(os, m.rows());
  put<std::int64_t>(os, m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) put<double>(os, m(r, c));
}

inline Eigen::MatrixXd get_matrix(std::istream& is) {
  auto rows = get<std::int64_t>(is);
  auto cols = get<std::int64_t>(is);
  if (rows < 0 || cols < 0)
    throw std::runtime_error("model stream corrupted: negative dimension");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = get<double>(is);
  return m;
}

}  // namespace detail

inline void serialize(const PlnModel& model, std::ostream& os) {
  os.write("PLN1", 4);
  detail::put<std::uint32_t>(os, kModelVersion);
  detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(model.activation.kind));
  detail::put<double>(os, model.activation.a);
  detail::put<double>(os, model.activation.b);
  detail::put<std::int32_t>(os, model.q);
  detail::put<double>(os, model.alpha);
  detail::put<std::uint64_t>(os, model.seed);
  detail::put<std::uint64_t>(os, model.class_names.size());
  for (const auto& name : model.class_names) detail::put_string(os, name);
  detail::put_matrix(os, model.w_ls_star);
  detail::put<std::uint64_t>(os, model.layers.size());
  for (const auto& layer : model.layers) {
    detail::put<std::uint8_t>(os, layer.normalize_random ? 1 : 0);
    detail::put_matrix(os, layer.top_map);
    detail::put_matrix(os, layer.random_block);
    detail::put<std::uint8_t>(os, layer.optimized() ? 1 : 0);
    if (layer.optimized()) detail::put_matrix(os, layer.output_matrix);
  }
  if (!os) throw std::runtime_error("serialize: write failure");
}

inline PlnModel deserialize(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "PLN1", 4) != 0)
    throw std::runtime_error("not a PLN model file (bad magic)");
  auto version = detail::get<std::uint32_t>(is);
  if (version != kModelVersion)
    throw std::runtime_error("unsupported model version " +
                             std::to_string(version));
  PlnModel model;
  auto kind = detail::get<std::uint32_t>(is);
  if (kind > 2) throw std::runtime_error("model stream corrupted: activation");
  model.activation.kind = static_cast<ActivationKind>(kind);
  model.activation.a = detail::get<double>(is);
  model.activation.b = detail::get<double>(is);
  model.q = detail::get<std::int32_t>(is);
  model.alpha = detail::get<double>(is);
  model.seed = detail::get<std::uint64_t>(is);
  auto n_names = detail::get<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n_names; ++i)
    model.class_names.push_back(detail::get_string(is));
  model.w_ls_star = detail::get_matrix(is);
  auto n_layers = detail::get<std::uint64_t>(is);
  for (std::uint64_t i = 0; i < n_layers; ++i) {
    PlnLayer layer;
    layer.normalize_random = detail::get<std::uint8_t>(is) != 0;
    layer.top_map = detail::get_matrix(is);
    layer.random_block = detail::get_matrix(is);
    if (detail::get<std::uint8_t>(is) != 0)
      layer.output_matrix = detail::get_matrix(is);
    model.layers.push_back(std::move(layer));
  }
  return model;
}

inline void save_model(const PlnModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_model: cannot open " + path);
  serialize(model, out);
}

inline PlnModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_model: cannot open " + path);
  return deserialize(in);
}

// Human-readable structure dump: dimensions and norms only.
inline std::string describe(const PlnModel& model) {
  std::ostringstream os;
  os << "activation: " << model.activation.to_string() << "\n"
     << "input_dim: " << model.input_dim() << "\n"
     << "target_dim: " << model.target_dim() << "\n"
     << "q: " << model.q << "\n"
     << "alpha: " << model.alpha << "\n"
     << "seed: " << model.seed << "\n"
     << "w_ls_star_frobenius: " << model.w_ls_star.norm() << "\n"
     << "layers: " << model.layers.size() << "\n";
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const auto& l = model.layers[i];
    os << "  layer " << i << ": n_nodes=" << l.n_nodes()
       << " random=" << l.random_block.rows()
       << " output_norm="
       << (l.optimized() ? std::to_string(l.output_matrix.norm()) : "-")
       << "\n";
  }
  return os.str();
}

}  // namespace pln
