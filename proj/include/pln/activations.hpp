#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace pln {

// Scalar nonlinearities that admit a pair of linear maps (V, U) with
// U g(V x) = x for every x. Three kinds are supported: ReLU, leaky ReLU
// with slope a in (0,1), and a generalized ReLU with slopes b (x >= 0)
// and a (x < 0), 0 < a < b.
enum class ActivationKind { ReLU, LReLU, GenReLU };

struct ActivationSpec {
  ActivationKind kind = ActivationKind::ReLU;
  double a = 0.0;
  double b = 1.0;

  static ActivationSpec relu() { return {ActivationKind::ReLU, 0.0, 1.0}; }

  static ActivationSpec lrelu(double a = 0.01) {
    if (!(a > 0.0 && a < 1.0))
      throw std::invalid_argument("lrelu: slope a must satisfy 0 < a < 1");
    return {ActivationKind::LReLU, a, 1.0};
  }

  static ActivationSpec genrelu(double a = 0.1, double b = 1.0) {
    if (!(a > 0.0 && a < b))
      throw std::invalid_argument("genrelu: slopes must satisfy 0 < a < b");
    return {ActivationKind::GenReLU, a, b};
  }

  double apply(double z) const {
    switch (kind) {
      case ActivationKind::ReLU: return z >= 0.0 ? z : 0.0;
      case ActivationKind::LReLU: return z >= 0.0 ? z : a * z;
      case ActivationKind::GenReLU: return z >= 0.0 ? b * z : a * z;
    }
    return z;
  }

  // Scale of the reconstruction map U = c [I, -I].
  double u_scale() const {
    switch (kind) {
      case ActivationKind::ReLU: return 1.0;
      case ActivationKind::LReLU: return 1.0 / (1.0 + a);
      case ActivationKind::GenReLU: return 1.0 / (a + b);
    }
    return 1.0;
  }

  std::string to_string() const {
    switch (kind) {
      case ActivationKind::ReLU: return "relu";
      case ActivationKind::LReLU: return "lrelu:a=" + std::to_string(a);
      case ActivationKind::GenReLU:
        return "genrelu:a=" + std::to_string(a) + ",b=" + std::to_string(b);
    }
    return "relu";
  }
};

inline Eigen::VectorXd apply_activation(const ActivationSpec& spec,
                                        const Eigen::VectorXd& z) {
  return z.unaryExpr([&spec](double v) { return spec.apply(v); });
}

inline Eigen::MatrixXd apply_activation(const ActivationSpec& spec,
                                        const Eigen::MatrixXd& z) {
  return z.unaryExpr([&spec](double v) { return spec.apply(v); });
}

// Structured stand-in for V_N = [I; -I]. Stacks x over -x.
inline Eigen::MatrixXd v_apply(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd out(2 * x.rows(), x.cols());
  out.topRows(x.rows()) = x;
  out.bottomRows(x.rows()) = -x;
  return out;
}

// Structured stand-in for U_N = c [I, -I]; y has 2N rows.
inline Eigen::MatrixXd u_apply(const ActivationSpec& spec,
                               const Eigen::MatrixXd& y) {
  if (y.rows() % 2 != 0)
    throw std::invalid_argument("u_apply: input must have 2N rows");
  const Eigen::Index n = y.rows() / 2;
  return spec.u_scale() * (y.topRows(n) - y.bottomRows(n));
}

struct PPTransformPair {
  Eigen::MatrixXd V;  // 2N x N
  Eigen::MatrixXd U;  // N x 2N
  Eigen::Index N = 0;
};

// Dense (V_N, U_N) for small N; hot paths use v_apply / u_apply instead.
inline PPTransformPair pp_pair(const ActivationSpec& spec, Eigen::Index N) {
  if (N < 1) throw std::invalid_argument("pp_pair: N must be positive");
  PPTransformPair p;
  p.N = N;
  p.V.resize(2 * N, N);
  p.V.topRows(N) = Eigen::MatrixXd::Identity(N, N);
  p.V.bottomRows(N) = -Eigen::MatrixXd::Identity(N, N);
  p.U.resize(N, 2 * N);
  p.U.leftCols(N) = spec.u_scale() * Eigen::MatrixXd::Identity(N, N);
  p.U.rightCols(N) = -spec.u_scale() * Eigen::MatrixXd::Identity(N, N);
  return p;
}

// Max residual ||U g(V gamma) - gamma||_inf over random trial vectors.
inline double verify_pp(const ActivationSpec& spec, Eigen::Index N,
                        int trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("verify_pp: trials must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1e3, 1e3);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd gamma(N);
    for (Eigen::Index i = 0; i < N; ++i) gamma(i) = dist(rng);
    Eigen::VectorXd rec =
        u_apply(spec, apply_activation(spec, v_apply(gamma)));
    worst = std::max(worst, (rec - gamma).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

// Parses "relu", "lrelu:a=0.01", "genrelu:a=0.1,b=1.0".
inline ActivationSpec parse_activation(const std::string& text) {
  auto parse_params = [](const std::string& s) {
    std::unordered_map<std::string, double> kv;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t eq = s.find('=', pos);
      if (eq == std::string::npos)
        throw std::invalid_argument("activation: malformed parameter list");
      std::size_t comma = s.find(',', eq);
      std::string key = s.substr(pos, eq - pos);
      std::string val = s.substr(eq + 1, (comma == std::string::npos
                                              ? s.size()
                                              : comma) - eq - 1);
      kv[key] = std::stod(val);
      pos = comma == std::string::npos ? s.size() : comma + 1;
    }
    return kv;
  };

  std::size_t colon = text.find(':');
  std::string name = text.substr(0, colon);
  std::string rest = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (name == "relu") {
    if (!rest.empty())
      throw std::invalid_argument("activation: relu takes no parameters");
    return ActivationSpec::relu();
  }
  if (name == "lrelu") {
    auto kv = parse_params(rest);
    return ActivationSpec::lrelu(kv.count("a") ? kv.at("a") : 0.01);
  }
  if (name == "genrelu") {
    auto kv = parse_params(rest);
    return ActivationSpec::genrelu(kv.count("a") ? kv.at("a") : 0.1,
                                   kv.count("b") ? kv.at("b") : 1.0);
  }
  throw std::invalid_argument("activation: unknown kind '" + name + "'");
}

}  // namespace pln
