#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pln {

struct RidgeProblem {
  Eigen::MatrixXd X;  // P x J
  Eigen::MatrixXd T;  // Q x J
  double lambda = 0.0;
};

// Minimizes sum_j ||t - W x||^2 + lambda ||W||_F^2 in closed form.
// lambda = 0 with rank-deficient X falls back to the minimum-norm solution.
inline Eigen::MatrixXd solve_ridge(const RidgeProblem& prob) {
  if (prob.X.cols() != prob.T.cols())
    throw std::invalid_argument("solve_ridge: X and T column counts differ");
  if (prob.X.cols() < 1)
    throw std::invalid_argument("solve_ridge: empty problem");
  if (prob.lambda < 0.0)
    throw std::invalid_argument("solve_ridge: lambda must be nonnegative");

  if (prob.lambda == 0.0) {
    // min-norm solution of X^T W^T ~= T^T
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(
        prob.X.transpose());
    return cod.solve(prob.T.transpose()).transpose();
  }
  const Eigen::Index P = prob.X.rows();
  Eigen::MatrixXd gram = prob.X * prob.X.transpose();
  gram.diagonal().array() += prob.lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  // W (XX^T + lambda I) = T X^T  =>  W^T = solve(gram, X T^T)
  return ldlt.solve(prob.X * prob.T.transpose()).transpose();
}

// Reusable factorization of A = Y Y^T + (1/mu) I, applied from the right:
// M -> M A^{-1}. When n > J the Woodbury identity keeps the factored
// system at dimension J.
class GramInverse {
 public:
  GramInverse(const Eigen::MatrixXd& Y, double mu) : c_(1.0 / mu) {
    if (mu <= 0.0)
      throw std::invalid_argument("GramInverse: mu must be positive");
    if (!Y.allFinite())
      throw std::invalid_argument("GramInverse: non-finite entries in Y");
    const Eigen::Index n = Y.rows(), J = Y.cols();
    woodbury_ = n > J;
    if (woodbury_) {
      Y_ = Y;
      Eigen::MatrixXd small = Y.transpose() * Y;
      small.diagonal().array() += c_;
      ldlt_.compute(small);
    } else {
      Eigen::MatrixXd gram = Y * Y.transpose();
      gram.diagonal().array() += c_;
      ldlt_.compute(gram);
    }
  }

  // Returns M (Y Y^T + (1/mu) I)^{-1}; M has as many columns as Y has rows.
  Eigen::MatrixXd apply_right(const Eigen::MatrixXd& M) const {
    if (!woodbury_)
      return ldlt_.solve(M.transpose()).transpose();
    // (c I + Y Y^T)^{-1} = (1/c)(I - Y (c I + Y^T Y)^{-1} Y^T)
    Eigen::MatrixXd MY = M * Y_;
    return (M - ldlt_.solve(MY.transpose()).transpose() * Y_.transpose()) / c_;
  }

  bool uses_woodbury() const { return woodbury_; }

 private:
  double c_;
  bool woodbury_ = false;
  Eigen::MatrixXd Y_;
  Eigen::LDLT<Eigen::MatrixXd> ldlt_;
};

namespace detail {

// Euclidean projection of v onto the l1 ball of radius eps (Duchi et al.
// sort-based simplex projection applied to |v|).
inline void project_l1_inplace(Eigen::Map<Eigen::VectorXd> v, double eps) {
  const double l1 = v.lpNorm<1>();
  if (l1 <= eps) return;
  std::vector<double> mag(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    mag[static_cast<std::size_t>(i)] = std::abs(v(i));
  std::sort(mag.begin(), mag.end(), std::greater<double>());
  double cumsum = 0.0, theta = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    cumsum += mag[k];
    double cand = (cumsum - eps) / static_cast<double>(k + 1);
    if (cand >= mag[k] && k > 0) break;
    theta = cand;
  }
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    double m = std::abs(v(i)) - theta;
    v(i) = m > 0.0 ? (v(i) > 0.0 ? m : -m) : 0.0;
  }
}

}  // namespace detail

// Projection onto {M : ||M||_q <= eps} over the vectorized matrix.
// q = 2 is radial scaling; q = 1 is the simplex-projection algorithm.
inline Eigen::MatrixXd project_ball(const Eigen::MatrixXd& M, int q,
                                    double eps) {
  if (eps <= 0.0) throw std::invalid_argument("project_ball: eps must be > 0");
  if (q == 2) {
    const double norm = M.norm();
    if (norm <= eps) return M;
    return M * (eps / norm);
  }
  if (q == 1) {
    Eigen::MatrixXd out = M;
    Eigen::Map<Eigen::VectorXd> flat(out.data(), out.size());
    detail::project_l1_inplace(flat, eps);
    return out;
  }
  throw std::invalid_argument("project_ball: q must be 1 or 2");
}

struct ConstrainedLsProblem {
  Eigen::MatrixXd Y;  // n x J
  Eigen::MatrixXd T;  // Q x J
  double epsilon_o = 0.0;
  int q = 2;
};

struct AdmmSettings {
  double mu = 1.0;
  int k_max = 100;
  double tol = 1e-6;
};

struct AdmmResult {
  Eigen::MatrixXd O;  // feasible iterate (the splitting variable)
  int iterations = 0;
  double objective = 0.0;  // (1/2) ||T - O Y||_F^2
};

inline double half_residual_sq(const Eigen::MatrixXd& T,
                               const Eigen::MatrixXd& O,
                               const Eigen::MatrixXd& Y) {
  return 0.5 * (T - O * Y).squaredNorm();
}

// ADMM for  min_O (1/2)||T - O Y||_F^2  s.t.  ||O||_q <= eps_o.
// Iterates the closed-form three-step scheme; the returned matrix is the
// projected splitting variable, so it is always feasible.
inline AdmmResult solve_constrained_ls(
    const ConstrainedLsProblem& prob, const AdmmSettings& settings,
    const std::optional<Eigen::MatrixXd>& warm_start = std::nullopt) {
  if (prob.epsilon_o <= 0.0)
    throw std::invalid_argument("solve_constrained_ls: epsilon_o must be > 0");
  if (prob.Y.cols() != prob.T.cols())
    throw std::invalid_argument("solve_constrained_ls: column counts differ");
  if (!prob.Y.allFinite() || !prob.T.allFinite())
    throw std::invalid_argument("solve_constrained_ls: non-finite inputs");
  if (settings.mu <= 0.0 || settings.k_max < 1)
    throw std::invalid_argument("solve_constrained_ls: bad ADMM settings");

  const Eigen::Index Q = prob.T.rows(), n = prob.Y.rows();
  GramInverse inv(prob.Y, settings.mu);
  const Eigen::MatrixXd TYt = prob.T * prob.Y.transpose();

  Eigen::MatrixXd Qk = warm_start
                           ? project_ball(*warm_start, prob.q, prob.epsilon_o)
                           : Eigen::MatrixXd::Zero(Q, n);
  Eigen::MatrixXd Lk = Eigen::MatrixXd::Zero(Q, n);

  int k = 0;
  for (; k < settings.k_max; ++k) {
    Eigen::MatrixXd Ok = inv.apply_right(TYt + (Qk + Lk) / settings.mu);
    Eigen::MatrixXd Qnext = project_ball(Ok - Lk, prob.q, prob.epsilon_o);
    Lk += Qnext - Ok;
    double step = (Qnext - Qk).norm();
    Qk = std::move(Qnext);
    if (step <= settings.tol * std::max(1.0, Qk.norm())) {
      ++k;
      break;
    }
  }
  return {Qk, k, half_residual_sq(prob.T, Qk, prob.Y)};
}

}  // namespace pln
