#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

namespace pln {

inline constexpr double kNmeFloorDb = -300.0;

// Normalized mean error in dB: 10 log10(error energy / target energy).
// Exact matches are floored at -300 dB so downstream ratio arithmetic
// stays total.
inline double nme_db(const Eigen::MatrixXd& T, const Eigen::MatrixXd& T_hat) {
  if (T.rows() != T_hat.rows() || T.cols() != T_hat.cols())
    throw std::invalid_argument("nme_db: shape mismatch");
  const double target_energy = T.squaredNorm();
  if (target_energy <= 0.0)
    throw std::invalid_argument("nme_db: zero target energy");
  const double err_energy = (T - T_hat).squaredNorm();
  if (err_energy <= 0.0) return kNmeFloorDb;
  return std::max(kNmeFloorDb, 10.0 * std::log10(err_energy / target_energy));
}

// Fraction of columns whose argmax matches; ties resolve to the lowest index.
inline double accuracy(const Eigen::MatrixXd& T_onehot,
                       const Eigen::MatrixXd& T_hat) {
  if (T_onehot.rows() != T_hat.rows() || T_onehot.cols() != T_hat.cols())
    throw std::invalid_argument("accuracy: shape mismatch");
  if (T_onehot.cols() == 0) return 0.0;
  auto argmax = [](const Eigen::MatrixXd& M, Eigen::Index col) {
    Eigen::Index best = 0;
    for (Eigen::Index r = 1; r < M.rows(); ++r)
      if (M(r, col) > M(best, col)) best = r;
    return best;
  };
  Eigen::Index correct = 0;
  for (Eigen::Index j = 0; j < T_onehot.cols(); ++j)
    if (argmax(T_hat, j) == argmax(T_onehot, j)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(T_onehot.cols());
}

// Relative NME improvement, sign-corrected for negative dB values:
// (old - new) / |old|. Positive means the new network is better.
inline double improvement_ratio(double nme_old_db, double nme_new_db) {
  if (nme_old_db == 0.0)
    throw std::invalid_argument("improvement_ratio: degenerate baseline NME");
  return (nme_old_db - nme_new_db) / std::abs(nme_old_db);
}

}  // namespace pln
