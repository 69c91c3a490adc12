// Per-follower kernels for the population update. Follower states are stored
// column-wise (d_x x n), so follower i is column i.
//
// Each kernel has an OpenMP version and a plain serial reference. The
// parallel reductions use fixed-size blocks combined in block order, so their
// results do not depend on the thread count or scheduling.
#pragma once

#include "mft/linalg.hpp"

namespace mft {

enum class Exec { serial, parallel };

inline constexpr Eigen::Index kReductionBlock = 256;

namespace kernels {

/// Mean of the columns of X.
Vector column_mean_serial(const Matrix& X);
Vector column_mean_parallel(const Matrix& X);

/// u_i = L x_i + offset;  x_i' = A x_i + B u_i + drift + w_i  for every column i.
struct FollowerStep {
  const Matrix& A;
  const Matrix& B;
  const Matrix& L;      ///< d_u x d_x local feedback gain
  const Vector& offset;  ///< d_u, shared action term
  const Vector& drift;   ///< d_x, shared state term (D xbar + E x0)
};

void advance_serial(const FollowerStep& step, const Matrix& X, const Matrix& W, Matrix& U,
                    Matrix& X_next);
void advance_parallel(const FollowerStep& step, const Matrix& X, const Matrix& W, Matrix& U,
                      Matrix& X_next);

/// Sum over followers of x^T Q x + (x - x0)^T P (x - x0) + u^T R u
/// + (x - xbar)^T H (x - xbar).
struct FollowerCostWeights {
  const Matrix& Q;
  const Matrix& P;
  const Matrix& R;
  const Matrix& H;
  const Vector& leader;
  const Vector& mean;
};

double follower_cost_serial(const FollowerCostWeights& w, const Matrix& X, const Matrix& U);
double follower_cost_parallel(const FollowerCostWeights& w, const Matrix& X, const Matrix& U);

}  // namespace kernels

inline Vector column_mean(const Matrix& X, Exec exec) {
  return exec == Exec::parallel ? kernels::column_mean_parallel(X)
                                : kernels::column_mean_serial(X);
}

}  // namespace mft
