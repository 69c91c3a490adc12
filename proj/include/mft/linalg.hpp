// Dense matrix aliases and the small set of numerical helpers shared by the
// model, Riccati and analysis code.
#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>

namespace mft {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// (M + M^T) / 2
Matrix symmetrize(const Matrix& m);

/// Maximum absolute row sum; 0 for empty matrices.
double inf_norm(const Matrix& m);

/// Smallest eigenvalue of the symmetric part of m. +inf for empty matrices.
double min_eigenvalue(const Matrix& m);

// Tolerance rules for matrices read from text: PSD passes when
// lambda_min >= -1e-9 (1 + ||M||_inf); PD needs lambda_min > 1e-12 (1 + ||M||_inf).
inline constexpr double kPsdTolerance = 1e-9;
inline constexpr double kPdFloor = 1e-12;

bool is_psd(const Matrix& m);
bool is_pd(const Matrix& m);

/// Symmetric square root factor S with S S^T = cov for a PSD covariance.
/// Negative round-off eigenvalues are clamped to zero.
Matrix covariance_factor(const Matrix& cov);

/// Trace of a * b without forming the product.
double trace_of_product(const Matrix& a, const Matrix& b);

/// Neumaier-compensated sum. The result depends only on the order of the
/// input, never on how the values were produced.
double compensated_sum(std::span<const double> values);

/// Running compensated accumulator.
class KahanAccumulator {
 public:
  void add(double x);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

}  // namespace mft
