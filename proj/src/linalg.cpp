#include "mft/linalg.hpp"

#include <cmath>
#include <limits>

namespace mft {

Matrix symmetrize(const Matrix& m) {
  return 0.5 * (m + m.transpose());
}

double inf_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

double min_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(m), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

bool is_psd(const Matrix& m) {
  return min_eigenvalue(m) >= -kPsdTolerance * (1.0 + inf_norm(m));
}

bool is_pd(const Matrix& m) {
  return min_eigenvalue(m) > kPdFloor * (1.0 + inf_norm(m));
}

Matrix covariance_factor(const Matrix& cov) {
  if (cov.size() == 0) return cov;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(cov));
  Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

double trace_of_product(const Matrix& a, const Matrix& b) {
  return a.cwiseProduct(b.transpose()).sum();
}

void KahanAccumulator::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    carry_ += (sum_ - t) + x;
  } else {
    carry_ += (x - t) + sum_;
  }
  sum_ = t;
}

double compensated_sum(std::span<const double> values) {
  KahanAccumulator acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

}  // namespace mft
