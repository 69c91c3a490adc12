#include "mft/kernels.hpp"

#include <vector>

namespace mft::kernels {

namespace {

Eigen::Index block_count(Eigen::Index n) {
  return (n + kReductionBlock - 1) / kReductionBlock;
}

double follower_stage_cost(const FollowerCostWeights& w, const Matrix& X, const Matrix& U,
                           Eigen::Index i) {
  const auto x = X.col(i);
  const auto u = U.col(i);
  const Vector rel = x - w.leader;
  const Vector dev = x - w.mean;
  return x.dot(w.Q * x) + rel.dot(w.P * rel) + u.dot(w.R * u) + dev.dot(w.H * dev);
}

}  // namespace

Vector column_mean_serial(const Matrix& X) {
  Vector sum = Vector::Zero(X.rows());
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    for (Eigen::Index r = 0; r < X.rows(); ++r) sum(r) += X(r, i);
  }
  return sum / static_cast<double>(X.cols());
}

Vector column_mean_parallel(const Matrix& X) {
  const Eigen::Index blocks = block_count(X.cols());
  Matrix partial = Matrix::Zero(X.rows(), blocks);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kReductionBlock;
    const Eigen::Index len = std::min(kReductionBlock, X.cols() - begin);
    partial.col(b) = X.middleCols(begin, len).rowwise().sum();
  }
  Vector sum = Vector::Zero(X.rows());
  for (Eigen::Index b = 0; b < blocks; ++b) sum += partial.col(b);
  return sum / static_cast<double>(X.cols());
}

void advance_serial(const FollowerStep& step, const Matrix& X, const Matrix& W, Matrix& U,
                    Matrix& X_next) {
  const Eigen::Index dx = X.rows();
  const Eigen::Index du = step.L.rows();
  U.resize(du, X.cols());
  X_next.resize(dx, X.cols());
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    for (Eigen::Index a = 0; a < du; ++a) {
      double acc = step.offset(a);
      for (Eigen::Index c = 0; c < dx; ++c) acc += step.L(a, c) * X(c, i);
      U(a, i) = acc;
    }
    for (Eigen::Index r = 0; r < dx; ++r) {
      double acc = step.drift(r) + W(r, i);
      for (Eigen::Index c = 0; c < dx; ++c) acc += step.A(r, c) * X(c, i);
      for (Eigen::Index a = 0; a < du; ++a) acc += step.B(r, a) * U(a, i);
      X_next(r, i) = acc;
    }
  }
}

void advance_parallel(const FollowerStep& step, const Matrix& X, const Matrix& W, Matrix& U,
                      Matrix& X_next) {
  U.resize(step.L.rows(), X.cols());
  X_next.resize(X.rows(), X.cols());
  const Eigen::Index blocks = block_count(X.cols());
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kReductionBlock;
    const Eigen::Index width = std::min(kReductionBlock, X.cols() - begin);
    auto u = U.middleCols(begin, width);
    auto x_next = X_next.middleCols(begin, width);
    u.noalias() = step.L * X.middleCols(begin, width);
    u.colwise() += step.offset;
    x_next = W.middleCols(begin, width);
    x_next.colwise() += step.drift;
    x_next.noalias() += step.A * X.middleCols(begin, width);
    x_next.noalias() += step.B * u;
  }
}

double follower_cost_serial(const FollowerCostWeights& w, const Matrix& X, const Matrix& U) {
  KahanAccumulator acc;
  for (Eigen::Index i = 0; i < X.cols(); ++i) acc.add(follower_stage_cost(w, X, U, i));
  return acc.value();
}

double follower_cost_parallel(const FollowerCostWeights& w, const Matrix& X, const Matrix& U) {
  const Eigen::Index blocks = block_count(X.cols());
  std::vector<double> partial(static_cast<std::size_t>(blocks), 0.0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index b = 0; b < blocks; ++b) {
    const Eigen::Index begin = b * kReductionBlock;
    const Eigen::Index end = std::min(begin + kReductionBlock, X.cols());
    KahanAccumulator acc;
    for (Eigen::Index i = begin; i < end; ++i) acc.add(follower_stage_cost(w, X, U, i));
    partial[static_cast<std::size_t>(b)] = acc.value();
  }
  return compensated_sum(partial);
}

}  // namespace mft::kernels
