#include "mft/riccati.hpp"

#include "mft/errors.hpp"

#include <string>

namespace mft {

Matrix GainSchedule::L_bar(std::size_t k) const {
  const Eigen::Index du0 = L11[k].rows();
  const Eigen::Index du = L21[k].rows();
  const Eigen::Index dx = L21[k].cols();
  Matrix full(du0 + du, 2 * dx);
  if (du0 > 0) full.topRows(du0) << L11[k], L12[k];
  full.bottomRows(du) << L21[k], L22[k];
  return full;
}

Matrix feedback_gain(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& M_next,
                     const char* label, int t) {
  const Matrix inner = symmetrize(B.transpose() * M_next * B + R);
  Eigen::LLT<Matrix> llt(inner);
  if (llt.info() != Eigen::Success) {
    throw SynthesisError(std::string(label) + ": B^T M B + R is not positive definite at t=" +
                         std::to_string(t));
  }
  return -llt.solve(B.transpose() * M_next * A);
}

std::vector<Matrix> backward_riccati(const std::vector<Matrix>& A, const std::vector<Matrix>& B,
                                     const std::vector<Matrix>& Q, const std::vector<Matrix>& R,
                                     const char* label) {
  const std::size_t T = A.size();
  const Eigen::Index n = A.front().rows();
  std::vector<Matrix> M(T + 1);
  M[T] = Matrix::Zero(n, n);
  for (std::size_t k = T; k-- > 0;) {
    const Matrix L = feedback_gain(A[k], B[k], R[k], M[k + 1], label, static_cast<int>(k + 1));
    const Matrix MA = M[k + 1] * A[k];
    // A^T M A - A^T M B (B^T M B + R)^{-1} B^T M A == A^T M A + A^T M B L
    M[k] = symmetrize(A[k].transpose() * MA + A[k].transpose() * M[k + 1] * B[k] * L + Q[k]);
  }
  return M;
}

std::vector<Matrix> solve_riccati_breve(const ScenarioConfig& cfg) {
  const auto T = static_cast<std::size_t>(cfg.dims.T);
  std::vector<Matrix> weight(T);
  for (std::size_t k = 0; k < T; ++k) weight[k] = cfg.Q[k] + cfg.P[k] + cfg.H[k];
  return backward_riccati(cfg.A.values, cfg.B.values, weight, cfg.R.values, "M_breve");
}

std::vector<Matrix> solve_riccati_bar(const AugmentedSystem& aug) {
  return backward_riccati(aug.Abar, aug.Bbar, aug.Qbar, aug.Rbar, "M_bar");
}

GainSchedule compute_gains(const ScenarioConfig& cfg, const AugmentedSystem& aug,
                           const RiccatiSolution& sol) {
  const int dx = cfg.dims.d_x;
  const int du = cfg.dims.d_u;
  const int du0 = cfg.dims.d_u0;
  GainSchedule g;
  for (int k = 0; k < cfg.dims.T; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    g.L_breve.push_back(
        feedback_gain(cfg.A[uk], cfg.B[uk], cfg.R[uk], sol.M_breve[uk + 1], "L_breve", k + 1));
    const Matrix bar = feedback_gain(aug.Abar[uk], aug.Bbar[uk], aug.Rbar[uk],
                                     sol.M_bar[uk + 1], "L_bar", k + 1);
    g.L11.push_back(bar.topLeftCorner(du0, dx));
    g.L12.push_back(bar.topRightCorner(du0, dx));
    g.L21.push_back(bar.bottomLeftCorner(du, dx));
    g.L22.push_back(bar.bottomRightCorner(du, dx));
  }
  return g;
}

double riccati_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                        const Matrix& M_t, const Matrix& M_next) {
  const Matrix inverse = (B.transpose() * M_next * B + R).inverse();
  const Matrix rhs = -A.transpose() * M_next * B * inverse * B.transpose() * M_next * A +
                     A.transpose() * M_next * A + Q;
  return inf_norm(rhs - M_t) / (1.0 + inf_norm(M_t));
}

Synthesis synthesize(const ScenarioConfig& cfg) {
  Synthesis s;
  s.aug = build_augmented(cfg);
  s.sol.M_breve = solve_riccati_breve(cfg);
  s.sol.M_bar = solve_riccati_bar(s.aug);
  s.gains = compute_gains(cfg, s.aug, s.sol);
  return s;
}

}  // namespace mft
