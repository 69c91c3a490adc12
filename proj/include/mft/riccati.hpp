// Backward Riccati recursions for the deviation system (d_x) and the
// augmented leader/mean-field system (2 d_x), and the feedback gains built
// from them. Every agent runs this offline; nothing here depends on n.
#pragma once

#include "mft/linalg.hpp"
#include "mft/model.hpp"

#include <vector>

namespace mft {

/// Value matrices for t = 1..T+1. `M_breve[k]` is the value at t = k + 1, so
/// index T holds the zero terminal condition.
struct RiccatiSolution {
  std::vector<Matrix> M_breve;  ///< d_x x d_x
  std::vector<Matrix> M_bar;    ///< 2d_x x 2d_x
};

/// Gains for t = 1..T (index k is t = k + 1).
struct GainSchedule {
  std::vector<Matrix> L_breve;  ///< d_u x d_x
  std::vector<Matrix> L11;      ///< d_u0 x d_x (empty rows in leaderless mode)
  std::vector<Matrix> L12;      ///< d_u0 x d_x
  std::vector<Matrix> L21;      ///< d_u x d_x
  std::vector<Matrix> L22;      ///< d_u x d_x

  int horizon() const { return static_cast<int>(L_breve.size()); }
  /// Reassembles the full (d_u0 + d_u) x 2d_x block gain at step k.
  Matrix L_bar(std::size_t k) const;
};

/// Generic finite-horizon recursion
///   M_t = A^T M A - A^T M B (B^T M B + R)^{-1} B^T M A + Q,  M_{T+1} = 0.
/// Returns T+1 matrices. `label` names the recursion in error messages.
std::vector<Matrix> backward_riccati(const std::vector<Matrix>& A, const std::vector<Matrix>& B,
                                     const std::vector<Matrix>& Q, const std::vector<Matrix>& R,
                                     const char* label);

/// -(B^T M_next B + R)^{-1} B^T M_next A via a Cholesky solve.
Matrix feedback_gain(const Matrix& A, const Matrix& B, const Matrix& R, const Matrix& M_next,
                     const char* label, int t);

std::vector<Matrix> solve_riccati_breve(const ScenarioConfig& cfg);
std::vector<Matrix> solve_riccati_bar(const AugmentedSystem& aug);

GainSchedule compute_gains(const ScenarioConfig& cfg, const AugmentedSystem& aug,
                           const RiccatiSolution& sol);

/// ||rhs - M_t||_inf / (1 + ||M_t||_inf) with the right-hand side evaluated
/// using an explicit inverse, as an independent check on the solve path.
double riccati_residual(const Matrix& A, const Matrix& B, const Matrix& Q, const Matrix& R,
                        const Matrix& M_t, const Matrix& M_next);

/// Everything the strategies need, in one call.
struct Synthesis {
  AugmentedSystem aug;
  RiccatiSolution sol;
  GainSchedule gains;
};

Synthesis synthesize(const ScenarioConfig& cfg);

}  // namespace mft
