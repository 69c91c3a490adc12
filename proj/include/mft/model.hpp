// Problem instance for the leader-follower LQ network: dimensions, matrix
// schedules, noise and initial-state distributions, validation of the
// positivity assumptions, and the 2d_x augmented (leader, mean-field) system.
//
// Time convention: a schedule holds T matrices and `schedule[k]` is the value
// at time t = k + 1. File formats and printed output use 1-based t.
#pragma once

#include "mft/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mft {

struct Dimensions {
  int d_x = 1;
  int d_u = 1;
  int d_u0 = 1;  ///< 0 removes the leader input channel (leaderless mode)
  int T = 1;
  int n = 1;

  bool leaderless() const { return d_u0 == 0; }
};

/// T matrices of one shape, one per time step.
struct MatrixSchedule {
  std::vector<Matrix> values;
  bool broadcast = false;  ///< expanded from a single time-invariant matrix

  static MatrixSchedule constant(const Matrix& m, int horizon);

  const Matrix& operator[](std::size_t k) const { return values[k]; }
  Matrix& operator[](std::size_t k) { return values[k]; }
  std::size_t size() const { return values.size(); }
  Eigen::Index rows() const { return values.empty() ? 0 : values.front().rows(); }
  Eigen::Index cols() const { return values.empty() ? 0 : values.front().cols(); }
};

enum class InitFamily { gaussian, uniform_box };

struct InitialDistribution {
  InitFamily family = InitFamily::gaussian;
  Vector lower;  ///< uniform box only
  Vector upper;
};

struct ScenarioConfig {
  Dimensions dims;

  // leader dynamics
  MatrixSchedule A0, B0, D0;
  // follower dynamics
  MatrixSchedule A, B, D, E;
  // cost weights
  MatrixSchedule Q0, R0, F, Q, P, R, H;

  Vector init_mean;  ///< mu_x
  Matrix init_cov;   ///< Sigma_x
  InitialDistribution init_dist;
  Matrix noise_cov_leader;
  Matrix noise_cov_follower;  ///< Sigma_w
  Vector leader_init;         ///< x^0_1
  std::uint64_t seed = 0;

  /// Copy with a different follower count; nothing else depends on n.
  ScenarioConfig with_population(int n) const;
};

/// Block matrices of the (leader, mean-field) system, one per t.
struct AugmentedSystem {
  std::vector<Matrix> Abar;  ///< [[A0, D0], [E, A + D]]
  std::vector<Matrix> Bbar;  ///< blockdiag(B0, B); leader columns absent when d_u0 = 0
  std::vector<Matrix> Qbar;  ///< [[Q0+P+F, -P-F], [-P-F, Q+P+F]]
  std::vector<Matrix> Rbar;  ///< blockdiag(R0, R)
};

/// Checks shapes, finiteness, covariance PSD-ness and the positivity
/// assumptions at every t. Throws ShapeError or AssumptionError.
void validate(const ScenarioConfig& cfg);

/// Parses scenario JSON text. `origin` is only used in messages.
ScenarioConfig parse_scenario(std::string_view text, std::string_view origin = "<scenario>");

/// Reads and validates a scenario file. A path without the ".json" suffix is
/// retried with it.
ScenarioConfig load_scenario(const std::filesystem::path& path);

std::string scenario_to_json(const ScenarioConfig& cfg);
void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path);

AugmentedSystem build_augmented(const ScenarioConfig& cfg);

}  // namespace mft
