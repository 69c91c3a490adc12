// Scenario builders and brute-force reference computations shared by the
// unit tests and the acceptance binary.
#pragma once

#include "mft/analysis.hpp"
#include "mft/model.hpp"
#include "mft/simulate.hpp"

#include <json.hpp>

#include <filesystem>
#include <random>
#include <string>

namespace mft::testing {

inline std::filesystem::path scenario_path(const std::string& name) {
  return std::filesystem::path(MFT_SCENARIO_DIR) / name;
}

/// Scalar scenario (d_x = d_u = d_u0 = 1) with Gaussian initials.
struct ScalarParams {
  double A0 = 1, B0 = 1, D0 = 0, A = 1.1, B = 1, D = 0.2, E = 0.3;
  double Q0 = 1, R0 = 1, F = 1, Q = 1, P = 1, R = 1, H = 1;
  double init_mean = 1, init_var = 1, noise_leader = 0.1, noise_follower = 0.5, leader_init = 2;
  int T = 5, n = 20;
  std::uint64_t seed = 1;
};

inline nlohmann::json scalar_json(const ScalarParams& p) {
  return {{"dims", {{"d_x", 1}, {"d_u", 1}, {"d_u0", 1}, {"T", p.T}, {"n", p.n}}},
          {"A0", p.A0}, {"B0", p.B0}, {"D0", p.D0}, {"A", p.A}, {"B", p.B}, {"D", p.D},
          {"E", p.E}, {"Q0", p.Q0}, {"R0", p.R0}, {"F", p.F}, {"Q", p.Q}, {"P", p.P},
          {"R", p.R}, {"H", p.H}, {"init_mean", {p.init_mean}}, {"init_cov", p.init_var},
          {"noise_cov_leader", p.noise_leader}, {"noise_cov_follower", p.noise_follower},
          {"leader_init", {p.leader_init}}, {"seed", p.seed}};
}

inline ScenarioConfig scalar_scenario(const ScalarParams& p) {
  return parse_scenario(scalar_json(p).dump(), "scalar");
}

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                            double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
  return m;
}

inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index d, double scale) {
  const Matrix g = random_matrix(rng, d, d, scale);
  return symmetrize(g.transpose() * g);
}

struct RandomLimits {
  int max_dx = 3;
  int max_du = 2;
  int max_T = 20;
  int max_n = 20;
  bool time_varying = true;
};

/// Random instance satisfying the positivity assumptions.
inline ScenarioConfig random_scenario(std::mt19937_64& rng, const RandomLimits& lim = {}) {
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ScenarioConfig cfg;
  cfg.dims.d_x = pick(1, lim.max_dx);
  cfg.dims.d_u = pick(1, lim.max_du);
  cfg.dims.d_u0 = pick(1, lim.max_du);
  cfg.dims.T = pick(1, lim.max_T);
  cfg.dims.n = pick(1, lim.max_n);
  const int dx = cfg.dims.d_x, du = cfg.dims.d_u, du0 = cfg.dims.d_u0, T = cfg.dims.T;

  auto schedule = [&](auto make) {
    MatrixSchedule s;
    const Matrix first = make();
    for (int k = 0; k < T; ++k) s.values.push_back(lim.time_varying && k > 0 ? make() : first);
    return s;
  };
  const Matrix I = Matrix::Identity(dx, dx);
  cfg.A0 = schedule([&] { return Matrix(I + random_matrix(rng, dx, dx, 0.3)); });
  cfg.B0 = schedule([&] { return random_matrix(rng, dx, du0, 0.8); });
  cfg.D0 = schedule([&] { return random_matrix(rng, dx, dx, 0.2); });
  cfg.A = schedule([&] { return Matrix(I + random_matrix(rng, dx, dx, 0.3)); });
  cfg.B = schedule([&] { return random_matrix(rng, dx, du, 0.8); });
  cfg.D = schedule([&] { return random_matrix(rng, dx, dx, 0.2); });
  cfg.E = schedule([&] { return random_matrix(rng, dx, dx, 0.2); });
  cfg.Q0 = schedule([&] { return random_psd(rng, dx, 0.6); });
  cfg.R0 = schedule(
      [&] { return Matrix(random_psd(rng, du0, 0.6) + 0.2 * Matrix::Identity(du0, du0)); });
  cfg.F = schedule([&] { return random_psd(rng, dx, 0.6); });
  cfg.Q = schedule([&] { return random_psd(rng, dx, 0.6); });
  cfg.P = schedule([&] { return random_psd(rng, dx, 0.6); });
  cfg.R = schedule(
      [&] { return Matrix(random_psd(rng, du, 0.6) + 0.2 * Matrix::Identity(du, du)); });
  cfg.H = schedule([&] { return random_psd(rng, dx, 0.4); });

  cfg.init_mean = random_matrix(rng, dx, 1, 1.0);
  cfg.init_cov = random_psd(rng, dx, 0.7);
  cfg.noise_cov_leader = random_psd(rng, dx, 0.3);
  cfg.noise_cov_follower = random_psd(rng, dx, 0.4);
  cfg.leader_init = random_matrix(rng, dx, 1, 1.0);
  cfg.seed = rng();
  validate(cfg);
  return cfg;
}

/// Follower cost with the pairwise term as the literal double sum
/// (1 / 2n^2) sum_i sum_j (x_i - x_j)^T H (x_i - x_j), summed over t.
inline double naive_cost(const ScenarioConfig& cfg, const SimulationRecord& rec) {
  const int T = rec.horizon();
  long double total = 0.0L;
  for (int k = 0; k < T; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const Matrix& X = rec.follower_states[uk];
    const Matrix& U = rec.follower_actions[uk];
    const Vector& x0 = rec.leader_states[uk];
    const Vector& u0 = rec.leader_actions[uk];
    const Eigen::Index n = X.cols();
    Vector xbar = Vector::Zero(X.rows());
    for (Eigen::Index i = 0; i < n; ++i) xbar += X.col(i);
    xbar /= static_cast<double>(n);
    long double step = x0.dot(cfg.Q0[uk] * x0) + (xbar - x0).dot(cfg.F[uk] * (xbar - x0)) +
                       u0.dot(cfg.R0[uk] * u0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector xi = X.col(i);
      const Vector ui = U.col(i);
      step += (xi.dot(cfg.Q[uk] * xi) + (xi - x0).dot(cfg.P[uk] * (xi - x0)) +
               ui.dot(cfg.R[uk] * ui)) /
              static_cast<double>(n);
      for (Eigen::Index j = 0; j < n; ++j) {
        const Vector gap = xi - X.col(j);
        step += gap.dot(cfg.H[uk] * gap) / (2.0 * static_cast<double>(n * n));
      }
    }
    total += step;
  }
  return static_cast<double>(total);
}

}  // namespace mft::testing
