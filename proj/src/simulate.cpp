#include "mft/simulate.hpp"

#include "mft/errors.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mft {

std::string_view strategy_name(Strategy s) {
  return s == Strategy::proposed ? "proposed" : "oracle";
}

Strategy parse_strategy(std::string_view name) {
  if (name == "proposed") return Strategy::proposed;
  if (name == "oracle") return Strategy::oracle;
  throw UsageError("strategy must be 'proposed' or 'oracle', got '" + std::string(name) + "'");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Vector gaussian(std::mt19937_64& rng, const Matrix& factor) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector xi(factor.cols());
  for (Eigen::Index k = 0; k < xi.size(); ++k) xi(k) = normal(rng);
  return factor * xi;
}

void require_finite(const Vector& v, const char* what, int t) {
  if (!v.allFinite()) {
    throw BlowUpError(std::string(what) + " became non-finite at t=" + std::to_string(t));
  }
}

SimulationRecord simulate(const ScenarioConfig& cfg, const GainSchedule& gains,
                          const NoiseRealization& noise, Strategy strategy, Exec exec) {
  const Dimensions& d = cfg.dims;
  if (gains.horizon() != d.T || noise.T != d.T) {
    throw ShapeError("gain schedule / noise horizon does not match the scenario horizon");
  }
  if (noise.follower_init.rows() != d.d_x || noise.n < 1 ||
      noise.follower_init.cols() != noise.n) {
    throw ShapeError("noise realization does not match the scenario dimensions");
  }
  const auto T = static_cast<std::size_t>(d.T);
  const bool proposed = strategy == Strategy::proposed;

  SimulationRecord rec;
  rec.strategy = strategy;
  rec.leader_states.reserve(T + 1);
  rec.follower_states.reserve(T + 1);
  rec.mean_field.reserve(T + 1);
  rec.leader_actions.reserve(T);
  rec.follower_actions.reserve(T);

  rec.leader_states.push_back(cfg.leader_init);
  rec.follower_states.push_back(noise.follower_init);
  rec.mean_field.push_back(column_mean(noise.follower_init, exec));
  if (proposed) rec.z.push_back(cfg.init_mean);

  for (std::size_t k = 0; k < T; ++k) {
    const Vector& x0 = rec.leader_states[k];
    const Matrix& X = rec.follower_states[k];
    const Vector& xbar = rec.mean_field[k];
    // The proposed strategy substitutes z_t for the unobservable mean field.
    const Vector& estimate = proposed ? rec.z[k] : xbar;

    const Vector u0 = gains.L11[k] * x0 + gains.L12[k] * estimate;
    const Vector offset = gains.L21[k] * x0 + (gains.L22[k] - gains.L_breve[k]) * estimate;
    const Vector drift = cfg.D[k] * xbar + cfg.E[k] * x0;

    Matrix U, X_next;
    const kernels::FollowerStep step{cfg.A[k], cfg.B[k], gains.L_breve[k], offset, drift};
    if (exec == Exec::parallel) {
      kernels::advance_parallel(step, X, noise.follower_noise[k], U, X_next);
    } else {
      kernels::advance_serial(step, X, noise.follower_noise[k], U, X_next);
    }

    Vector x0_next = cfg.A0[k] * x0 + cfg.B0[k] * u0 + cfg.D0[k] * xbar + noise.leader_noise[k];
    const int t_next = static_cast<int>(k) + 2;
    require_finite(x0_next, "leader state", t_next);
    Vector xbar_next = column_mean(X_next, exec);
    require_finite(xbar_next, "follower states", t_next);

    if (proposed) {
      Vector z_next = (cfg.A[k] + cfg.B[k] * gains.L22[k] + cfg.D[k]) * rec.z[k] +
                      (cfg.B[k] * gains.L21[k] + cfg.E[k]) * x0;
      require_finite(z_next, "mean-field estimate z", t_next);
      rec.z.push_back(std::move(z_next));
    }
    rec.leader_actions.push_back(u0);
    rec.follower_actions.push_back(std::move(U));
    rec.leader_states.push_back(std::move(x0_next));
    rec.follower_states.push_back(std::move(X_next));
    rec.mean_field.push_back(std::move(xbar_next));
  }
  rec.realized_cost = evaluate_cost(cfg, rec, exec);
  return rec;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

NoiseRealization draw_noise(const ScenarioConfig& cfg, std::optional<int> n_override,
                            std::uint64_t seed, Exec exec) {
  const int n = n_override.value_or(cfg.dims.n);
  if (n < 1) throw UsageError("population size must be >= 1");
  const int T = cfg.dims.T;
  const int dx = cfg.dims.d_x;

  NoiseRealization noise;
  noise.seed = seed;
  noise.n = n;
  noise.T = T;

  const Matrix leader_factor = covariance_factor(cfg.noise_cov_leader);
  std::mt19937_64 leader_rng(stream_seed(seed, 0));
  for (int k = 0; k < T; ++k) noise.leader_noise.push_back(gaussian(leader_rng, leader_factor));

  const Matrix follower_factor = covariance_factor(cfg.noise_cov_follower);
  const Matrix init_factor = covariance_factor(cfg.init_cov);
  const bool uniform = cfg.init_dist.family == InitFamily::uniform_box;
  noise.follower_init.resize(dx, n);
  noise.follower_noise.assign(static_cast<std::size_t>(T), Matrix(dx, n));

  auto draw_follower = [&](int i) {
    std::mt19937_64 rng(stream_seed(seed, static_cast<std::uint64_t>(i) + 1));
    if (uniform) {
      std::uniform_real_distribution<double> unit(0.0, 1.0);
      for (int r = 0; r < dx; ++r) {
        const double lo = cfg.init_dist.lower(r);
        const double hi = cfg.init_dist.upper(r);
        noise.follower_init(r, i) = lo + (hi - lo) * unit(rng);
      }
    } else {
      noise.follower_init.col(i) = cfg.init_mean + gaussian(rng, init_factor);
    }
    for (int k = 0; k < T; ++k) {
      noise.follower_noise[static_cast<std::size_t>(k)].col(i) = gaussian(rng, follower_factor);
    }
  };

  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) draw_follower(i);
  } else {
    for (int i = 0; i < n; ++i) draw_follower(i);
  }
  return noise;
}

SimulationRecord run_proposed(const ScenarioConfig& cfg, const GainSchedule& gains,
                              const NoiseRealization& noise, Exec exec) {
  return simulate(cfg, gains, noise, Strategy::proposed, exec);
}

SimulationRecord run_oracle(const ScenarioConfig& cfg, const GainSchedule& gains,
                            const NoiseRealization& noise, Exec exec) {
  return simulate(cfg, gains, noise, Strategy::oracle, exec);
}

double evaluate_cost(const ScenarioConfig& cfg, const SimulationRecord& record, Exec exec) {
  const int T = record.horizon();
  if (T != cfg.dims.T || static_cast<int>(record.leader_states.size()) < T ||
      static_cast<int>(record.mean_field.size()) < T ||
      static_cast<int>(record.follower_states.size()) < T) {
    throw ShapeError("simulation record does not match the scenario horizon");
  }
  const double n = static_cast<double>(record.population());
  KahanAccumulator total;
  for (int k = 0; k < T; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const Vector& x0 = record.leader_states[uk];
    const Vector& xbar = record.mean_field[uk];
    const Vector& u0 = record.leader_actions[uk];
    const Matrix& X = record.follower_states[uk];
    const Matrix& U = record.follower_actions[uk];
    if (X.rows() != cfg.dims.d_x || U.rows() != cfg.dims.d_u || U.cols() != X.cols()) {
      throw ShapeError("simulation record shapes do not match the scenario at t=" +
                       std::to_string(k + 1));
    }
    const Vector gap = xbar - x0;
    total.add(x0.dot(cfg.Q0[uk] * x0) + gap.dot(cfg.F[uk] * gap) + u0.dot(cfg.R0[uk] * u0));

    const kernels::FollowerCostWeights w{cfg.Q[uk], cfg.P[uk], cfg.R[uk], cfg.H[uk], x0, xbar};
    const double followers = exec == Exec::parallel ? kernels::follower_cost_parallel(w, X, U)
                                                    : kernels::follower_cost_serial(w, X, U);
    total.add(followers / n);
  }
  return total.value();
}

}  // namespace mft
