#include "mft/analysis.hpp"

#include "mft/errors.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <string>

namespace mft {

namespace {

// [[0, 0, 0], [0, V, V], [0, V, V]] in 3 d_x coordinates.
Matrix estimate_covariance(const Matrix& V) {
  const Eigen::Index dx = V.rows();
  Matrix C = Matrix::Zero(3 * dx, 3 * dx);
  C.block(dx, dx, dx, dx) = V;
  C.block(dx, 2 * dx, dx, dx) = V;
  C.block(2 * dx, dx, dx, dx) = V;
  C.block(2 * dx, 2 * dx, dx, dx) = V;
  return C;
}

Matrix block_diag(std::initializer_list<const Matrix*> blocks) {
  Eigen::Index size = 0;
  for (const Matrix* b : blocks) size += b->rows();
  Matrix out = Matrix::Zero(size, size);
  Eigen::Index at = 0;
  for (const Matrix* b : blocks) {
    out.block(at, at, b->rows(), b->cols()) = *b;
    at += b->rows();
  }
  return out;
}

// Expected value of sum_t y_t^T W_t y_t for y_{t+1} = F_t y_t + noise.
struct MomentSystem {
  std::vector<Matrix> F;
  std::vector<Matrix> W;
  Vector mean;
  Matrix cov;
  Matrix noise_cov;
};

double propagate_quadratic_cost(const MomentSystem& sys) {
  Vector m = sys.mean;
  Matrix P = sys.cov;
  KahanAccumulator cost;
  for (std::size_t k = 0; k < sys.F.size(); ++k) {
    cost.add(m.dot(sys.W[k] * m) + trace_of_product(sys.W[k], P));
    m = sys.F[k] * m;
    P = symmetrize(sys.F[k] * P * sys.F[k].transpose() + sys.noise_cov);
  }
  return cost.value();
}

MomentSystem aggregate_moments(const ScenarioConfig& cfg, const Synthesis& syn, int n,
                               Strategy strategy) {
  const Eigen::Index dx = cfg.dims.d_x;
  const Eigen::Index du = cfg.dims.d_u;
  const Eigen::Index du0 = cfg.dims.d_u0;
  const Matrix var_init = cfg.init_cov / static_cast<double>(n);
  const Matrix var_noise = cfg.noise_cov_follower / static_cast<double>(n);
  const GainSchedule& g = syn.gains;
  MomentSystem sys;

  if (strategy == Strategy::oracle) {
    for (std::size_t k = 0; k < syn.aug.Abar.size(); ++k) {
      const Matrix L = g.L_bar(k);
      sys.F.push_back(syn.aug.Abar[k] + syn.aug.Bbar[k] * L);
      sys.W.push_back(syn.aug.Qbar[k] + L.transpose() * syn.aug.Rbar[k] * L);
    }
    sys.mean.resize(2 * dx);
    sys.mean << cfg.leader_init, cfg.init_mean;
    const Matrix zero = Matrix::Zero(dx, dx);
    sys.cov = block_diag({&zero, &var_init});
    sys.noise_cov = block_diag({&cfg.noise_cov_leader, &var_noise});
    return sys;
  }

  // (x0, xbar, z)
  for (std::size_t k = 0; k < syn.aug.Abar.size(); ++k) {
    const Matrix& A = cfg.A[k];
    const Matrix& B = cfg.B[k];
    const Matrix coupling = B * g.L21[k] + cfg.E[k];
    Matrix F = Matrix::Zero(3 * dx, 3 * dx);
    F.block(0, 0, dx, dx) = cfg.A0[k] + cfg.B0[k] * g.L11[k];
    F.block(0, dx, dx, dx) = cfg.D0[k];
    F.block(0, 2 * dx, dx, dx) = cfg.B0[k] * g.L12[k];
    F.block(dx, 0, dx, dx) = coupling;
    F.block(dx, dx, dx, dx) = A + B * g.L_breve[k] + cfg.D[k];
    F.block(dx, 2 * dx, dx, dx) = B * (g.L22[k] - g.L_breve[k]);
    F.block(2 * dx, 0, dx, dx) = coupling;
    F.block(2 * dx, 2 * dx, dx, dx) = A + B * g.L22[k] + cfg.D[k];

    Matrix select = Matrix::Zero(2 * dx, 3 * dx);
    select.leftCols(2 * dx).setIdentity();
    Matrix K = Matrix::Zero(du0 + du, 3 * dx);
    if (du0 > 0) {
      K.block(0, 0, du0, dx) = g.L11[k];
      K.block(0, 2 * dx, du0, dx) = g.L12[k];
    }
    K.block(du0, 0, du, dx) = g.L21[k];
    K.block(du0, dx, du, dx) = g.L_breve[k];
    K.block(du0, 2 * dx, du, dx) = g.L22[k] - g.L_breve[k];

    sys.F.push_back(std::move(F));
    sys.W.push_back(select.transpose() * syn.aug.Qbar[k] * select +
                    K.transpose() * syn.aug.Rbar[k] * K);
  }
  sys.mean.resize(3 * dx);
  sys.mean << cfg.leader_init, cfg.init_mean, cfg.init_mean;
  const Matrix zero = Matrix::Zero(dx, dx);
  sys.cov = block_diag({&zero, &var_init, &zero});
  sys.noise_cov = block_diag({&cfg.noise_cov_leader, &var_noise, &zero});
  return sys;
}

// Follower deviations from the mean evolve identically under both strategies.
double deviation_cost(const ScenarioConfig& cfg, const GainSchedule& g, int n) {
  const double keep = 1.0 - 1.0 / static_cast<double>(n);
  Matrix C = keep * cfg.init_cov;
  KahanAccumulator cost;
  for (int k = 0; k < cfg.dims.T; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const Matrix& L = g.L_breve[uk];
    const Matrix W = cfg.Q[uk] + cfg.P[uk] + cfg.H[uk] + L.transpose() * cfg.R[uk] * L;
    cost.add(trace_of_product(W, C));
    const Matrix closed = cfg.A[uk] + cfg.B[uk] * L;
    C = symmetrize(closed * C * closed.transpose() + keep * cfg.noise_cov_follower);
  }
  return cost.value();
}

void require_population(int n) {
  if (n < 1) throw UsageError("population size n must be >= 1, got " + std::to_string(n));
}

MonteCarloEstimate summarize(const std::vector<double>& samples) {
  MonteCarloEstimate est;
  est.replications = static_cast<int>(samples.size());
  const double count = static_cast<double>(samples.size());
  est.mean = compensated_sum(samples) / count;
  std::vector<double> squares(samples.size());
  for (std::size_t r = 0; r < samples.size(); ++r) {
    const double dev = samples[r] - est.mean;
    squares[r] = dev * dev;
  }
  const double variance = samples.size() > 1 ? compensated_sum(squares) / (count - 1.0) : 0.0;
  est.standard_error = std::sqrt(variance / count);
  return est;
}

// Runs body(r) for r in [0, count), in parallel when requested. The first
// exception by replication index is rethrown after the loop.
template <class Body>
void for_each_replication(int count, Exec exec, Body&& body) {
  std::exception_ptr failure;
  int failed_at = count;
  std::mutex guard;
  auto guarded = [&](int r) {
    try {
      body(r);
    } catch (...) {
      std::lock_guard lock(guard);
      if (r < failed_at) {
        failed_at = r;
        failure = std::current_exception();
      }
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (int r = 0; r < count; ++r) guarded(r);
  } else {
    for (int r = 0; r < count; ++r) guarded(r);
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

ErrorSystem build_error_system(const ScenarioConfig& cfg, const AugmentedSystem& aug,
                               const GainSchedule& gains) {
  const Eigen::Index dx = cfg.dims.d_x;
  const auto T = static_cast<std::size_t>(cfg.dims.T);
  if (gains.L_breve.size() != T || aug.Abar.size() != T) {
    throw ShapeError("gain schedule / augmented system horizon does not match T");
  }
  ErrorSystem err;
  for (std::size_t k = 0; k < T; ++k) {
    const Matrix& B0 = cfg.B0[k];
    const Matrix& B = cfg.B[k];
    Matrix At = Matrix::Zero(3 * dx, 3 * dx);
    At.block(0, 0, dx, dx) = cfg.A0[k] + B0 * gains.L11[k];
    At.block(0, dx, dx, dx) = B0 * gains.L12[k] + cfg.D0[k];
    At.block(0, 2 * dx, dx, dx) = -cfg.D0[k];
    At.block(dx, 0, dx, dx) = B * gains.L21[k] + cfg.E[k];
    At.block(dx, dx, dx, dx) = cfg.A[k] + B * gains.L22[k] + cfg.D[k];
    At.block(2 * dx, 2 * dx, dx, dx) = cfg.A[k] + B * gains.L_breve[k] + cfg.D[k];

    const Matrix Lbar = gains.L_bar(k);
    const Matrix& Lb = gains.L_breve[k];
    Matrix Qt = Matrix::Zero(3 * dx, 3 * dx);
    Qt.topLeftCorner(2 * dx, 2 * dx) = -aug.Qbar[k] - Lbar.transpose() * aug.Rbar[k] * Lbar;
    Qt.bottomRightCorner(dx, dx) = cfg.Q[k] + cfg.P[k] + cfg.F[k] + Lb.transpose() * cfg.R[k] * Lb;

    err.A_tilde.push_back(std::move(At));
    err.Q_tilde.push_back(symmetrize(Qt));
  }
  err.M_tilde.resize(T);
  err.M_tilde[T - 1] = err.Q_tilde[T - 1];
  for (std::size_t k = T - 1; k-- > 0;) {
    err.M_tilde[k] = symmetrize(err.A_tilde[k].transpose() * err.M_tilde[k + 1] * err.A_tilde[k] +
                                err.Q_tilde[k]);
  }
  return err;
}

GapReport delta_j_closed_form(const ScenarioConfig& cfg, const ErrorSystem& err, int n) {
  require_population(n);
  const double inv_n = 1.0 / static_cast<double>(n);
  GapReport report;
  report.n = n;
  report.initial_term = trace_of_product(estimate_covariance(cfg.init_cov * inv_n), err.M_tilde[0]);
  const Matrix noise = estimate_covariance(cfg.noise_cov_follower * inv_n);
  KahanAccumulator total;
  total.add(report.initial_term);
  for (std::size_t k = 0; k + 1 < err.M_tilde.size(); ++k) {
    report.noise_terms.push_back(trace_of_product(noise, err.M_tilde[k + 1]));
    total.add(report.noise_terms.back());
  }
  report.delta_j_closed = total.value();
  return report;
}

double expected_cost_exact(const ScenarioConfig& cfg, const Synthesis& syn, int n,
                           Strategy strategy) {
  require_population(n);
  return propagate_quadratic_cost(aggregate_moments(cfg, syn, n, strategy)) +
         deviation_cost(cfg, syn.gains, n);
}

double delta_j_exact(const ScenarioConfig& cfg, const Synthesis& syn, int n) {
  require_population(n);
  return propagate_quadratic_cost(aggregate_moments(cfg, syn, n, Strategy::proposed)) -
         propagate_quadratic_cost(aggregate_moments(cfg, syn, n, Strategy::oracle));
}

std::uint64_t replication_seed(std::uint64_t base_seed, int replication) {
  return stream_seed(base_seed ^ 0x5851f42d4c957f2dULL, static_cast<std::uint64_t>(replication));
}

GapReport delta_j_monte_carlo(const ScenarioConfig& cfg, const GainSchedule& gains, int n,
                              int replications, std::uint64_t seed,
                              const MonteCarloOptions& options) {
  require_population(n);
  if (replications < 2) {
    throw UsageError("Monte Carlo needs at least 2 replications for a standard error, got " +
                     std::to_string(replications));
  }
  std::vector<double> diff(static_cast<std::size_t>(replications));
  for_each_replication(replications, options.exec, [&](int r) {
    const std::uint64_t s = replication_seed(seed, r);
    const NoiseRealization noise = draw_noise(cfg, n, s, Exec::serial);
    const double proposed = run_proposed(cfg, gains, noise, Exec::serial).realized_cost;
    double oracle = 0.0;
    if (options.independent_draws) {
      const NoiseRealization other = draw_noise(cfg, n, ~s, Exec::serial);
      oracle = run_oracle(cfg, gains, other, Exec::serial).realized_cost;
    } else {
      oracle = run_oracle(cfg, gains, noise, Exec::serial).realized_cost;
    }
    diff[static_cast<std::size_t>(r)] = proposed - oracle;
  });

  GapReport report = delta_j_closed_form(
      cfg, build_error_system(cfg, build_augmented(cfg), gains), n);
  report.delta_j_mc = summarize(diff);
  return report;
}

MonteCarloEstimate monte_carlo_cost(const ScenarioConfig& cfg, const GainSchedule& gains, int n,
                                    Strategy strategy, int replications, std::uint64_t seed,
                                    Exec exec) {
  require_population(n);
  if (replications < 2) throw UsageError("Monte Carlo needs at least 2 replications");
  std::vector<double> cost(static_cast<std::size_t>(replications));
  for_each_replication(replications, exec, [&](int r) {
    const NoiseRealization noise = draw_noise(cfg, n, replication_seed(seed, r), Exec::serial);
    const SimulationRecord rec = strategy == Strategy::proposed
                                     ? run_proposed(cfg, gains, noise, Exec::serial)
                                     : run_oracle(cfg, gains, noise, Exec::serial);
    cost[static_cast<std::size_t>(r)] = rec.realized_cost;
  });
  return summarize(cost);
}

SweepResult convergence_sweep(const ScenarioConfig& cfg, const std::vector<int>& n_values) {
  if (n_values.empty()) throw UsageError("sweep needs at least one population size");
  for (int n : n_values) require_population(n);

  const Synthesis syn = synthesize(cfg);
  const ErrorSystem err = build_error_system(cfg, syn.aug, syn.gains);
  SweepResult result;
  for (int n : n_values) {
    const double gap = delta_j_closed_form(cfg, err, n).delta_j_closed;
    result.rows.push_back({n, gap, static_cast<double>(n) * gap});
  }

  double lo = result.rows.front().n_times_delta_j;
  double hi = lo;
  for (const auto& row : result.rows) {
    lo = std::min(lo, row.n_times_delta_j);
    hi = std::max(hi, row.n_times_delta_j);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  result.max_relative_spread = scale > 0.0 ? (hi - lo) / scale : 0.0;

  const bool all_positive = std::all_of(result.rows.begin(), result.rows.end(),
                                        [](const SweepRow& r) { return r.delta_j > 0.0; });
  if (all_positive) {
    double mx = 0.0, my = 0.0;
    for (const auto& row : result.rows) {
      mx += std::log(static_cast<double>(row.n));
      my += std::log(row.delta_j);
    }
    mx /= static_cast<double>(result.rows.size());
    my /= static_cast<double>(result.rows.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& row : result.rows) {
      const double dx = std::log(static_cast<double>(row.n)) - mx;
      sxy += dx * (std::log(row.delta_j) - my);
      sxx += dx * dx;
    }
    if (sxx > 0.0) result.slope = sxy / sxx;
  }
  return result;
}

CentralizedResult centralized_oracle(const ScenarioConfig& cfg, int n, int replications,
                                     std::uint64_t seed) {
  require_population(n);
  if (n > kCentralizedMaxFollowers) {
    throw UsageError("centralized oracle supports n <= " +
                     std::to_string(kCentralizedMaxFollowers) + ", got " + std::to_string(n));
  }
  const Eigen::Index dx = cfg.dims.d_x;
  const Eigen::Index du = cfg.dims.d_u;
  const Eigen::Index du0 = cfg.dims.d_u0;
  const Eigen::Index agents = n + 1;
  const Eigen::Index N = agents * dx;
  const Eigen::Index M = du0 + n * du;
  const double inv_n = 1.0 / static_cast<double>(n);
  const Matrix I = Matrix::Identity(dx, dx);

  // Selector picking agent a's state out of the stacked vector (a = 0 is the leader).
  auto select = [&](Eigen::Index a) {
    Matrix S = Matrix::Zero(dx, N);
    S.block(0, a * dx, dx, dx) = I;
    return S;
  };

  std::vector<Matrix> A_big, B_big, Q_big, R_big;
  for (int k = 0; k < cfg.dims.T; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    Matrix A = Matrix::Zero(N, N);
    Matrix B = Matrix::Zero(N, M);
    A.block(0, 0, dx, dx) = cfg.A0[uk];
    if (du0 > 0) B.block(0, 0, dx, du0) = cfg.B0[uk];
    for (Eigen::Index i = 1; i < agents; ++i) {
      A.block(0, i * dx, dx, dx) = cfg.D0[uk] * inv_n;
      A.block(i * dx, 0, dx, dx) = cfg.E[uk];
      for (Eigen::Index j = 1; j < agents; ++j) A.block(i * dx, j * dx, dx, dx) = cfg.D[uk] * inv_n;
      A.block(i * dx, i * dx, dx, dx) += cfg.A[uk];
      B.block(i * dx, du0 + (i - 1) * du, dx, du) = cfg.B[uk];
    }

    const Matrix leader = select(0);
    Matrix mean_gap = -leader;
    for (Eigen::Index i = 1; i < agents; ++i) mean_gap += inv_n * select(i);

    Matrix Q = leader.transpose() * cfg.Q0[uk] * leader +
               mean_gap.transpose() * cfg.F[uk] * mean_gap;
    for (Eigen::Index i = 1; i < agents; ++i) {
      const Matrix own = select(i);
      const Matrix rel = own - leader;
      Q += inv_n * (own.transpose() * cfg.Q[uk] * own + rel.transpose() * cfg.P[uk] * rel);
      for (Eigen::Index j = 1; j < agents; ++j) {
        const Matrix pair = own - select(j);
        Q += (0.5 * inv_n * inv_n) * (pair.transpose() * cfg.H[uk] * pair);
      }
    }

    Matrix R = Matrix::Zero(M, M);
    if (du0 > 0) R.block(0, 0, du0, du0) = cfg.R0[uk];
    for (Eigen::Index i = 0; i < n; ++i) R.block(du0 + i * du, du0 + i * du, du, du) = cfg.R[uk] * inv_n;

    A_big.push_back(std::move(A));
    B_big.push_back(std::move(B));
    Q_big.push_back(symmetrize(Q));
    R_big.push_back(std::move(R));
  }

  const std::vector<Matrix> value = backward_riccati(A_big, B_big, Q_big, R_big, "centralized");

  Vector mean(N);
  Matrix cov = Matrix::Zero(N, N);
  Matrix noise = Matrix::Zero(N, N);
  mean.head(dx) = cfg.leader_init;
  noise.block(0, 0, dx, dx) = cfg.noise_cov_leader;
  for (Eigen::Index i = 1; i < agents; ++i) {
    mean.segment(i * dx, dx) = cfg.init_mean;
    cov.block(i * dx, i * dx, dx, dx) = cfg.init_cov;
    noise.block(i * dx, i * dx, dx, dx) = cfg.noise_cov_follower;
  }

  KahanAccumulator cost;
  cost.add(mean.dot(value[0] * mean) + trace_of_product(cov, value[0]));
  for (std::size_t k = 0; k + 1 < value.size(); ++k) cost.add(trace_of_product(noise, value[k + 1]));

  CentralizedResult result;
  result.exact_cost = cost.value();
  if (replications > 0) {
    const ScenarioConfig small = cfg.with_population(n);
    const Synthesis syn = synthesize(small);
    result.oracle_mc = monte_carlo_cost(small, syn.gains, n, Strategy::oracle, replications, seed);
    result.proposed_mc =
        monte_carlo_cost(small, syn.gains, n, Strategy::proposed, replications, seed);
  }
  return result;
}

std::vector<Vector> relative_errors(const SimulationRecord& proposed,
                                    const SimulationRecord& oracle) {
  if (proposed.strategy != Strategy::proposed || oracle.strategy != Strategy::oracle ||
      proposed.leader_states.size() != oracle.leader_states.size()) {
    throw ShapeError("relative_errors needs a paired proposed and oracle record");
  }
  std::vector<Vector> xi;
  for (std::size_t k = 0; k < proposed.leader_states.size(); ++k) {
    const Eigen::Index dx = proposed.leader_states[k].size();
    Vector v(3 * dx);
    v << oracle.leader_states[k] - proposed.leader_states[k],
        oracle.mean_field[k] - proposed.z[k], proposed.mean_field[k] - proposed.z[k];
    xi.push_back(std::move(v));
  }
  return xi;
}

double error_dynamics_residual(const ErrorSystem& err, const std::vector<Vector>& xi,
                               const NoiseRealization& noise) {
  double worst = 0.0;
  for (std::size_t k = 0; k + 1 < xi.size() && k < err.A_tilde.size(); ++k) {
    const Vector wbar = noise.follower_noise[k].rowwise().mean();
    const Eigen::Index dx = wbar.size();
    Vector drive = Vector::Zero(3 * dx);
    drive.segment(dx, dx) = wbar;
    drive.segment(2 * dx, dx) = wbar;
    const Vector predicted = err.A_tilde[k] * xi[k] + drive;
    const double scale = 1.0 + xi[k + 1].cwiseAbs().maxCoeff();
    worst = std::max(worst, (xi[k + 1] - predicted).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

double deviation_mismatch(const SimulationRecord& proposed, const SimulationRecord& oracle) {
  double worst = 0.0;
  auto compare = [&](const Matrix& X, const Matrix& S) {
    const Vector xm = X.rowwise().mean();
    const Vector sm = S.rowwise().mean();
    const double scale = 1.0 + std::max(X.cwiseAbs().maxCoeff(), S.cwiseAbs().maxCoeff());
    const double diff = ((X.colwise() - xm) - (S.colwise() - sm)).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff / scale);
  };
  for (std::size_t k = 0; k < proposed.follower_states.size(); ++k) {
    compare(proposed.follower_states[k], oracle.follower_states[k]);
  }
  for (std::size_t k = 0; k < proposed.follower_actions.size(); ++k) {
    compare(proposed.follower_actions[k], oracle.follower_actions[k]);
  }
  return worst;
}

}  // namespace mft
