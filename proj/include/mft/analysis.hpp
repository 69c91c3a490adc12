// Optimality-gap machinery: the relative-error system (leader error e0,
// mean-field error e, estimate error zeta), its Lyapunov recursion and the
// closed-form trace expression for the gap, plus the independent checks used
// to validate it: exact moment propagation, paired Monte Carlo, and a
// centralized LQR on the stacked (n+1)-agent system.
#pragma once

#include "mft/model.hpp"
#include "mft/riccati.hpp"
#include "mft/simulate.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mft {

/// Per-step matrices of the 3 d_x error system, index k is t = k + 1.
struct ErrorSystem {
  std::vector<Matrix> A_tilde;
  std::vector<Matrix> Q_tilde;
  std::vector<Matrix> M_tilde;  ///< M_tilde[T-1] = Q_tilde[T-1]
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
  int replications = 0;
};

struct GapReport {
  int n = 0;
  double delta_j_closed = 0.0;
  double initial_term = 0.0;        ///< contribution of VAR(xbar_1)
  std::vector<double> noise_terms;  ///< t = 1..T-1 contributions of VAR(wbar_t)
  std::optional<MonteCarloEstimate> delta_j_mc;
};

ErrorSystem build_error_system(const ScenarioConfig& cfg, const AugmentedSystem& aug,
                               const GainSchedule& gains);

/// Trace formula with VAR(xbar_1) = Sigma_x / n and VAR(wbar_t) = Sigma_w / n.
GapReport delta_j_closed_form(const ScenarioConfig& cfg, const ErrorSystem& err, int n);

/// Expected cost of a strategy for population n, computed exactly by
/// propagating first and second moments of the aggregate (leader, mean field,
/// estimate) state and of the follower deviations. Only means and covariances
/// of the initial distribution enter.
double expected_cost_exact(const ScenarioConfig& cfg, const Synthesis& syn, int n,
                           Strategy strategy);

/// Exact gap J(proposed) - J(oracle) by moment propagation. Agrees with the
/// closed form when D0 = 0; differs otherwise because x0 then depends on the
/// estimate error.
double delta_j_exact(const ScenarioConfig& cfg, const Synthesis& syn, int n);

struct MonteCarloOptions {
  bool independent_draws = false;  ///< default pairs both strategies on one realization
  Exec exec = Exec::parallel;      ///< parallelism across replications
};

/// Seed of replication r.
std::uint64_t replication_seed(std::uint64_t base_seed, int replication);

/// Mean and standard error of cost(proposed) - cost(oracle) over paired
/// replications. The closed-form fields are filled too.
GapReport delta_j_monte_carlo(const ScenarioConfig& cfg, const GainSchedule& gains, int n,
                              int replications, std::uint64_t seed,
                              const MonteCarloOptions& options = {});

/// Monte Carlo mean realized cost of one strategy.
MonteCarloEstimate monte_carlo_cost(const ScenarioConfig& cfg, const GainSchedule& gains, int n,
                                    Strategy strategy, int replications, std::uint64_t seed,
                                    Exec exec = Exec::parallel);

struct SweepRow {
  int n = 0;
  double delta_j = 0.0;
  double n_times_delta_j = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  std::optional<double> slope;    ///< least-squares log-log slope; empty when any gap is 0
  double max_relative_spread = 0.0;  ///< of n * delta_j across rows
};

SweepResult convergence_sweep(const ScenarioConfig& cfg, const std::vector<int>& n_values);

inline constexpr int kCentralizedMaxFollowers = 8;

struct CentralizedResult {
  double exact_cost = 0.0;  ///< J* from the stacked Riccati recursion
  std::optional<MonteCarloEstimate> oracle_mc;
  std::optional<MonteCarloEstimate> proposed_mc;
};

/// Centralized LQR over the stacked (n+1) d_x state with the pairwise cost
/// expanded term by term. Requires n <= kCentralizedMaxFollowers. With
/// replications > 0 the oracle and proposed strategies are also simulated.
CentralizedResult centralized_oracle(const ScenarioConfig& cfg, int n, int replications = 0,
                                     std::uint64_t seed = 0);

/// (e0_t, e_t, zeta_t) for t = 1..T+1 from a paired proposed/oracle run.
std::vector<Vector> relative_errors(const SimulationRecord& proposed,
                                    const SimulationRecord& oracle);

/// Largest one-step prediction error of the error recursion over t, each
/// scaled by 1 + ||xi_{t+1}||_inf.
double error_dynamics_residual(const ErrorSystem& err, const std::vector<Vector>& xi,
                               const NoiseRealization& noise);

/// Largest mismatch between follower deviations from the mean (states and
/// actions) of a paired proposed/oracle run, scaled by 1 + the state magnitude.
double deviation_mismatch(const SimulationRecord& proposed, const SimulationRecord& oracle);

}  // namespace mft
