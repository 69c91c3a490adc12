// Forward simulation of the leader and n followers under the proposed
// decentralized strategy (mean field replaced by the deterministic estimate
// z_t) or under the mean-field-sharing optimal strategy, plus realized cost.
#pragma once

#include "mft/kernels.hpp"
#include "mft/model.hpp"
#include "mft/riccati.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace mft {

/// All primitive randomness for one sample path. Follower i's draws come from
/// a stream keyed by (seed, i), so they do not change when n changes.
struct NoiseRealization {
  std::uint64_t seed = 0;
  int n = 0;
  int T = 0;
  std::vector<Vector> leader_noise;    ///< T entries, w^0_t
  std::vector<Matrix> follower_noise;  ///< T entries, d_x x n, column i is w^i_t
  Matrix follower_init;                ///< d_x x n, column i is x^i_1
};

enum class Strategy { proposed, oracle };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

/// Realized trajectories. States have T+1 snapshots (t = 1..T+1), actions T.
/// Under the oracle strategy these are the s / v processes.
struct SimulationRecord {
  Strategy strategy = Strategy::proposed;
  std::vector<Vector> leader_states;
  std::vector<Matrix> follower_states;  ///< d_x x n per t
  std::vector<Vector> leader_actions;   ///< d_u0 per t (empty vectors when leaderless)
  std::vector<Matrix> follower_actions; ///< d_u x n per t
  std::vector<Vector> mean_field;
  std::vector<Vector> z;  ///< proposed runs only; empty for oracle runs
  double realized_cost = 0.0;

  int horizon() const { return static_cast<int>(leader_actions.size()); }
  int population() const {
    return follower_states.empty() ? 0 : static_cast<int>(follower_states.front().cols());
  }
};

/// Stream key for (seed, stream index); stream 0 is the leader.
std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream);

NoiseRealization draw_noise(const ScenarioConfig& cfg, std::optional<int> n_override,
                            std::uint64_t seed, Exec exec = Exec::parallel);

SimulationRecord run_proposed(const ScenarioConfig& cfg, const GainSchedule& gains,
                              const NoiseRealization& noise, Exec exec = Exec::parallel);

SimulationRecord run_oracle(const ScenarioConfig& cfg, const GainSchedule& gains,
                            const NoiseRealization& noise, Exec exec = Exec::parallel);

/// Realized cost of one sample path, summed over t = 1..T. The
/// pairwise H term is evaluated through the mean-deviation form in O(n).
double evaluate_cost(const ScenarioConfig& cfg, const SimulationRecord& record,
                     Exec exec = Exec::parallel);

}  // namespace mft
