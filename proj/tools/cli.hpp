// Command-line front end. `run_cli` is the whole program minus process exit,
// so tests can drive it in-process.
//
// Exit status: 0 success, 1 runtime/numerical failure, 2 usage/validation.
#pragma once

#include "mft/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace mft::cli {

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shipped scenario and documented seed behind reproduce-example1/2.
struct ReproduceSpec {
  std::filesystem::path scenario;
  std::uint64_t seed = 1;
  int sample = 100;
};

ReproduceSpec reproduce_spec(int example);

/// Spread of the followers around the leader and around their own mean.
struct ConsensusMetrics {
  double max_leader_gap_initial = 0.0;  ///< max_i |x^i_1 - x^0_1|
  double max_leader_gap_final = 0.0;    ///< max_i |x^i_t - x^0_t| at the final t
  double std_initial = 0.0;             ///< sample std of followers at t = 1
  double std_final = 0.0;
  double mean_final = 0.0;
};

/// Metrics on the first state coordinate; `t_final` is 1-based.
ConsensusMetrics consensus_metrics(const SimulationRecord& record, int t_final);

}  // namespace mft::cli
