// Serial reference kernels vs their OpenMP versions, plus Monte Carlo
// replications run serially or across threads.
#include "mft/analysis.hpp"
#include "mft/kernels.hpp"
#include "mft/model.hpp"
#include "mft/riccati.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

namespace {

double seconds_per_call(const std::function<void()>& fn, int repeats) {
  fn();
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / repeats;
}

void report(const std::string& name, double serial, double parallel) {
  std::printf("%-28s serial %10.3f ms   parallel %10.3f ms   speedup %5.2fx\n", name.c_str(),
              1e3 * serial, 1e3 * parallel, serial / parallel);
}

const char* kScalarScenario = R"({
  "dims": {"d_x": 1, "d_u": 1, "d_u0": 1, "T": 40, "n": 1000},
  "A0": 1, "B0": 0.8, "D0": 0.1, "A": 1, "B": 0.9, "D": 0.05, "E": 0.15,
  "Q0": 1, "R0": 200, "F": 20, "Q": 2, "P": 5, "R": 100, "H": 1,
  "init_dist": {"type": "uniform", "lower": [0], "upper": [4]},
  "noise_cov_leader": 0.02, "noise_cov_follower": 0.05, "leader_init": [6], "seed": 1
})";

}  // namespace

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::stoi(argv[1]) : 200000;
  const int d = 3;
  std::printf("threads: %d, followers: %d, d_x = d_u = %d\n", omp_get_max_threads(), n, d);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  auto random_matrix = [&](Eigen::Index rows, Eigen::Index cols) {
    mft::Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    return m;
  };

  const mft::Matrix X = random_matrix(d, n);
  const mft::Matrix W = random_matrix(d, n);
  const mft::Matrix A = random_matrix(d, d) * 0.3;
  const mft::Matrix B = random_matrix(d, d) * 0.3;
  const mft::Matrix L = random_matrix(d, d) * 0.1;
  const mft::Matrix Q = mft::Matrix::Identity(d, d);
  const mft::Vector offset = random_matrix(d, 1);
  const mft::Vector drift = random_matrix(d, 1);
  mft::Matrix U(d, n), X_next(d, n);

  const mft::kernels::FollowerStep step{A, B, L, offset, drift};
  report("column_mean",
         seconds_per_call([&] { (void)mft::kernels::column_mean_serial(X); }, 50),
         seconds_per_call([&] { (void)mft::kernels::column_mean_parallel(X); }, 50));
  report("advance",
         seconds_per_call([&] { mft::kernels::advance_serial(step, X, W, U, X_next); }, 20),
         seconds_per_call([&] { mft::kernels::advance_parallel(step, X, W, U, X_next); }, 20));

  const mft::Vector leader = mft::Vector::Zero(d);
  const mft::Vector mean = mft::kernels::column_mean_serial(X);
  const mft::kernels::FollowerCostWeights weights{Q, Q, Q, Q, leader, mean};
  report("follower_cost",
         seconds_per_call([&] { (void)mft::kernels::follower_cost_serial(weights, X, U); }, 20),
         seconds_per_call([&] { (void)mft::kernels::follower_cost_parallel(weights, X, U); }, 20));

  const mft::ScenarioConfig cfg = mft::parse_scenario(kScalarScenario, "bench");
  const mft::Synthesis syn = mft::synthesize(cfg);
  mft::MonteCarloOptions serial_mc;
  serial_mc.exec = mft::Exec::serial;
  const int reps = 64;
  report("monte_carlo (64 x n=1000)",
         seconds_per_call([&] { mft::delta_j_monte_carlo(cfg, syn.gains, 1000, reps, 1, serial_mc); }, 2),
         seconds_per_call([&] { mft::delta_j_monte_carlo(cfg, syn.gains, 1000, reps, 1); }, 2));
  return 0;
}
