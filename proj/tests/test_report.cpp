#include "support.hpp"

#include "mft/report.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace mft;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("numbers are written in shortest round-trip form") {
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(-25.0) == "-25");
  CHECK(format_number(1e-20) == "1e-20");
  const double x = 0.06583245547137329;
  CHECK(std::stod(format_number(x)) == x);
}

TEST_CASE("riccati and gain tables") {
  const ScenarioConfig cfg = load_scenario(testing::scenario_path("example1.json"));
  const Synthesis syn = synthesize(cfg);
  const auto ric = lines_of(riccati_csv(cfg.dims, syn.sol));
  CHECK(ric.front() ==
        "t,M_breve[0][0],M_bar[0][0],M_bar[0][1],M_bar[1][0],M_bar[1][1]");
  CHECK(ric.size() == 42);
  CHECK(ric[40] == "40,8,26,-25,-25,27");
  CHECK(ric[41] == "41,0,0,0,0,0");

  const auto gains = lines_of(gains_csv(cfg.dims, syn.gains));
  CHECK(gains.front() == "t,L_breve[0][0],L11[0][0],L12[0][0],L21[0][0],L22[0][0]");
  CHECK(gains.size() == 41);
  CHECK(gains.back() == "40,-0,-0,-0,-0,-0");

  const ScenarioConfig ex2 = load_scenario(testing::scenario_path("example2.json"));
  const Synthesis syn2 = synthesize(ex2);
  CHECK(lines_of(gains_csv(ex2.dims, syn2.gains)).front() == "t,L_breve[0][0],L21[0][0],L22[0][0]");
}

TEST_CASE("trajectory table layout") {
  testing::ScalarParams p;
  p.T = 2;
  p.n = 3;
  const ScenarioConfig cfg = testing::scalar_scenario(p);
  const Synthesis syn = synthesize(cfg);
  const SimulationRecord rec = run_proposed(cfg, syn.gains, draw_noise(cfg, std::nullopt, 1));
  const auto rows = lines_of(trajectory_csv(cfg.dims, rec));
  CHECK(rows.front() == "t,agent_id,state[0],action[0],zbar[0]");
  CHECK(rows.size() == 1 + 3 * 4);
  CHECK(rows[1].rfind("1,0,2,", 0) == 0);
  CHECK(rows[1].substr(rows[1].size() - 2) == ",1");
  CHECK(rows[9].rfind("3,0,", 0) == 0);
  CHECK(count(rows[9], ",,") == 1);
}

TEST_CASE("gap and sweep tables") {
  GapReport g;
  g.n = 20;
  g.delta_j_closed = 0.5;
  CHECK(gap_csv(g) == "n,delta_j_closed,delta_j_mc,mc_stderr,replications\n20,0.5,,,0\n");
  g.delta_j_mc = MonteCarloEstimate{0.25, 0.125, 10};
  CHECK(lines_of(gap_csv(g))[1] == "20,0.5,0.25,0.125,10");

  SweepResult s;
  s.rows = {{10, 0.5, 5}, {100, 0.05, 5}};
  CHECK(sweep_csv(s) == "n,delta_j,n_times_delta_j\n10,0.5,5\n100,0.05,5\n");
  CHECK(count(sweep_svg(s), "<path") == 1);
}

TEST_CASE("follower sample is a seeded subset") {
  const auto a = sample_followers(1000, 100, 1);
  const auto b = sample_followers(1000, 100, 1);
  const auto c = sample_followers(1000, 100, 2);
  CHECK(a == b);
  CHECK(a != c);
  const std::set<int> unique(a.begin(), a.end());
  CHECK(unique.size() == 100);
  CHECK(*unique.begin() >= 0);
  CHECK(*unique.rbegin() < 1000);
  CHECK(sample_followers(5, 100, 1).size() == 5);
}

TEST_CASE("trajectory chart has one path per follower plus the leader") {
  const ScenarioConfig cfg = load_scenario(testing::scenario_path("example1.json"));
  const Synthesis syn = synthesize(cfg);
  const SimulationRecord rec = run_proposed(cfg, syn.gains, draw_noise(cfg, std::nullopt, 1));
  const std::string svg = trajectory_svg(rec, sample_followers(cfg.dims.n, 100, 1), "t");
  CHECK(count(svg, "<path") == 101);
  CHECK(count(svg, "stroke-width=\"3.00\"") == 1);
  CHECK(svg.rfind("<svg", 0) == 0);
}
