#include "cli.hpp"

#include "mft/analysis.hpp"
#include "mft/errors.hpp"
#include "mft/model.hpp"
#include "mft/report.hpp"
#include "mft/riccati.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <ostream>
#include <set>

namespace mft::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string scenario;
  std::optional<std::uint64_t> seed;
  std::optional<int> n;
  std::vector<int> n_list;
  int replications = 0;
  int sample = 100;
  std::string out;
  std::string strategy = "proposed";
};

struct Context {
  std::string command;
  Options opt;
  std::ostream& out;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

std::uint64_t parse_seed_text(const std::string& text, const char* origin) {
  std::size_t used = 0;
  unsigned long long value = 0;
  try {
    value = std::stoull(text, &used, 10);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size() || text.front() == '-') {
    throw UsageError(std::string(origin) + " must be an unsigned 64-bit integer, got '" + text +
                     "'");
  }
  return value;
}

// --seed, then MFT_SEED, then the scenario's own seed.
std::uint64_t resolve_seed(const Options& opt, const ScenarioConfig& cfg) {
  if (opt.seed) return *opt.seed;
  if (const char* env = std::getenv("MFT_SEED"); env && *env) return parse_seed_text(env, "MFT_SEED");
  return cfg.seed;
}

fs::path output_dir(const Context& ctx) {
  fs::path dir = ctx.opt.out.empty() ? fs::path("out") / ctx.command : fs::path(ctx.opt.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_manifest(const Context& ctx, const fs::path& dir, const std::string& scenario,
                    std::uint64_t seed) {
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count();
  nlohmann::json manifest = {{"command", ctx.command},
                             {"scenario", scenario},
                             {"seed", seed},
                             {"out_dir", dir.string()},
                             {"version", MFT_VERSION},
                             {"duration_seconds", seconds}};
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

ScenarioConfig load_for(const Context& ctx) {
  if (ctx.opt.scenario.empty()) throw UsageError("a scenario file is required (--scenario PATH)");
  ScenarioConfig cfg = load_scenario(ctx.opt.scenario);
  if (ctx.opt.n) cfg = cfg.with_population(*ctx.opt.n);
  return cfg;
}

std::string matrix_text(const Matrix& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += "; ";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) s += ", ";
      s += format_number(m(i, j));
    }
  }
  return s + "]";
}

int cmd_solve(Context& ctx) {
  const ScenarioConfig cfg = load_for(ctx);
  const Synthesis syn = synthesize(cfg);
  const fs::path dir = output_dir(ctx);
  write_text(dir / "riccati.csv", riccati_csv(cfg.dims, syn.sol));
  write_text(dir / "gains.csv", gains_csv(cfg.dims, syn.gains));
  write_manifest(ctx, dir, ctx.opt.scenario, cfg.seed);

  const auto T = static_cast<std::size_t>(cfg.dims.T);
  ctx.out << "horizon T = " << T << (cfg.dims.leaderless() ? " (leaderless)" : "") << "\n";
  ctx.out << "M_breve(1) = " << matrix_text(syn.sol.M_breve[0]) << "\n";
  ctx.out << "M_bar(1) = " << matrix_text(syn.sol.M_bar[0]) << "\n";
  ctx.out << "M_breve(T) = " << matrix_text(syn.sol.M_breve[T - 1]) << "\n";
  ctx.out << "M_bar(T) = " << matrix_text(syn.sol.M_bar[T - 1]) << "\n";
  ctx.out << "L_breve(T) = " << matrix_text(syn.gains.L_breve[T - 1]) << "\n";
  ctx.out << "L_bar(T) = " << matrix_text(syn.gains.L_bar(T - 1)) << "\n";
  ctx.out << "wrote " << (dir / "riccati.csv").string() << ", " << (dir / "gains.csv").string()
          << "\n";
  return 0;
}

void simulate_to(Context& ctx, const ScenarioConfig& cfg, const std::string& scenario_label,
                 std::uint64_t seed, Strategy strategy, int sample) {
  const Synthesis syn = synthesize(cfg);
  const NoiseRealization noise = draw_noise(cfg, std::nullopt, seed);
  const SimulationRecord rec = strategy == Strategy::proposed ? run_proposed(cfg, syn.gains, noise)
                                                              : run_oracle(cfg, syn.gains, noise);
  const fs::path dir = output_dir(ctx);
  write_text(dir / "trajectory.csv", trajectory_csv(cfg.dims, rec));
  const std::vector<int> shown = sample_followers(cfg.dims.n, sample, seed);
  write_text(dir / "trajectory.svg",
             trajectory_svg(rec, shown,
                            std::string(strategy_name(strategy)) + " strategy, n = " +
                                std::to_string(cfg.dims.n)));
  write_manifest(ctx, dir, scenario_label, seed);

  const ConsensusMetrics m = consensus_metrics(rec, cfg.dims.T);
  ctx.out << "strategy = " << strategy_name(strategy) << ", n = " << cfg.dims.n
          << ", T = " << cfg.dims.T << ", seed = " << seed << "\n";
  ctx.out << "realized cost = " << format_number(rec.realized_cost) << "\n";
  ctx.out << "max |x_i - x0| at t=1: " << format_number(m.max_leader_gap_initial)
          << ", at t=T: " << format_number(m.max_leader_gap_final) << " (ratio "
          << format_number(m.max_leader_gap_final / m.max_leader_gap_initial) << ")\n";
  ctx.out << "follower std at t=1: " << format_number(m.std_initial)
          << ", at t=T: " << format_number(m.std_final) << "; follower mean at t=T: "
          << format_number(m.mean_final) << ", leader at t=T: "
          << format_number(rec.leader_states[static_cast<std::size_t>(cfg.dims.T) - 1](0)) << "\n";
  ctx.out << "wrote " << (dir / "trajectory.csv").string() << " (" << shown.size()
          << " followers plotted in trajectory.svg)\n";
}

int cmd_simulate(Context& ctx) {
  const ScenarioConfig cfg = load_for(ctx);
  if (ctx.opt.sample < 0) throw UsageError("--sample must be >= 0");
  simulate_to(ctx, cfg, ctx.opt.scenario, resolve_seed(ctx.opt, cfg),
              parse_strategy(ctx.opt.strategy), ctx.opt.sample);
  return 0;
}

int cmd_gap(Context& ctx) {
  const ScenarioConfig cfg = load_for(ctx);
  const int reps = ctx.opt.replications;
  if (reps < 0) throw UsageError("--replications must be >= 0");
  if (reps == 1) throw UsageError("--replications 1 leaves the standard error undefined; use 0 or >= 2");
  const std::uint64_t seed = resolve_seed(ctx.opt, cfg);
  const int n = cfg.dims.n;
  const Synthesis syn = synthesize(cfg);

  GapReport report = reps == 0
                         ? delta_j_closed_form(cfg, build_error_system(cfg, syn.aug, syn.gains), n)
                         : delta_j_monte_carlo(cfg, syn.gains, n, reps, seed);
  const fs::path dir = output_dir(ctx);
  write_text(dir / "gap.csv", gap_csv(report));
  write_manifest(ctx, dir, ctx.opt.scenario, seed);

  ctx.out << "n = " << n << "\n";
  ctx.out << "delta_j_closed = " << format_number(report.delta_j_closed) << "\n";
  ctx.out << "delta_j_exact (moment propagation) = " << format_number(delta_j_exact(cfg, syn, n))
          << "\n";
  if (report.delta_j_mc) {
    ctx.out << "delta_j_mc = " << format_number(report.delta_j_mc->mean) << " +/- "
            << format_number(report.delta_j_mc->standard_error) << " (" << reps
            << " paired replications)\n";
  }
  ctx.out << "wrote " << (dir / "gap.csv").string() << "\n";
  return 0;
}

int cmd_sweep(Context& ctx) {
  const std::set<int> distinct(ctx.opt.n_list.begin(), ctx.opt.n_list.end());
  if (distinct.size() < 2) throw UsageError("sweep needs at least two distinct --n values (e.g. --n 10,100,1000)");
  const ScenarioConfig cfg = load_for(ctx);
  const SweepResult sweep = convergence_sweep(cfg, ctx.opt.n_list);
  const fs::path dir = output_dir(ctx);
  write_text(dir / "sweep.csv", sweep_csv(sweep));
  write_text(dir / "sweep.svg", sweep_svg(sweep));
  write_manifest(ctx, dir, ctx.opt.scenario, cfg.seed);

  for (const auto& row : sweep.rows) {
    ctx.out << "n = " << row.n << ": delta_j = " << format_number(row.delta_j)
            << ", n * delta_j = " << format_number(row.n_times_delta_j) << "\n";
  }
  if (sweep.slope) {
    ctx.out << "fitted log-log slope = " << format_number(*sweep.slope) << "\n";
  } else {
    ctx.out << "fitted log-log slope = undefined (zero gap)\n";
  }
  ctx.out << "wrote " << (dir / "sweep.csv").string() << "\n";
  return 0;
}

int cmd_reproduce(Context& ctx, int example) {
  const ReproduceSpec spec = reproduce_spec(example);
  const std::string scenario = ctx.opt.scenario.empty() ? spec.scenario.string() : ctx.opt.scenario;
  const ScenarioConfig cfg = load_scenario(scenario);
  const std::uint64_t seed = ctx.opt.seed.value_or(spec.seed);
  simulate_to(ctx, cfg, scenario, seed, Strategy::proposed, spec.sample);
  return 0;
}

}  // namespace

ReproduceSpec reproduce_spec(int example) {
  if (example != 1 && example != 2) throw UsageError("unknown example " + std::to_string(example));
  ReproduceSpec spec;
  spec.scenario = fs::path(MFT_SCENARIO_DIR) / ("example" + std::to_string(example) + ".json");
  spec.seed = 1;
  spec.sample = 100;
  return spec;
}

ConsensusMetrics consensus_metrics(const SimulationRecord& record, int t_final) {
  auto at = [&](std::size_t k) {
    const auto x = record.follower_states[k].row(0);
    const double leader = record.leader_states[k](0);
    const double mean = x.mean();
    const double n = static_cast<double>(x.size());
    const double var = x.size() > 1 ? (x.array() - mean).square().sum() / (n - 1.0) : 0.0;
    return std::tuple{(x.array() - leader).abs().maxCoeff(), std::sqrt(var), mean};
  };
  ConsensusMetrics m;
  const auto [gap1, std1, mean1] = at(0);
  const auto [gapT, stdT, meanT] = at(static_cast<std::size_t>(t_final - 1));
  (void)mean1;
  m.max_leader_gap_initial = gap1;
  m.max_leader_gap_final = gapT;
  m.std_initial = std1;
  m.std_final = stdT;
  m.mean_final = meanT;
  return m;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Near-optimal decentralized control of leader-follower LQ networks", "mft"};
  app.require_subcommand(1);
  app.set_version_flag("--version", MFT_VERSION);

  Options opt;
  std::string seed_text;
  auto add_scenario = [&](CLI::App* sub) {
    sub->add_option("scenario_path", opt.scenario, "Scenario JSON file");
    sub->add_option("--scenario", opt.scenario, "Scenario JSON file");
  };
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option("--seed", seed_text, "Seed (falls back to MFT_SEED, then the scenario seed)");
  };
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", opt.out, "Output directory (default out/<command>)");
  };

  auto* solve = app.add_subcommand("solve", "Riccati recursions and gain schedule");
  add_scenario(solve);
  add_out(solve);

  std::optional<int> n_value;
  auto* simulate = app.add_subcommand("simulate", "Simulate the leader and followers");
  add_scenario(simulate);
  add_seed(simulate);
  add_out(simulate);
  simulate->add_option("--strategy", opt.strategy, "proposed | oracle")
      ->check(CLI::IsMember({"proposed", "oracle"}));
  simulate->add_option("--sample", opt.sample, "Followers drawn in the SVG");
  simulate->add_option("--n", n_value, "Override the population size");

  auto* gap = app.add_subcommand("gap", "Closed-form and Monte Carlo optimality gap");
  add_scenario(gap);
  add_seed(gap);
  add_out(gap);
  gap->add_option("--n", n_value, "Population size (default: scenario n)");
  gap->add_option("--replications", opt.replications, "Paired replications (0 = closed form only)");

  auto* sweep = app.add_subcommand("sweep", "Closed-form gap across population sizes");
  add_scenario(sweep);
  add_out(sweep);
  sweep->add_option("--n", opt.n_list, "Comma-separated population sizes")
      ->delimiter(',')
      ->required();

  auto* rep1 = app.add_subcommand("reproduce-example1", "Leader with 1000 followers, seed 1");
  auto* rep2 = app.add_subcommand("reproduce-example2", "Leaderless reference tracking, seed 1");
  for (auto* sub : {rep1, rep2}) {
    sub->add_option("--scenario", opt.scenario, "Override the shipped scenario file");
    add_seed(sub);
    add_out(sub);
  }

  std::vector<std::string> argv_store;
  argv_store.push_back("mft");
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, out, err);
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Context ctx{chosen->get_name(), opt, out};
  try {
    if (!seed_text.empty()) ctx.opt.seed = parse_seed_text(seed_text, "--seed");
    if (n_value) {
      if (*n_value < 1) throw UsageError("--n must be >= 1");
      ctx.opt.n = n_value;
    }
    if (chosen == solve) return cmd_solve(ctx);
    if (chosen == simulate) return cmd_simulate(ctx);
    if (chosen == gap) return cmd_gap(ctx);
    if (chosen == sweep) return cmd_sweep(ctx);
    if (chosen == rep1) return cmd_reproduce(ctx, 1);
    if (chosen == rep2) return cmd_reproduce(ctx, 2);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_input_error(e) ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mft::cli
