// CSV and SVG emission. CSV is the canonical output: UTF-8, comma separated,
// one header row, '\n' line endings, numbers in shortest round-trip form.
#pragma once

#include "mft/analysis.hpp"
#include "mft/riccati.hpp"
#include "mft/simulate.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mft {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

std::string riccati_csv(const Dimensions& dims, const RiccatiSolution& sol);
std::string gains_csv(const Dimensions& dims, const GainSchedule& gains);

/// One row per (t, agent) for t = 1..T+1; agent 0 is the leader. Action
/// cells are blank at t = T+1 and past an agent's input dimension. The zbar
/// columns carry z_t for proposed runs and the realized mean field for
/// oracle runs.
std::string trajectory_csv(const Dimensions& dims, const SimulationRecord& record);

std::string gap_csv(const GapReport& report);
std::string sweep_csv(const SweepResult& sweep);

/// First k indices of a seeded shuffle of 0..n-1.
std::vector<int> sample_followers(int n, int k, std::uint64_t seed);

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  double stroke_width = 1.0;
  std::string color = "#4477aa";
};

struct ChartOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_log = false;
};

/// Minimal SVG line chart, one <path> per series.
std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& options);

/// Leader (thick) plus the selected followers, first state coordinate.
std::string trajectory_svg(const SimulationRecord& record, const std::vector<int>& followers,
                           std::string_view title);

std::string sweep_svg(const SweepResult& sweep);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace mft
