#include "mft/report.hpp"

#include "mft/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace mft {

std::string format_number(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

namespace {

void matrix_header(std::string& out, std::string_view name, Eigen::Index rows,
                   Eigen::Index cols) {
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out += ',';
      out += name;
      out += '[' + std::to_string(i) + "][" + std::to_string(j) + ']';
    }
  }
}

void matrix_cells(std::string& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out += ',';
      out += format_number(m(i, j));
    }
  }
}

void vector_header(std::string& out, std::string_view name, Eigen::Index size) {
  for (Eigen::Index i = 0; i < size; ++i) {
    out += ',';
    out += name;
    out += '[' + std::to_string(i) + ']';
  }
}

void vector_cells(std::string& out, const Vector& v, Eigen::Index width) {
  for (Eigen::Index i = 0; i < width; ++i) {
    out += ',';
    if (i < v.size()) out += format_number(v(i));
  }
}

struct Bounds {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void pad() {
    if (!std::isfinite(lo)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
  }
};

std::string escape_xml(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string svg_number(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(2);
  os << v;
  return os.str();
}

}  // namespace

std::string riccati_csv(const Dimensions& dims, const RiccatiSolution& sol) {
  std::string out = "t";
  matrix_header(out, "M_breve", dims.d_x, dims.d_x);
  matrix_header(out, "M_bar", 2 * dims.d_x, 2 * dims.d_x);
  out += '\n';
  for (std::size_t k = 0; k < sol.M_breve.size(); ++k) {
    out += std::to_string(k + 1);
    matrix_cells(out, sol.M_breve[k]);
    matrix_cells(out, sol.M_bar[k]);
    out += '\n';
  }
  return out;
}

std::string gains_csv(const Dimensions& dims, const GainSchedule& gains) {
  std::string out = "t";
  matrix_header(out, "L_breve", dims.d_u, dims.d_x);
  if (!dims.leaderless()) {
    matrix_header(out, "L11", dims.d_u0, dims.d_x);
    matrix_header(out, "L12", dims.d_u0, dims.d_x);
  }
  matrix_header(out, "L21", dims.d_u, dims.d_x);
  matrix_header(out, "L22", dims.d_u, dims.d_x);
  out += '\n';
  for (std::size_t k = 0; k < gains.L_breve.size(); ++k) {
    out += std::to_string(k + 1);
    matrix_cells(out, gains.L_breve[k]);
    if (!dims.leaderless()) {
      matrix_cells(out, gains.L11[k]);
      matrix_cells(out, gains.L12[k]);
    }
    matrix_cells(out, gains.L21[k]);
    matrix_cells(out, gains.L22[k]);
    out += '\n';
  }
  return out;
}

std::string trajectory_csv(const Dimensions& dims, const SimulationRecord& record) {
  const Eigen::Index action_width = std::max(dims.d_u0, dims.d_u);
  std::string out = "t,agent_id";
  vector_header(out, "state", dims.d_x);
  vector_header(out, "action", action_width);
  vector_header(out, "zbar", dims.d_x);
  out += '\n';

  const Vector empty;
  const auto steps = record.leader_states.size();
  const auto T = record.leader_actions.size();
  for (std::size_t k = 0; k < steps; ++k) {
    const Vector& estimate =
        record.strategy == Strategy::proposed ? record.z[k] : record.mean_field[k];
    const std::string t = std::to_string(k + 1);

    out += t + ",0";
    vector_cells(out, record.leader_states[k], dims.d_x);
    vector_cells(out, k < T ? record.leader_actions[k] : empty, action_width);
    vector_cells(out, estimate, dims.d_x);
    out += '\n';

    const Matrix& X = record.follower_states[k];
    for (Eigen::Index i = 0; i < X.cols(); ++i) {
      out += t + ',' + std::to_string(i + 1);
      vector_cells(out, X.col(i), dims.d_x);
      vector_cells(out, k < T ? Vector(record.follower_actions[k].col(i)) : empty, action_width);
      vector_cells(out, estimate, dims.d_x);
      out += '\n';
    }
  }
  return out;
}

std::string gap_csv(const GapReport& report) {
  std::string out = "n,delta_j_closed,delta_j_mc,mc_stderr,replications\n";
  out += std::to_string(report.n) + ',' + format_number(report.delta_j_closed) + ',';
  if (report.delta_j_mc) {
    out += format_number(report.delta_j_mc->mean) + ',' +
           format_number(report.delta_j_mc->standard_error) + ',' +
           std::to_string(report.delta_j_mc->replications);
  } else {
    out += ",,0";
  }
  out += '\n';
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = "n,delta_j,n_times_delta_j\n";
  for (const auto& row : sweep.rows) {
    out += std::to_string(row.n) + ',' + format_number(row.delta_j) + ',' +
           format_number(row.n_times_delta_j) + '\n';
  }
  return out;
}

std::vector<int> sample_followers(int n, int k, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(std::max(n, 0)));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(stream_seed(seed, 0x73616d706c65ULL));
  // Fisher-Yates with an explicit draw so the order does not depend on the
  // standard library's shuffle implementation.
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
  order.resize(static_cast<std::size_t>(std::clamp(k, 0, n)));
  return order;
}

std::string line_chart_svg(const std::vector<Series>& series, const ChartOptions& options) {
  constexpr double width = 800, height = 500, left = 70, right = 20, top = 40, bottom = 55;
  auto tx = [&](double v) { return options.log_log ? std::log10(v) : v; };

  Bounds bx, by;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (options.log_log && (s.x[i] <= 0 || s.y[i] <= 0)) continue;
      bx.add(tx(s.x[i]));
      by.add(tx(s.y[i]));
    }
  }
  bx.pad();
  by.pad();
  auto px = [&](double v) { return left + (tx(v) - bx.lo) / (bx.hi - bx.lo) * (width - left - right); };
  auto py = [&](double v) {
    return height - bottom - (tx(v) - by.lo) / (by.hi - by.lo) * (height - top - bottom);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
         "viewBox=\"0 0 800 500\">\n";
  out += "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
  out += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + escape_xml(options.title) + "</text>\n";
  out += "<line x1=\"70\" y1=\"445\" x2=\"780\" y2=\"445\" stroke=\"black\"/>\n";
  out += "<line x1=\"70\" y1=\"40\" x2=\"70\" y2=\"445\" stroke=\"black\"/>\n";
  const std::string prefix = options.log_log ? "log10 " : "";
  out += "<text x=\"425\" y=\"485\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\">" + escape_xml(prefix + options.x_label) + " [" +
         svg_number(bx.lo) + ", " + svg_number(bx.hi) + "]</text>\n";
  out += "<text x=\"18\" y=\"245\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"13\" transform=\"rotate(-90 18 245)\">" +
         escape_xml(prefix + options.y_label) + " [" + svg_number(by.lo) + ", " +
         svg_number(by.hi) + "]</text>\n";

  for (const auto& s : series) {
    std::string d;
    bool pen_down = false;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.y[i]) || (options.log_log && (s.x[i] <= 0 || s.y[i] <= 0))) {
        pen_down = false;
        continue;
      }
      d += pen_down ? " L" : (d.empty() ? "M" : " M");
      d += svg_number(px(s.x[i])) + ' ' + svg_number(py(s.y[i]));
      pen_down = true;
    }
    out += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + s.color + "\" stroke-width=\"" +
           svg_number(s.stroke_width) + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

std::string trajectory_svg(const SimulationRecord& record, const std::vector<int>& followers,
                           std::string_view title) {
  std::vector<double> t(record.leader_states.size());
  std::iota(t.begin(), t.end(), 1.0);
  std::vector<Series> series;
  for (int i : followers) {
    Series s;
    s.x = t;
    for (const auto& X : record.follower_states) s.y.push_back(X(0, i));
    s.stroke_width = 0.6;
    s.color = "#88aadd";
    series.push_back(std::move(s));
  }
  Series leader;
  leader.x = t;
  for (const auto& x0 : record.leader_states) leader.y.push_back(x0(0));
  leader.stroke_width = 3.0;
  leader.color = "#cc2222";
  series.push_back(std::move(leader));
  return line_chart_svg(series, {std::string(title), "t", "state[0]", false});
}

std::string sweep_svg(const SweepResult& sweep) {
  Series s;
  for (const auto& row : sweep.rows) {
    s.x.push_back(row.n);
    s.y.push_back(row.delta_j);
  }
  s.stroke_width = 2.0;
  return line_chart_svg({s}, {"optimality gap vs population size", "n", "delta_j", true});
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

}  // namespace mft
