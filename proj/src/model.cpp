#include "mft/model.hpp"

#include "mft/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

namespace mft {

using json = nlohmann::json;

MatrixSchedule MatrixSchedule::constant(const Matrix& m, int horizon) {
  MatrixSchedule s;
  s.values.assign(static_cast<std::size_t>(horizon), m);
  s.broadcast = true;
  return s;
}

ScenarioConfig ScenarioConfig::with_population(int n) const {
  if (n < 1) throw UsageError("population size n must be >= 1, got " + std::to_string(n));
  ScenarioConfig copy = *this;
  copy.dims.n = n;
  return copy;
}

namespace {

const std::set<std::string> kKnownKeys = {
    "dims", "A0", "B0", "D0", "A", "B", "D", "E", "Q0", "R0", "F", "Q", "P", "R", "H",
    "init_mean", "init_cov", "init_dist", "noise_cov_leader", "noise_cov_follower",
    "leader_init", "seed"};

std::string where(std::string_view origin) { return std::string(origin) + ": "; }

double number_at(const json& j, const std::string& what, std::string_view origin) {
  if (!j.is_number()) throw ParseError(where(origin) + what + " must be a number");
  return j.get<double>();
}

// Number (1x1) or row-major nested array.
Matrix parse_matrix(const json& j, const std::string& name, std::string_view origin) {
  if (j.is_number()) return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) {
    throw ParseError(where(origin) + name + " must be a number or a non-empty nested array");
  }
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j.front().is_array()) {
    throw ParseError(where(origin) + name + " must be a nested array (one inner array per row)");
  }
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw ShapeError(where(origin) + name + " row " + std::to_string(r) + " is ragged");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = number_at(row[static_cast<std::size_t>(c)],
                          name + "[" + std::to_string(r) + "][" + std::to_string(c) + "]", origin);
    }
  }
  return m;
}

Vector parse_vector(const json& j, const std::string& name, std::string_view origin) {
  if (j.is_number()) return Vector::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty()) throw ParseError(where(origin) + name + " must be a number or array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number_at(j[i], name + "[" + std::to_string(i) + "]", origin);
  }
  return v;
}

// Single matrix (broadcast over T) or {"schedule": [T matrices]}.
MatrixSchedule parse_schedule(const json& j, const std::string& name, int horizon,
                              std::string_view origin) {
  if (j.is_object()) {
    if (!j.contains("schedule") || j.size() != 1) {
      throw ParseError(where(origin) + name + " object form must be {\"schedule\": [...]}");
    }
    const json& seq = j.at("schedule");
    if (!seq.is_array()) throw ParseError(where(origin) + name + ".schedule must be an array");
    if (static_cast<int>(seq.size()) != horizon) {
      throw ShapeError(where(origin) + name + " schedule has " + std::to_string(seq.size()) +
                       " entries, expected T = " + std::to_string(horizon));
    }
    MatrixSchedule s;
    for (std::size_t k = 0; k < seq.size(); ++k) {
      s.values.push_back(parse_matrix(seq[k], name + " at t=" + std::to_string(k + 1), origin));
    }
    return s;
  }
  return MatrixSchedule::constant(parse_matrix(j, name, origin), horizon);
}

bool all_zero(const MatrixSchedule& s) {
  for (const auto& m : s.values) {
    if (m.size() != 0 && m.cwiseAbs().maxCoeff() != 0.0) return false;
  }
  return true;
}

int positive_int(const json& dims, const char* key, std::string_view origin, int minimum) {
  if (!dims.contains(key)) throw ParseError(where(origin) + "dims." + key + " is missing");
  const json& v = dims.at(key);
  if (!v.is_number_integer()) throw ParseError(where(origin) + "dims." + key + " must be an integer");
  const auto value = v.get<long long>();
  if (value < minimum || value > 1'000'000'000) {
    throw ShapeError(where(origin) + "dims." + key + " = " + std::to_string(value) +
                     " is out of range (minimum " + std::to_string(minimum) + ")");
  }
  return static_cast<int>(value);
}

void check_shape(const MatrixSchedule& s, const std::string& name, Eigen::Index rows,
                 Eigen::Index cols, int horizon) {
  if (static_cast<int>(s.size()) != horizon) {
    throw ShapeError(name + " has " + std::to_string(s.size()) + " time steps, expected " +
                     std::to_string(horizon));
  }
  for (std::size_t k = 0; k < s.size(); ++k) {
    const Matrix& m = s[k];
    if (m.rows() != rows || m.cols() != cols) {
      std::ostringstream os;
      os << name << " at t=" << k + 1 << " is " << m.rows() << "x" << m.cols() << ", expected "
         << rows << "x" << cols;
      throw ShapeError(os.str());
    }
    if (!m.allFinite()) {
      throw ShapeError(name + " at t=" + std::to_string(k + 1) + " has non-finite entries");
    }
  }
}

void check_matrix_shape(const Matrix& m, const std::string& name, Eigen::Index rows,
                        Eigen::Index cols) {
  if (m.rows() != rows || m.cols() != cols) {
    std::ostringstream os;
    os << name << " is " << m.rows() << "x" << m.cols() << ", expected " << rows << "x" << cols;
    throw ShapeError(os.str());
  }
  if (!m.allFinite()) throw ShapeError(name + " has non-finite entries");
}

[[noreturn]] void violation(const std::string& what, int t, double eigenvalue) {
  std::ostringstream os;
  os.precision(17);
  os << "assumption violated: " << what;
  if (t > 0) os << " at t=" << t;
  os << " (smallest eigenvalue " << eigenvalue << ")";
  throw AssumptionError(os.str());
}

void require_psd(const Matrix& m, const std::string& what, int t) {
  if (!is_psd(m)) violation(what + " must be positive semi-definite", t, min_eigenvalue(m));
}

void require_pd(const Matrix& m, const std::string& what, int t) {
  if (!is_pd(m)) violation(what + " must be positive definite", t, min_eigenvalue(m));
}

void symmetrize_all(MatrixSchedule& s) {
  for (auto& m : s.values) m = symmetrize(m);
}

Matrix qbar_at(const ScenarioConfig& cfg, std::size_t k) {
  const int dx = cfg.dims.d_x;
  const Matrix pf = cfg.P[k] + cfg.F[k];
  Matrix qbar(2 * dx, 2 * dx);
  qbar.topLeftCorner(dx, dx) = cfg.Q0[k] + pf;
  qbar.topRightCorner(dx, dx) = -pf;
  qbar.bottomLeftCorner(dx, dx) = -pf;
  qbar.bottomRightCorner(dx, dx) = cfg.Q[k] + pf;
  return qbar;
}

json matrix_to_json(const Matrix& m) {
  if (m.rows() == 1 && m.cols() == 1) return m(0, 0);
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json schedule_to_json(const MatrixSchedule& s) {
  if (s.broadcast) return matrix_to_json(s[0]);
  json seq = json::array();
  for (const auto& m : s.values) seq.push_back(matrix_to_json(m));
  return json{{"schedule", seq}};
}

}  // namespace

void validate(const ScenarioConfig& cfg) {
  const Dimensions& d = cfg.dims;
  if (d.d_x < 1 || d.d_u < 1 || d.d_u0 < 0 || d.T < 1 || d.n < 1) {
    throw ShapeError("dimensions must satisfy d_x, d_u, T, n >= 1 and d_u0 >= 0");
  }
  const int T = d.T;
  check_shape(cfg.A0, "A0", d.d_x, d.d_x, T);
  check_shape(cfg.B0, "B0", d.d_x, d.d_u0, T);
  check_shape(cfg.D0, "D0", d.d_x, d.d_x, T);
  check_shape(cfg.A, "A", d.d_x, d.d_x, T);
  check_shape(cfg.B, "B", d.d_x, d.d_u, T);
  check_shape(cfg.D, "D", d.d_x, d.d_x, T);
  check_shape(cfg.E, "E", d.d_x, d.d_x, T);
  check_shape(cfg.Q0, "Q0", d.d_x, d.d_x, T);
  check_shape(cfg.R0, "R0", d.d_u0, d.d_u0, T);
  check_shape(cfg.F, "F", d.d_x, d.d_x, T);
  check_shape(cfg.Q, "Q", d.d_x, d.d_x, T);
  check_shape(cfg.P, "P", d.d_x, d.d_x, T);
  check_shape(cfg.R, "R", d.d_u, d.d_u, T);
  check_shape(cfg.H, "H", d.d_x, d.d_x, T);

  check_matrix_shape(cfg.init_mean, "init_mean", d.d_x, 1);
  check_matrix_shape(cfg.init_cov, "init_cov", d.d_x, d.d_x);
  check_matrix_shape(cfg.noise_cov_leader, "noise_cov_leader", d.d_x, d.d_x);
  check_matrix_shape(cfg.noise_cov_follower, "noise_cov_follower", d.d_x, d.d_x);
  check_matrix_shape(cfg.leader_init, "leader_init", d.d_x, 1);
  if (cfg.init_dist.family == InitFamily::uniform_box) {
    check_matrix_shape(cfg.init_dist.lower, "init_dist.lower", d.d_x, 1);
    check_matrix_shape(cfg.init_dist.upper, "init_dist.upper", d.d_x, 1);
    if ((cfg.init_dist.upper.array() < cfg.init_dist.lower.array()).any()) {
      throw ShapeError("init_dist: upper bound below lower bound");
    }
  }

  if (d.leaderless() && !(all_zero(cfg.D0) && all_zero(cfg.Q0))) {
    throw AssumptionError("leaderless mode (d_u0 = 0) requires D0 = 0 and Q0 = 0");
  }

  require_psd(cfg.init_cov, "init_cov", 0);
  require_psd(cfg.noise_cov_leader, "noise_cov_leader", 0);
  require_psd(cfg.noise_cov_follower, "noise_cov_follower", 0);

  for (int k = 0; k < T; ++k) {
    const auto uk = static_cast<std::size_t>(k);
    const int t = k + 1;
    require_psd(cfg.Q[uk] + cfg.P[uk] + cfg.H[uk], "Q + P + H", t);
    require_psd(qbar_at(cfg, uk), "Qbar", t);
    require_pd(cfg.R[uk], "R", t);
    if (!d.leaderless()) require_pd(cfg.R0[uk], "R0", t);
  }
}

ScenarioConfig parse_scenario(std::string_view text, std::string_view origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(where(origin) + "malformed JSON: " + e.what());
  }
  if (!root.is_object()) throw ParseError(where(origin) + "top level must be an object");
  for (const auto& item : root.items()) {
    if (!kKnownKeys.contains(item.key())) {
      throw ParseError(where(origin) + "unknown field '" + item.key() + "'");
    }
  }
  if (!root.contains("dims") || !root.at("dims").is_object()) {
    throw ParseError(where(origin) + "field 'dims' is missing or not an object");
  }

  ScenarioConfig cfg;
  const json& dims = root.at("dims");
  cfg.dims.d_x = positive_int(dims, "d_x", origin, 1);
  cfg.dims.d_u = positive_int(dims, "d_u", origin, 1);
  cfg.dims.T = positive_int(dims, "T", origin, 1);
  cfg.dims.n = positive_int(dims, "n", origin, 1);
  std::optional<int> d_u0;
  if (dims.contains("d_u0")) d_u0 = positive_int(dims, "d_u0", origin, 0);
  for (const auto& item : dims.items()) {
    static const std::set<std::string> keys = {"d_x", "d_u", "d_u0", "T", "n"};
    if (!keys.contains(item.key())) {
      throw ParseError(where(origin) + "unknown field 'dims." + item.key() + "'");
    }
  }

  const int T = cfg.dims.T;
  const int dx = cfg.dims.d_x;
  const Matrix zero_x = Matrix::Zero(dx, dx);

  auto required = [&](const char* key) -> const json& {
    if (!root.contains(key)) throw ParseError(where(origin) + "field '" + key + "' is missing");
    return root.at(key);
  };
  auto schedule_or_zero = [&](const char* key) {
    if (!root.contains(key)) return MatrixSchedule::constant(zero_x, T);
    return parse_schedule(root.at(key), key, T, origin);
  };

  cfg.A0 = parse_schedule(required("A0"), "A0", T, origin);
  cfg.A = parse_schedule(required("A"), "A", T, origin);
  cfg.B = parse_schedule(required("B"), "B", T, origin);
  cfg.Q = parse_schedule(required("Q"), "Q", T, origin);
  cfg.R = parse_schedule(required("R"), "R", T, origin);
  cfg.D0 = schedule_or_zero("D0");
  cfg.D = schedule_or_zero("D");
  cfg.E = schedule_or_zero("E");
  cfg.Q0 = schedule_or_zero("Q0");
  cfg.F = schedule_or_zero("F");
  cfg.P = schedule_or_zero("P");
  cfg.H = schedule_or_zero("H");

  std::optional<MatrixSchedule> b0, r0;
  if (root.contains("B0")) b0 = parse_schedule(root.at("B0"), "B0", T, origin);
  if (root.contains("R0")) r0 = parse_schedule(root.at("R0"), "R0", T, origin);
  const bool leader_channel_zero = (!b0 || all_zero(*b0)) && (!r0 || all_zero(*r0));
  if (!d_u0) {
    if (leader_channel_zero) {
      d_u0 = 0;
    } else if (b0) {
      d_u0 = static_cast<int>(b0->cols());
    } else {
      throw ParseError(where(origin) + "field 'B0' is missing");
    }
  }
  cfg.dims.d_u0 = *d_u0;
  if (cfg.dims.leaderless()) {
    if (!leader_channel_zero) {
      throw AssumptionError(where(origin) + "d_u0 = 0 but B0 or R0 is non-zero");
    }
    cfg.B0 = MatrixSchedule::constant(Matrix(dx, 0), T);
    cfg.R0 = MatrixSchedule::constant(Matrix(0, 0), T);
  } else {
    if (!b0) throw ParseError(where(origin) + "field 'B0' is missing");
    if (!r0) throw ParseError(where(origin) + "field 'R0' is missing");
    cfg.B0 = std::move(*b0);
    cfg.R0 = std::move(*r0);
  }

  for (MatrixSchedule* s : {&cfg.Q0, &cfg.R0, &cfg.F, &cfg.Q, &cfg.P, &cfg.R, &cfg.H}) {
    symmetrize_all(*s);
  }

  cfg.init_dist.family = InitFamily::gaussian;
  if (root.contains("init_dist")) {
    const json& dist = root.at("init_dist");
    if (!dist.is_object() || !dist.contains("type") || !dist.at("type").is_string()) {
      throw ParseError(where(origin) + "init_dist must be an object with a string 'type'");
    }
    const auto type = dist.at("type").get<std::string>();
    if (type == "uniform") {
      if (!dist.contains("lower") || !dist.contains("upper")) {
        throw ParseError(where(origin) + "uniform init_dist needs 'lower' and 'upper'");
      }
      cfg.init_dist.family = InitFamily::uniform_box;
      cfg.init_dist.lower = parse_vector(dist.at("lower"), "init_dist.lower", origin);
      cfg.init_dist.upper = parse_vector(dist.at("upper"), "init_dist.upper", origin);
    } else if (type != "gaussian") {
      throw ParseError(where(origin) + "init_dist.type must be 'gaussian' or 'uniform', got '" +
                       type + "'");
    }
  }

  if (cfg.init_dist.family == InitFamily::uniform_box) {
    const Vector& lo = cfg.init_dist.lower;
    const Vector& hi = cfg.init_dist.upper;
    if (lo.size() != dx || hi.size() != dx) {
      throw ShapeError(where(origin) + "init_dist bounds must have d_x entries");
    }
    cfg.init_mean = 0.5 * (lo + hi);
    cfg.init_cov = ((hi - lo).array().square() / 12.0).matrix().asDiagonal();
    // Explicit moments are allowed only when they agree with the box.
    if (root.contains("init_mean")) {
      const Vector given = parse_vector(root.at("init_mean"), "init_mean", origin);
      if (given.size() != dx || !given.isApprox(cfg.init_mean, 1e-12)) {
        throw ShapeError(where(origin) + "init_mean disagrees with the uniform box centre");
      }
    }
    if (root.contains("init_cov")) {
      const Matrix given = parse_matrix(root.at("init_cov"), "init_cov", origin);
      if (given.rows() != dx || given.cols() != dx ||
          (given - cfg.init_cov).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + inf_norm(cfg.init_cov))) {
        throw ShapeError(where(origin) + "init_cov disagrees with the uniform box variance");
      }
    }
  } else {
    cfg.init_mean = parse_vector(required("init_mean"), "init_mean", origin);
    cfg.init_cov = symmetrize(parse_matrix(required("init_cov"), "init_cov", origin));
  }

  cfg.noise_cov_leader = root.contains("noise_cov_leader")
                             ? symmetrize(parse_matrix(root.at("noise_cov_leader"),
                                                       "noise_cov_leader", origin))
                             : zero_x;
  cfg.noise_cov_follower = symmetrize(
      parse_matrix(required("noise_cov_follower"), "noise_cov_follower", origin));
  cfg.leader_init = parse_vector(required("leader_init"), "leader_init", origin);

  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (!s.is_number_integer()) throw ParseError(where(origin) + "seed must be an integer");
    cfg.seed = s.is_number_unsigned() ? s.get<std::uint64_t>()
                                      : static_cast<std::uint64_t>(s.get<std::int64_t>());
  }

  try {
    validate(cfg);
  } catch (const ShapeError& e) {
    throw ShapeError(where(origin) + e.what());
  } catch (const AssumptionError& e) {
    throw AssumptionError(where(origin) + e.what());
  }
  return cfg;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::filesystem::path resolved = path;
  if (!std::filesystem::exists(resolved) && resolved.extension() != ".json") {
    std::filesystem::path with_suffix = resolved;
    with_suffix += ".json";
    if (std::filesystem::exists(with_suffix)) resolved = with_suffix;
  }
  std::ifstream in(resolved, std::ios::binary);
  if (!in) throw ParseError("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_scenario(buffer.str(), resolved.string());
}

std::string scenario_to_json(const ScenarioConfig& cfg) {
  json root;
  root["dims"] = {{"d_x", cfg.dims.d_x}, {"d_u", cfg.dims.d_u}, {"d_u0", cfg.dims.d_u0},
                  {"T", cfg.dims.T},     {"n", cfg.dims.n}};
  root["A0"] = schedule_to_json(cfg.A0);
  if (!cfg.dims.leaderless()) {
    root["B0"] = schedule_to_json(cfg.B0);
    root["R0"] = schedule_to_json(cfg.R0);
  }
  root["D0"] = schedule_to_json(cfg.D0);
  root["A"] = schedule_to_json(cfg.A);
  root["B"] = schedule_to_json(cfg.B);
  root["D"] = schedule_to_json(cfg.D);
  root["E"] = schedule_to_json(cfg.E);
  root["Q0"] = schedule_to_json(cfg.Q0);
  root["F"] = schedule_to_json(cfg.F);
  root["Q"] = schedule_to_json(cfg.Q);
  root["P"] = schedule_to_json(cfg.P);
  root["R"] = schedule_to_json(cfg.R);
  root["H"] = schedule_to_json(cfg.H);
  if (cfg.init_dist.family == InitFamily::uniform_box) {
    root["init_dist"] = {{"type", "uniform"},
                         {"lower", vector_to_json(cfg.init_dist.lower)},
                         {"upper", vector_to_json(cfg.init_dist.upper)}};
  } else {
    root["init_dist"] = {{"type", "gaussian"}};
    root["init_mean"] = vector_to_json(cfg.init_mean);
    root["init_cov"] = matrix_to_json(cfg.init_cov);
  }
  root["noise_cov_leader"] = matrix_to_json(cfg.noise_cov_leader);
  root["noise_cov_follower"] = matrix_to_json(cfg.noise_cov_follower);
  root["leader_init"] = vector_to_json(cfg.leader_init);
  root["seed"] = cfg.seed;
  return root.dump(2) + "\n";
}

void save_scenario(const ScenarioConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write scenario file '" + path.string() + "'");
  out << scenario_to_json(cfg);
}

AugmentedSystem build_augmented(const ScenarioConfig& cfg) {
  const int dx = cfg.dims.d_x;
  const int du = cfg.dims.d_u;
  const int du0 = cfg.dims.d_u0;
  AugmentedSystem aug;
  for (int k = 0; k < cfg.dims.T; ++k) {
    const auto uk = static_cast<std::size_t>(k);

    Matrix abar(2 * dx, 2 * dx);
    abar << cfg.A0[uk], cfg.D0[uk], cfg.E[uk], cfg.A[uk] + cfg.D[uk];

    Matrix bbar = Matrix::Zero(2 * dx, du0 + du);
    if (du0 > 0) bbar.topLeftCorner(dx, du0) = cfg.B0[uk];
    bbar.bottomRightCorner(dx, du) = cfg.B[uk];

    Matrix rbar = Matrix::Zero(du0 + du, du0 + du);
    if (du0 > 0) rbar.topLeftCorner(du0, du0) = cfg.R0[uk];
    rbar.bottomRightCorner(du, du) = cfg.R[uk];

    aug.Abar.push_back(std::move(abar));
    aug.Bbar.push_back(std::move(bbar));
    aug.Qbar.push_back(qbar_at(cfg, uk));
    aug.Rbar.push_back(std::move(rbar));
  }
  return aug;
}

}  // namespace mft
