#include "dmoc/cli.hpp"

#include <yaml-cpp/yaml.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dmoc/systems.hpp"

namespace dmoc::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const char* command_name(Command c) {
  switch (c) {
    case Command::kSimulate: return "simulate";
    case Command::kOptimize: return "optimize";
    case Command::kVerify: return "verify";
  }
  return "?";
}

ConfigError::ConfigError(const std::string& msg, int line_)
    : UsageError(line_ > 0 ? "line " + std::to_string(line_) + ": " + msg : msg), line(line_) {}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

int line_of(const YAML::Node& n) { return n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

void check_keys(const YAML::Node& n, const std::string& section, const std::set<std::string>& allowed) {
  if (!n.IsMap()) throw ConfigError("'" + section + "' must be a mapping", line_of(n));
  for (const auto& kv : n) {
    const std::string k = kv.first.as<std::string>();
    if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' in '" + section + "'", line_of(kv.first));
  }
}

double number(const YAML::Node& n, const std::string& field) {
  try {
    const double v = n.as<double>();
    if (!std::isfinite(v)) throw ConfigError(field + ": value must be finite", line_of(n));
    return v;
  } catch (const YAML::Exception&) {
    throw ConfigError(field + ": expected a number", line_of(n));
  }
}

int integer(const YAML::Node& n, const std::string& field) {
  try {
    return n.as<int>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field + ": expected an integer", line_of(n));
  }
}

bool boolean(const YAML::Node& n, const std::string& field) {
  try {
    return n.as<bool>();
  } catch (const YAML::Exception&) {
    throw ConfigError(field + ": expected on/off", line_of(n));
  }
}

std::string text(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) throw ConfigError(field + ": expected a string", line_of(n));
  return n.as<std::string>();
}

// Solver settings that converge on the built-in cases.
void case_defaults(const std::string& name, ShootingConfig& s) {
  s.init = InitStrategy::kLinear;
  if (name == "bb_case1" || name == "bb_case2") s.segments = 10;
  if (name == "bb_case2") s.homotopy = true;
  if (name == "cp_case1" || name == "cp_case2") {
    s.segments = 50;
    s.homotopy = true;
  }
}

// Reads one boundary state; missing entries keep the values in `s`.
void read_state(const YAML::Node& n, const std::string& section, const ModelSpec& m, ProductState& s) {
  const std::string a = m.label_a, u = m.label_u;
  check_keys(n, section, {a, a + "_deg", u, u + "_deg", "mu_a", "mu_u"});
  auto coord = [&](const std::string& label, const GroupElement& cur) {
    const bool rad = static_cast<bool>(n[label]), deg = static_cast<bool>(n[label + "_deg"]);
    if (rad && deg) throw ConfigError(section + ": give " + label + " or " + label + "_deg, not both", line_of(n));
    if (rad) return number(n[label], section + "." + label);
    if (deg) return number(n[label + "_deg"], section + "." + label + "_deg") * kDeg;
    return cur.scalar();
  };
  const double va = coord(a, s.ga), vu = coord(u, s.gu);
  const double ma = n["mu_a"] ? number(n["mu_a"], section + ".mu_a") : s.mu_a[0];
  const double mu = n["mu_u"] ? number(n["mu_u"], section + ".mu_u") : s.mu_u[0];
  s = scalar_state(m, va, vu, ma, mu);
}

}  // namespace

RunConfig parse_config(const std::string& yaml_text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(origin + ": " + e.msg, e.mark.line + 1);
  }
  if (!root || root.IsNull()) throw ConfigError(origin + ": empty configuration");
  check_keys(root, "top level",
             {"command", "case", "model", "horizon", "initial", "terminal", "solver", "controls", "output"});

  RunConfig cfg;
  if (root["command"]) {
    const std::string c = text(root["command"], "command");
    if (c == "simulate") {
      cfg.command = Command::kSimulate;
    } else if (c == "optimize") {
      cfg.command = Command::kOptimize;
    } else if (c == "verify") {
      cfg.command = Command::kVerify;
    } else {
      throw ConfigError("command: expected simulate, optimize or verify", line_of(root["command"]));
    }
  }

  // Problem: a built-in case, a model, or a case with model overrides.
  std::string model_name;
  std::map<std::string, double> params;
  if (root["case"]) {
    cfg.case_name = text(root["case"], "case");
    try {
      cfg.problem = benchmark_case(cfg.case_name).problem;
    } catch (const UsageError& e) {
      throw ConfigError(e.what(), line_of(root["case"]));
    }
    case_defaults(cfg.case_name, cfg.solver);
    model_name = cfg.problem.model.name;
    params = cfg.problem.model.params;
  }
  if (const YAML::Node m = root["model"]) {
    check_keys(m, "model", {"name", "params"});
    if (m["name"]) {
      const std::string name = text(m["name"], "model.name");
      if (!model_name.empty() && name != model_name) {
        throw ConfigError("model.name '" + name + "' does not match case " + cfg.case_name, line_of(m["name"]));
      }
      if (model_name.empty()) {
        model_name = name;
        params.clear();
      }
    }
    if (const YAML::Node ps = m["params"]) {
      if (!ps.IsMap()) throw ConfigError("model.params must be a mapping", line_of(ps));
      for (const auto& kv : ps) {
        const std::string k = kv.first.as<std::string>();
        params[k] = number(kv.second, "model.params." + k);
      }
    }
  }
  if (model_name.empty()) throw ConfigError(origin + ": either 'case' or 'model.name' is required");

  if (const YAML::Node hz = root["horizon"]) {
    check_keys(hz, "horizon", {"N", "h"});
    if (hz["N"]) cfg.problem.N = integer(hz["N"], "horizon.N");
    if (hz["h"]) params["h"] = number(hz["h"], "horizon.h");
  }
  try {
    const ModelSpec model = make_model(model_name, params);
    const bool fresh = cfg.case_name.empty();
    cfg.problem.model = model;
    if (fresh) {
      cfg.problem.s0 = scalar_state(model, 0.0, 0.0);
      cfg.problem.sf = scalar_state(model, 0.0, 0.0);
      cfg.problem.cost = quadratic_control_cost();
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const UsageError& e) {
    throw ConfigError(e.what(), line_of(root["model"] ? root["model"] : root["case"]));
  }
  if (cfg.problem.N < 1) throw ConfigError("horizon.N must be a positive integer", root["horizon"] ? line_of(root["horizon"]) : 0);
  if (root["initial"]) read_state(root["initial"], "initial", cfg.problem.model, cfg.problem.s0);
  if (root["terminal"]) read_state(root["terminal"], "terminal", cfg.problem.model, cfg.problem.sf);

  if (const YAML::Node s = root["solver"]) {
    check_keys(s, "solver",
               {"segments", "tol", "max_newton", "fd_eps", "damping", "min_step", "init", "homotopy",
                "homotopy_schedule", "warm_start"});
    ShootingConfig& sc = cfg.solver;
    if (s["segments"]) sc.segments = integer(s["segments"], "solver.segments");
    if (s["tol"]) sc.tol = number(s["tol"], "solver.tol");
    if (s["max_newton"]) sc.max_newton = integer(s["max_newton"], "solver.max_newton");
    if (s["fd_eps"]) sc.fd_eps = number(s["fd_eps"], "solver.fd_eps");
    if (s["damping"]) sc.damping = number(s["damping"], "solver.damping");
    if (s["min_step"]) sc.min_step = number(s["min_step"], "solver.min_step");
    if (s["init"]) {
      try {
        sc.init = parse_init(text(s["init"], "solver.init"));
      } catch (const UsageError& e) {
        throw ConfigError(e.what(), line_of(s["init"]));
      }
    }
    if (s["homotopy"]) sc.homotopy = boolean(s["homotopy"], "solver.homotopy");
    if (const YAML::Node hs = s["homotopy_schedule"]) {
      if (!hs.IsSequence()) throw ConfigError("solver.homotopy_schedule must be a list", line_of(hs));
      sc.homotopy_schedule.clear();
      for (const auto& v : hs) sc.homotopy_schedule.push_back(number(v, "solver.homotopy_schedule"));
    }
    if (s["warm_start"]) {
      cfg.warm_start = text(s["warm_start"], "solver.warm_start");
      sc.init = InitStrategy::kWarmStart;
    }
    try {
      sc.validate();
    } catch (const UsageError& e) {
      throw ConfigError(e.what(), line_of(s));
    }
    if (sc.init == InitStrategy::kWarmStart && cfg.warm_start.empty()) {
      throw ConfigError("solver.init: warm start needs solver.warm_start", line_of(s));
    }
  }

  if (const YAML::Node c = root["controls"]) {
    check_keys(c, "controls", {"kind", "value", "path"});
    if (c["kind"]) cfg.controls.kind = text(c["kind"], "controls.kind");
    if (cfg.controls.kind != "zero" && cfg.controls.kind != "constant" && cfg.controls.kind != "file") {
      throw ConfigError("controls.kind: expected zero, constant or file", line_of(c["kind"]));
    }
    if (c["value"]) cfg.controls.value = number(c["value"], "controls.value");
    if (c["path"]) cfg.controls.path = text(c["path"], "controls.path");
    if (cfg.controls.kind == "file" && cfg.controls.path.empty()) {
      throw ConfigError("controls.path is required for kind: file", line_of(c));
    }
  }
  if (const YAML::Node o = root["output"]) {
    check_keys(o, "output", {"dir"});
    if (o["dir"]) cfg.out_dir = text(o["dir"], "output.dir");
  }
  return cfg;
}

RunConfig load_config(const std::string& source) {
  if (!fs::is_regular_file(source)) {
    for (const auto& c : benchmark_cases()) {
      if (c.name == source) return parse_config("case: " + source + "\noutput:\n  dir: out/" + source + "\n", source);
    }
    throw ConfigError("no configuration file or built-in case named '" + source + "'");
  }
  std::ifstream in(source);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), source);
}

void apply(RunConfig& cfg, const Overrides& o) {
  if (o.out_dir) cfg.out_dir = *o.out_dir;
  if (o.segments) cfg.solver.segments = *o.segments;
  if (o.tol) cfg.solver.tol = *o.tol;
  if (o.max_iters) cfg.solver.max_newton = *o.max_iters;
  if (o.homotopy) cfg.solver.homotopy = *o.homotopy;
  try {
    cfg.solver.validate();
  } catch (const UsageError& e) {
    throw ConfigError(e.what());
  }
  if (cfg.solver.segments > cfg.problem.N) throw ConfigError("segments exceeds the horizon N");
}

// ---------------------------------------------------------------------------
// Artifacts

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Values of the theta and xi columns in artifact order.
std::pair<double, double> theta_xi(const ModelSpec& m, const ProductState& s) {
  if (m.label_a == "theta") return {s.ga.scalar(), s.gu.scalar()};
  return {s.gu.scalar(), s.ga.scalar()};
}

ProductState from_theta_xi(const ModelSpec& m, double theta, double xi, double mu_a, double mu_u) {
  if (m.label_a == "theta") return scalar_state(m, theta, xi, mu_a, mu_u);
  return scalar_state(m, xi, theta, mu_a, mu_u);
}

json state_json(const ModelSpec& m, const ProductState& s) {
  const auto [th, xi] = theta_xi(m, s);
  return json{{"theta", th}, {"xi", xi}, {"mu_a", s.mu_a[0]}, {"mu_u", s.mu_u[0]}};
}

void require_scalar_model(const ModelSpec& m) {
  if (m.ga.dim() != 1 || m.gu.dim() != 1 || m.label_a == m.label_u ||
      (m.label_a != "theta" && m.label_u != "theta")) {
    throw UsageError("artifacts support the built-in one-dimensional models only");
  }
}

// State-equation residual of step k, rebuilt from stored states.
std::vector<double> state_residuals(const OcProblem& p, const Trajectory& t) {
  const Trajectory rebuilt = trajectory_from_states(p.model, t.states, t.controls);
  std::vector<double> out;
  for (int k = 0; k < rebuilt.N(); ++k) {
    out.push_back(kkt::state(p, rebuilt.states[k], rebuilt.increments[k], rebuilt.states[k + 1],
                             rebuilt.controls[k], rebuilt.controls[k + 1])
                      .lpNorm<Eigen::Infinity>());
  }
  out.push_back(0.0);
  return out;
}

void write_trajectory_csv(const fs::path& file, const OcProblem& p, const Trajectory& t) {
  const std::vector<double> res = state_residuals(p, t);
  std::ofstream os(file);
  os << "k,t,theta,xi,mu_a,mu_u,u,res_state\n";
  for (int k = 0; k < static_cast<int>(t.states.size()); ++k) {
    const ProductState& s = t.states[k];
    const auto [th, xi] = theta_xi(p.model, s);
    os << k << ',' << fmt(k * t.h) << ',' << fmt(th) << ',' << fmt(xi) << ',' << fmt(s.mu_a[0]) << ','
       << fmt(s.mu_u[0]) << ',' << fmt(t.controls[k][0]) << ',' << fmt(res[k]) << '\n';
  }
  if (!os) throw std::runtime_error("cannot write " + file.string());
}

void write_multipliers_csv(const fs::path& file, const MultiplierSet& m) {
  std::ofstream os(file);
  os << "k,lam1,lam2,lam3,lam4,lam5,lam6\n";
  for (int k = 0; k < m.N(); ++k) {
    os << k << ',' << fmt(m.lam1[k][0]) << ',' << fmt(m.lam2[k][0]) << ',' << fmt(m.lam3[k][0]) << ','
       << fmt(m.lam4[k][0]) << ',' << fmt(m.lam5[k][0]) << ',' << fmt(m.lam6[k][0]) << '\n';
  }
  if (!os) throw std::runtime_error("cannot write " + file.string());
}

json problem_json(const RunConfig& cfg) {
  const OcProblem& p = cfg.problem;
  json params = json::object();
  for (const auto& [k, v] : p.model.params) params[k] = v;
  return json{{"command", command_name(cfg.command)},
              {"case", cfg.case_name},
              {"model", {{"name", p.model.name}, {"params", params}}},
              {"N", p.N},
              {"h", p.model.h},
              {"initial", state_json(p.model, p.s0)},
              {"terminal", state_json(p.model, p.sf)}};
}

void write_json(const fs::path& file, const json& j) {
  std::ofstream os(file);
  os << j.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write " + file.string());
}

}  // namespace

void write_solution(const std::string& dir, const RunConfig& cfg, const OcSolution& sol) {
  require_scalar_model(cfg.problem.model);
  fs::create_directories(dir);
  const bool have = !sol.trajectory.states.empty();
  if (have) {
    write_trajectory_csv(fs::path(dir) / "trajectory.csv", cfg.problem, sol.trajectory);
    write_multipliers_csv(fs::path(dir) / "multipliers.csv", sol.multipliers);
  }
  const ShootingConfig& s = cfg.solver;
  json j = problem_json(cfg);
  j["solver"] = {{"segments", s.segments},      {"tol", s.tol},         {"max_newton", s.max_newton},
                 {"fd_eps", s.fd_eps},          {"damping", s.damping}, {"min_step", s.min_step},
                 {"init", init_name(s.init)},   {"homotopy", s.homotopy},
                 {"homotopy_schedule", s.homotopy_schedule}};
  std::string worst;
  if (have) worst = certify(cfg.problem, sol.trajectory.states, sol.trajectory.controls, sol.multipliers).worst();
  j["result"] = {{"converged", sol.converged},
                 {"numerical_failure", sol.numerical_failure},
                 {"residual_norm", sol.residual_norm},
                 {"shooting_residual", sol.shooting_residual},
                 {"worst_residual", worst},
                 {"cost", sol.cost},
                 {"newton_iters", sol.newton_iters},
                 {"homotopy_scales", sol.homotopy},
                 {"residual_history", sol.history},
                 {"message", sol.message}};
  write_json(fs::path(dir) / "metadata.json", j);
}

void write_simulation(const std::string& dir, const RunConfig& cfg, const Trajectory& traj) {
  require_scalar_model(cfg.problem.model);
  fs::create_directories(dir);
  write_trajectory_csv(fs::path(dir) / "trajectory.csv", cfg.problem, traj);
  fs::remove(fs::path(dir) / "multipliers.csv");
  json j = problem_json(cfg);
  j["N"] = traj.N();
  j["result"] = {{"cost", total_cost(cfg.problem, traj)}};
  write_json(fs::path(dir) / "metadata.json", j);
}

namespace {

std::vector<std::vector<double>> read_csv(const fs::path& file, const std::vector<std::string>& header) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open " + file.string());
  std::string line;
  std::getline(in, line);
  std::string want;
  for (std::size_t i = 0; i < header.size(); ++i) want += (i ? "," : "") + header[i];
  if (line != want) throw ConfigError(file.string() + ": header must be '" + want + "'", 1);
  std::vector<std::vector<double>> rows;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    int col = 0;
    while (std::getline(ss, cell, ',')) {
      ++col;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (cell.empty() || *end != '\0') {
        throw ConfigError(file.string() + ": row " + std::to_string(row) + ", column " + std::to_string(col) +
                              ": not a number",
                          row);
      }
      vals.push_back(v);
    }
    if (vals.size() != header.size()) {
      throw ConfigError(file.string() + ": row " + std::to_string(row) + " has " + std::to_string(vals.size()) +
                            " columns, expected " + std::to_string(header.size()),
                        row);
    }
    rows.push_back(std::move(vals));
  }
  return rows;
}

ProductState state_from_json(const ModelSpec& m, const json& j) {
  return from_theta_xi(m, j.at("theta").get<double>(), j.at("xi").get<double>(), j.at("mu_a").get<double>(),
                       j.at("mu_u").get<double>());
}

}  // namespace

OcProblem Artifact::problem() const {
  OcProblem p;
  p.model = make_model(model, params);
  p.N = N;
  p.s0 = s0;
  p.sf = sf;
  p.cost = quadratic_control_cost();
  return p;
}

Artifact load_artifact(const std::string& path) {
  fs::path dir = path;
  if (fs::is_regular_file(dir)) dir = dir.parent_path();
  if (dir.empty()) dir = ".";
  const fs::path meta = dir / "metadata.json";
  std::ifstream in(meta);
  if (!in) throw ConfigError("no metadata.json in " + dir.string());
  Artifact a;
  try {
    const json j = json::parse(in);
    a.command = j.at("command").get<std::string>();
    a.model = j.at("model").at("name").get<std::string>();
    for (const auto& [k, v] : j.at("model").at("params").items()) a.params[k] = v.get<double>();
    a.N = j.at("N").get<int>();
    const ModelSpec m = make_model(a.model, a.params);
    a.s0 = state_from_json(m, j.at("initial"));
    a.sf = state_from_json(m, j.at("terminal"));
    const json& r = j.at("result");
    if (r.contains("converged")) a.converged = r.at("converged").get<bool>();
    if (r.contains("residual_norm")) a.residual_norm = r.at("residual_norm").get<double>();
    if (r.contains("cost")) a.cost = r.at("cost").get<double>();
    if (j.contains("solver")) a.tol = j.at("solver").at("tol").get<double>();
  } catch (const json::exception& e) {
    throw ConfigError(meta.string() + ": " + e.what());
  }

  const ModelSpec m = make_model(a.model, a.params);
  const auto rows = read_csv(dir / "trajectory.csv", {"k", "t", "theta", "xi", "mu_a", "mu_u", "u", "res_state"});
  if (static_cast<int>(rows.size()) != a.N + 1) {
    throw ConfigError("trajectory.csv: expected " + std::to_string(a.N + 1) + " rows, found " +
                      std::to_string(rows.size()));
  }
  for (const auto& r : rows) {
    a.states.push_back(from_theta_xi(m, r[2], r[3], r[4], r[5]));
    a.controls.push_back(CoAlgebraVector::scalar(m.ga, r[6]));
    a.res_state.push_back(r[7]);
  }
  if (fs::exists(dir / "multipliers.csv")) {
    const auto lr = read_csv(dir / "multipliers.csv", {"k", "lam1", "lam2", "lam3", "lam4", "lam5", "lam6"});
    if (static_cast<int>(lr.size()) != a.N) throw ConfigError("multipliers.csv: expected N rows");
    MultiplierSet ms;
    for (const auto& r : lr) {
      ms.lam1.push_back(AlgebraVector::scalar(m.ga, r[1]));
      ms.lam2.push_back(CoAlgebraVector::scalar(m.ga, r[2]));
      ms.lam3.push_back(AlgebraVector::scalar(m.ga, r[3]));
      ms.lam4.push_back(AlgebraVector::scalar(m.gu, r[4]));
      ms.lam5.push_back(CoAlgebraVector::scalar(m.gu, r[5]));
      ms.lam6.push_back(AlgebraVector::scalar(m.gu, r[6]));
    }
    a.multipliers = std::move(ms);
  }
  return a;
}

VerifyReport verify_artifact(const Artifact& a) {
  if (!a.multipliers) throw ConfigError("artifact has no multipliers.csv; only solutions can be verified");
  VerifyReport r;
  const OcProblem p = a.problem();
  r.certificate = certify(p, a.states, a.controls, *a.multipliers);
  r.residual_norm = r.certificate.max_norm();
  r.stored_norm = a.residual_norm;
  r.tol = a.tol;
  r.matches_metadata = std::abs(r.residual_norm - r.stored_norm) <= 1e-12 * std::max(1.0, r.stored_norm);
  r.ok = r.matches_metadata && r.residual_norm <= r.tol;
  return r;
}

void print_verify(std::ostream& os, const VerifyReport& r) {
  char buf[200];
  for (const ResidualSeries* s : r.certificate.families()) {
    const double v = s->max_norm();
    std::snprintf(buf, sizeof buf, "  %-17s %.3e  at k=%d%s\n", s->name.c_str(), v, s->argmax(),
                  v > r.tol ? "  VIOLATED" : "");
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "certificate %.17g (metadata %.17g, %s), tol %g: %s\n", r.residual_norm,
                r.stored_norm, r.matches_metadata ? "reproduced" : "MISMATCH", r.tol, r.ok ? "PASS" : "FAIL");
  os << buf;
}

// ---------------------------------------------------------------------------
// Commands

namespace {

std::vector<CoAlgebraVector> make_controls(const RunConfig& cfg) {
  const Group ga = cfg.problem.model.ga;
  const int n = cfg.problem.N + 1;
  if (cfg.controls.kind == "zero") return std::vector<CoAlgebraVector>(n, CoAlgebraVector::zero(ga));
  if (cfg.controls.kind == "constant") {
    return std::vector<CoAlgebraVector>(n, CoAlgebraVector::scalar(ga, cfg.controls.value));
  }
  std::ifstream in(cfg.controls.path);
  if (!in) throw ConfigError("controls.path: cannot open " + cfg.controls.path);
  std::vector<CoAlgebraVector> out;
  std::string line;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    char* end = nullptr;
    const double v = std::strtod(line.c_str(), &end);
    if (*end != '\0') throw ConfigError(cfg.controls.path + ": row " + std::to_string(row) + ": not a number", row);
    out.push_back(CoAlgebraVector::scalar(ga, v));
  }
  if (static_cast<int>(out.size()) != n) {
    throw ConfigError(cfg.controls.path + ": expected N+1 = " + std::to_string(n) + " values, found " +
                      std::to_string(out.size()));
  }
  return out;
}

void write_report(const fs::path& file, const RunConfig& cfg, const OcSolution& sol, double wall) {
  std::ofstream os(file);
  char buf[200];
  os << "problem   " << (cfg.case_name.empty() ? cfg.problem.model.name : cfg.case_name) << "  (model "
     << cfg.problem.model.name << ", N " << cfg.problem.N << ", h " << cfg.problem.model.h << ")\n";
  os << "solver    segments " << cfg.solver.segments << ", init " << init_name(cfg.solver.init) << ", tol "
     << cfg.solver.tol << ", homotopy " << (cfg.solver.homotopy ? "on" : "off") << "\n";
  os << "status    " << (sol.converged ? "converged" : "NOT converged") << " (" << sol.message << ")\n";
  std::snprintf(buf, sizeof buf, "newton    %d iterations, shooting residual %.3e\n", sol.newton_iters,
                sol.shooting_residual);
  os << buf;
  if (!sol.homotopy.empty()) {
    os << "homotopy  gravity scales";
    for (double s : sol.homotopy) os << ' ' << s;
    os << '\n';
  }
  if (!sol.trajectory.states.empty()) {
    const KktResidual c = certify(cfg.problem, sol.trajectory.states, sol.trajectory.controls, sol.multipliers);
    os << "certificate (infinity norms)\n";
    for (const ResidualSeries* s : c.families()) {
      std::snprintf(buf, sizeof buf, "  %-17s %.3e  at k=%d\n", s->name.c_str(), s->max_norm(), s->argmax());
      os << buf;
    }
    const ProductState& sN = sol.trajectory.states.back();
    const auto [th, xi] = theta_xi(cfg.problem.model, sN);
    std::snprintf(buf, sizeof buf, "final     theta %.3e  xi %.3e  mu_a %.3e  mu_u %.3e\n", th, xi, sN.mu_a[0],
                  sN.mu_u[0]);
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "cost      %.12g\nresidual  %.3e\nwall time %.2f s\n", sol.cost, sol.residual_norm,
                wall);
  os << buf;
}

}  // namespace

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    if (cfg.command == Command::kVerify) return run_verify(cfg.out_dir, out, err);
    if (cfg.command == Command::kSimulate) {
      const Trajectory t = simulate(cfg.problem.model, cfg.problem.s0, make_controls(cfg), cfg.problem.N);
      write_simulation(cfg.out_dir, cfg, t);
      out << "simulated " << t.N() << " steps -> " << cfg.out_dir << "/trajectory.csv\n";
      return kOk;
    }

    std::optional<WarmStart> warm;
    if (cfg.solver.init == InitStrategy::kWarmStart) {
      const Artifact a = load_artifact(cfg.warm_start);
      if (a.N != cfg.problem.N || !a.multipliers) throw ConfigError("warm start artifact does not fit the problem");
      warm = WarmStart{a.controls, *a.multipliers, a.states};
    }
    ShootingConfig sc = cfg.solver;
    sc.log = [&out](const std::string& s) { out << s << '\n'; };
    const auto t0 = std::chrono::steady_clock::now();
    const OcSolution sol = solve(cfg.problem, sc, warm ? &*warm : nullptr);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_solution(cfg.out_dir, cfg, sol);
    write_report(fs::path(cfg.out_dir) / "report.txt", cfg, sol, wall);
    char buf[200];
    std::snprintf(buf, sizeof buf, "%s: cost %.12g, certificate %.3e, %d iterations, %.1f s -> %s\n",
                  sol.converged ? "converged" : "NOT converged", sol.cost, sol.residual_norm, sol.newton_iters, wall,
                  cfg.out_dir.c_str());
    out << buf;
    if (sol.converged) return kOk;
    err << "solver: " << sol.message << '\n';
    return sol.numerical_failure ? kNumericalFailure : kNotConverged;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StepFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const UsageError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  }
}

int run_verify(const std::string& path, std::ostream& out, std::ostream& err) {
  try {
    const Artifact a = load_artifact(path);
    const VerifyReport r = verify_artifact(a);
    print_verify(out, r);
    return r.ok ? kOk : kNotConverged;
  } catch (const ConfigError& e) {
    err << "artifact error: " << e.what() << '\n';
    return kConfigError;
  } catch (const UsageError& e) {
    err << "artifact error: " << e.what() << '\n';
    return kConfigError;
  } catch (const StepFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const DomainError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  }
}

}  // namespace dmoc::cli
