#pragma once

// Command-line layer: run configurations, solution artifacts and the three
// commands (simulate, optimize, verify).
//
// An artifact is a directory holding
//   trajectory.csv   k,t,theta,xi,mu_a,mu_u,u,res_state  (N+1 rows, radians)
//   multipliers.csv  k,lam1,...,lam6                      (N rows)
//   metadata.json    problem, solver settings, certificate, cost
//   report.txt       human-readable summary, including wall time
// All numbers are written with 17 significant digits, so reading an artifact
// back gives the same doubles.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmoc/shooting.hpp"

namespace dmoc::cli {

enum class Command { kSimulate, kOptimize, kVerify };
const char* command_name(Command c);

enum ExitStatus { kOk = 0, kConfigError = 2, kNotConverged = 3, kNumericalFailure = 4 };

/// Configuration error with the offending line (1-based, 0 if unknown).
struct ConfigError : UsageError {
  ConfigError(const std::string& msg, int line = 0);
  int line;
};

struct ControlSpec {
  std::string kind = "zero";  // zero | constant | file
  double value = 0.0;
  std::string path;
};

struct RunConfig {
  Command command = Command::kOptimize;
  std::string case_name;  // built-in case the problem started from, if any
  OcProblem problem;
  ShootingConfig solver;
  std::string warm_start;  // artifact directory
  ControlSpec controls;
  std::string out_dir = "out";
};

/// Parses a YAML run configuration. `source` is either a file path or the
/// name of a built-in case (bb_case1, ...). Throws ConfigError.
RunConfig load_config(const std::string& source);
RunConfig parse_config(const std::string& yaml_text, const std::string& origin = "<string>");

struct Artifact {
  std::string command;
  std::string model;
  std::map<std::string, double> params;
  int N = 0;
  ProductState s0, sf;
  std::vector<ProductState> states;
  std::vector<CoAlgebraVector> controls;
  std::vector<double> res_state;
  std::optional<MultiplierSet> multipliers;
  bool converged = false;
  double residual_norm = 0.0;
  double cost = 0.0;
  double tol = 0.0;

  OcProblem problem() const;
};

/// Writes trajectory.csv, multipliers.csv (when present) and metadata.json.
void write_solution(const std::string& dir, const RunConfig& cfg, const OcSolution& sol);
void write_simulation(const std::string& dir, const RunConfig& cfg, const Trajectory& traj);
/// Reads an artifact directory (or the path of its trajectory.csv).
Artifact load_artifact(const std::string& path);

struct VerifyReport {
  KktResidual certificate;
  double residual_norm = 0.0;
  double stored_norm = 0.0;
  double tol = 0.0;
  bool matches_metadata = false;
  bool ok = false;
};
VerifyReport verify_artifact(const Artifact& a);
void print_verify(std::ostream& os, const VerifyReport& r);

/// Overrides from command-line flags; unset fields leave the config alone.
struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<int> segments;
  std::optional<double> tol;
  std::optional<int> max_iters;
  std::optional<bool> homotopy;
};
void apply(RunConfig& cfg, const Overrides& o);

/// Runs a command and returns its exit status; messages go to `out` / `err`.
int run(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int run_verify(const std::string& path, std::ostream& out, std::ostream& err);

}  // namespace dmoc::cli
