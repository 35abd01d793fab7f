// dmoc: simulate, optimize or verify from the command line.
//
//   dmoc optimize --config configs/bb_case1.yaml --out out/bb1
//   dmoc --config bb_case1                 (built-in case, command from config)
//   dmoc simulate --config my_sim.yaml
//   dmoc --verify out/bb1

#include <CLI11.hpp>

#include <iostream>

#include "dmoc/cli.hpp"

int main(int argc, char** argv) {
  using namespace dmoc::cli;
  CLI::App app{"Discrete mechanics optimal control on Lie groups"};
  std::string command, config, verify_path, homotopy;
  Overrides o;
  app.add_option("command", command, "simulate | optimize | verify (default: from the config, else optimize)")
      ->check(CLI::IsMember({"simulate", "optimize", "verify"}));
  app.add_option("--config", config, "YAML run configuration, or a built-in case name (bb_case1, ...)");
  app.add_option("--out", o.out_dir, "output directory for the artifact");
  app.add_option("--segments", o.segments, "number of shooting segments")->check(CLI::PositiveNumber);
  app.add_option("--tol", o.tol, "residual infinity-norm target")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", o.max_iters, "Newton iteration limit")->check(CLI::NonNegativeNumber);
  app.add_option("--homotopy", homotopy, "gravity continuation")->check(CLI::IsMember({"on", "off"}));
  app.add_option("--verify", verify_path, "re-check a solution artifact (directory or trajectory.csv)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  if (!homotopy.empty()) o.homotopy = homotopy == "on";

  if (!verify_path.empty() || command == "verify") {
    if (verify_path.empty()) verify_path = o.out_dir.value_or("");
    if (verify_path.empty()) {
      std::cerr << "verify needs --verify PATH\n";
      return kConfigError;
    }
    return run_verify(verify_path, std::cout, std::cerr);
  }
  if (config.empty()) {
    std::cerr << "--config is required\n";
    return kConfigError;
  }
  RunConfig cfg;
  try {
    cfg = load_config(config);
    if (command == "simulate") cfg.command = Command::kSimulate;
    if (command == "optimize") cfg.command = Command::kOptimize;
    apply(cfg, o);
  } catch (const dmoc::UsageError& e) {
    std::cerr << "config error: " << config << ": " << e.what() << '\n';
    return kConfigError;
  }
  return run(cfg, std::cout, std::cerr);
}
