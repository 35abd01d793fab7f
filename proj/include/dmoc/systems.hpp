#pragma once

// Built-in benchmark models.
//
// Ball and beam: beam angle theta on S^1 (actuated, torque input), ball
// position xi along the beam on R (unactuated).
//   L_d = I_r dth^2 / (2h) + m_b (dxi^2 + xi^2 dth^2) / (2h) - m_b h g xi sin(theta)
//
// Cart-pole: cart position xi on R (actuated, force input), pendulum angle
// theta from the upright vertical on S^1 (unactuated).
//   L_d = (m_b + m_c) dxi^2 / (2h) + m_b l^2 dth^2 / (2h)
//         - m_b l dxi dth cos(theta) / h - m_b h g l cos(theta)

#include <string>
#include <vector>

#include "dmoc/optimal_control.hpp"

namespace dmoc {

struct BallBeamParams {
  double m_b = 0.5;  // kg
  double I_r = 6.0;  // kg m^2
  double g = 9.8;    // m/s^2
  double h = 0.01;   // s

  void validate() const;
};

struct CartPoleParams {
  double m_c = 0.5;  // kg
  double m_b = 0.1;  // kg
  double l = 0.1;    // m
  double g = 9.8;    // m/s^2
  double h = 0.01;   // s

  void validate() const;
};

ModelSpec ball_beam_model(const BallBeamParams& p);
ModelSpec cart_pole_model(const CartPoleParams& p);

/// Builds a model by name from a parameter map; unknown keys are rejected.
/// Keys: ball_beam {m_b, I_r, g, h}, cart_pole {m_c, m_b, l, g, h}.
ModelSpec make_model(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> model_names();

/// State with configuration given in the model's scalar coordinates and
/// momenta (actuated, unactuated).
ProductState scalar_state(const ModelSpec& model, double a, double u, double mu_a = 0.0, double mu_u = 0.0);

struct BenchmarkCase {
  std::string name;
  OcProblem problem;
  /// Initial configuration in the units of the published table (degrees for angles).
  double theta0_deg = 0.0;
  double xi0 = 0.0;
};

/// bb_case1, bb_case2, cp_case1, cp_case2 with default parameters, N = 1000.
std::vector<BenchmarkCase> benchmark_cases();
BenchmarkCase benchmark_case(const std::string& name);

/// Same model with gravity multiplied by s (continuation parameter).
ModelSpec with_gravity_scale(const ModelSpec& model, double s);

}  // namespace dmoc
