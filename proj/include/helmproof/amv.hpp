#pragma once

#include <random>
#include <string>
#include <utility>

#include "helmproof/model.hpp"
#include "helmproof/sim.hpp"

namespace helmproof::amv {

/// Vehicle and controller constants. Names match the model constants.
struct AmvParams {
  double mass = 5000;    // kg
  double S = 4;          // max speed, m/s
  double H = 2;          // speed cap near obstacles, m/s
  double fmax = 3000;    // N
  double kpb = -1;       // braking gain
  double sb = 1;         // safety margin
  double D = 20;         // proximity radius, m
  double eps_phi = 0.3;  // collision-course cone, rad
  double eps_h = 0.1;    // manoeuvre hysteresis, rad
  double s_eps = 0.05;   // speed deadband, m/s
  double phi_eps = 0.05; // heading deadband, rad
  double kp_gv = 1000;
  double kp_gr = 1000;
  double kp_l = 500;
  double kp_t = 500;
  double eps = 0.1;      // control period, s
  bool nO_literal = true;  // hazard while the distance exceeds dsb

  ConstOverrides overrides() const;
};

/// Safe braking distance at the given speed.
double d_sb(const AmvParams& p, double speed);

/// Directory of the bundled model files.
std::string model_dir();

/// Errors: IoError, parse errors.
Model verified_model(const AmvParams& p = {});
Model sim_model(const AmvParams& p = {});

Program build_dynamics(const AmvParams& p = {});
Program build_lre(const AmvParams& p = {});
Program build_autopilot(const AmvParams& p = {});
/// (Ctrl, Dyn) of the simulation variant.
std::pair<Program, Program> build_sim_model(const AmvParams& p = {});

struct AmvScenario {
  AmvParams params;
  HybridState x0;
  Point waypoint{0, 0};
  PointSet obstacles;
  double horizon = 35;
  Scenario scenario;
};

/// The bundled default.scn with these parameters.
AmvScenario default_scenario(const AmvParams& p = {});

// Random states of the verified model's space.

/// v = s [sin phi, cos phi], a a nonnegative multiple of the heading.
HybridState sample_collinear(const Model& m, std::mt19937_64& rng);
/// 0 <= s <= rs, |rh - phi| < phi_eps, v = s [sin phi, cos phi].
HybridState sample_ap_pre(const Model& m, std::mt19937_64& rng);
/// m = MOM, waypoint bearing within phi_eps of phi, an obstacle within D.
HybridState sample_lre_pre(const Model& m, std::mt19937_64& rng);

}  // namespace helmproof::amv
