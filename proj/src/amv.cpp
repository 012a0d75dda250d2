#include "helmproof/amv.hpp"

#include <cmath>
#include <numbers>

namespace helmproof::amv {

namespace {

using Uniform = std::uniform_real_distribution<double>;

double scalar_const(const Model& m, const std::string& name) { return m.constant(name).as_scalar(); }

MatVal row2(double x, double y) { return MatVal::row({x, y}); }

MatVal heading(double phi, double scale) { return row2(scale * std::sin(phi), scale * std::cos(phi)); }

HybridState random_base(const Model& m, std::mt19937_64& rng) {
  Uniform box(-50, 50), ang(-std::numbers::pi, std::numbers::pi);
  HybridState st(m.space);
  st = st.put(m.lens("p"), row2(box(rng), box(rng)));
  st = st.put(m.lens("wp"), row2(box(rng), box(rng)));
  st = st.put(m.lens("a"), row2(Uniform(-1, 1)(rng), Uniform(-1, 1)(rng)));
  st = st.put(m.lens("phi"), MatVal::scalar(ang(rng)));
  st = st.put(m.lens("t"), MatVal::scalar(0));
  return st;
}

}  // namespace

ConstOverrides AmvParams::overrides() const {
  ConstOverrides o;
  auto set = [&](const char* name, double x) { o[name] = MatVal::scalar(x); };
  set("mass", mass);
  set("S", S);
  set("H", H);
  set("fmax", fmax);
  set("kpb", kpb);
  set("sb", sb);
  set("D", D);
  set("eps_phi", eps_phi);
  set("eps_h", eps_h);
  set("s_eps", s_eps);
  set("phi_eps", phi_eps);
  set("kp_gv", kp_gv);
  set("kp_gr", kp_gr);
  set("kp_l", kp_l);
  set("kp_t", kp_t);
  set("eps", eps);
  set("nO_literal", nO_literal ? 1 : 0);
  return o;
}

double d_sb(const AmvParams& p, double speed) { return p.sb * speed * speed * p.mass / (-2 * p.kpb * p.fmax); }

std::string model_dir() { return HELMPROOF_MODEL_DIR; }

Model verified_model(const AmvParams& p) { return load_model(model_dir() + "/amv_verified.hp", p.overrides()); }

Model sim_model(const AmvParams& p) { return load_model(model_dir() + "/amv_sim.hp", p.overrides()); }

Program build_dynamics(const AmvParams& p) { return verified_model(p).program("Dyn"); }

Program build_lre(const AmvParams& p) { return verified_model(p).program("LRE"); }

Program build_autopilot(const AmvParams& p) { return verified_model(p).program("AP"); }

std::pair<Program, Program> build_sim_model(const AmvParams& p) {
  Model m = sim_model(p);
  return {m.program("Ctrl"), m.program("Dyn")};
}

AmvScenario default_scenario(const AmvParams& p) {
  AmvScenario out{p, HybridState(std::make_shared<StateSpace>()), {0, 0}, {}, 35, {}};
  out.scenario = load_scenario(model_dir() + "/default.scn", p.overrides());
  const Scenario& sc = out.scenario;
  out.x0 = sc.init;
  MatVal wp = sc.init.get_real(sc.model.lens("wp"));
  out.waypoint = {wp.data[0], wp.data[1]};
  out.obstacles = std::get<PointSet>(sc.init.get(sc.model.lens("ob")));
  out.horizon = sc.horizon;
  return out;
}

HybridState sample_collinear(const Model& m, std::mt19937_64& rng) {
  HybridState st = random_base(m, rng);
  double S = scalar_const(m, "S");
  double phi = st.get_real(m.lens("phi")).as_scalar();
  // one state in eight starts from rest with an arbitrary acceleration
  bool rest = Uniform(0, 1)(rng) < 0.125;
  double s = rest ? 0 : Uniform(0, S)(rng);
  st = st.put(m.lens("s"), MatVal::scalar(s));
  st = st.put(m.lens("v"), heading(phi, s));
  if (!rest) st = st.put(m.lens("a"), heading(phi, Uniform(0, 2)(rng)));
  return st;
}

HybridState sample_ap_pre(const Model& m, std::mt19937_64& rng) {
  HybridState st = random_base(m, rng);
  double S = scalar_const(m, "S"), phi_eps = scalar_const(m, "phi_eps");
  double phi = st.get_real(m.lens("phi")).as_scalar();
  double rs = Uniform(0, S)(rng);
  double s = Uniform(0, rs)(rng);
  st = st.put(m.lens("rs"), MatVal::scalar(rs));
  st = st.put(m.lens("rh"), MatVal::scalar(wrap_angle(phi + Uniform(-phi_eps, phi_eps)(rng) * 0.999)));
  st = st.put(m.lens("s"), MatVal::scalar(s));
  st = st.put(m.lens("v"), heading(phi, s));
  return st;
}

HybridState sample_lre_pre(const Model& m, std::mt19937_64& rng) {
  HybridState st = random_base(m, rng);
  double S = scalar_const(m, "S"), D = scalar_const(m, "D"), phi_eps = scalar_const(m, "phi_eps");
  double phi = st.get_real(m.lens("phi")).as_scalar();
  MatVal p = st.get_real(m.lens("p"));
  double bearing = phi + Uniform(-phi_eps, phi_eps)(rng) * 0.999;
  MatVal to_wp = heading(bearing, Uniform(1, 100)(rng));
  st = st.put(m.lens("wp"), row2(p.data[0] + to_wp.data[0], p.data[1] + to_wp.data[1]));
  std::vector<Point> obs;
  Uniform ang(-std::numbers::pi, std::numbers::pi);
  double r = Uniform(0, D)(rng), th = ang(rng);
  obs.push_back({p.data[0] + r * std::sin(th), p.data[1] + r * std::cos(th)});
  std::uniform_int_distribution<int> extra(0, 2);
  for (int k = extra(rng); k > 0; --k) obs.push_back({Uniform(-50, 50)(rng), Uniform(-50, 50)(rng)});
  st = st.put(m.lens("ob"), make_point_set(std::move(obs)));
  double s = Uniform(0, S)(rng);
  st = st.put(m.lens("s"), MatVal::scalar(s));
  st = st.put(m.lens("v"), heading(phi, s));
  st = st.put(m.lens("rs"), MatVal::scalar(Uniform(0, S)(rng)));
  st = st.put(m.lens("m"), Mode{"MOM"});
  return st;
}

}  // namespace helmproof::amv
