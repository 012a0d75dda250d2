#include <gtest/gtest.h>

#include <cmath>

#include "helmproof/amv.hpp"

using namespace helmproof;

namespace {

const Model& verified() {
  static const Model m = amv::verified_model();
  return m;
}

double rate_of(const Model& m, const Program& dyn, const HybridState& st, const std::string& name) {
  const VectorField& F = dyn.node().parts[1].node().field;
  EvalOptions o;
  o.cond_zero_tol = 1e-9;
  return eval_field(F, st, o)[m.lens(name).offset];
}

HybridState lre_state(const Model& m, std::vector<Point> obs) {
  HybridState st(m.space);
  st = st.put(m.lens("m"), Mode{"MOM"});
  st = st.put(m.lens("wp"), MatVal::row({0, 100}));
  st = st.put(m.lens("ob"), make_point_set(std::move(obs)));
  return st;
}

double scalar(const HybridState& st, const Model& m, const std::string& name) {
  return st.get_real(m.lens(name)).as_scalar();
}

}  // namespace

TEST(Amv, BrakingDistanceCalibration) {
  amv::AmvParams p;
  EXPECT_NEAR(amv::d_sb(p, 4), 13.33, 0.01);
  Model sim = amv::sim_model();
  HybridState st = HybridState(sim.space).put(sim.lens("v"), MatVal::row({0, 4}));
  EXPECT_NEAR(eval_scalar(sim.expr("dsb"), st), 13.33, 0.01);
  EXPECT_NEAR(eval_scalar(verified().expr("dsb"), HybridState(verified().space).put(verified().lens("v"), MatVal::row({4, 0}))),
              13.33, 0.01);
}

TEST(Amv, DynamicsFrameDiscreteState) {
  Program dyn = amv::build_dynamics();
  EXPECT_TRUE(nmods(dyn, {"wp", "ob", "rs", "rh", "ft", "fl", "f", "m"}));
  ModSet ms = mods(dyn);
  for (const char* x : {"t", "p", "v", "a", "s", "phi"}) EXPECT_TRUE(ms.contains(x)) << x;
}

TEST(Amv, SpeedRateAtRestComesFromAcceleration) {
  const Model& m = verified();
  Program dyn = amv::build_dynamics();
  HybridState st = HybridState(m.space).put(m.lens("a"), MatVal::row({0, 1}));
  EXPECT_DOUBLE_EQ(rate_of(m, dyn, st, "s"), 1.0);
  EXPECT_DOUBLE_EQ(rate_of(m, dyn, st, "phi"), 0.0);
}

TEST(Amv, HeadingRateVanishesWithoutAcceleration) {
  const Model& m = verified();
  Program dyn = amv::build_dynamics();
  HybridState st(m.space);
  st = st.put(m.lens("s"), MatVal::scalar(2));
  st = st.put(m.lens("phi"), MatVal::scalar(0.4));
  st = st.put(m.lens("v"), MatVal::row({2 * std::sin(0.4), 2 * std::cos(0.4)}));
  EXPECT_NEAR(rate_of(m, dyn, st, "phi"), 0.0, 1e-6);
  EXPECT_NEAR(rate_of(m, dyn, st, "s"), 0.0, 1e-12);
}

TEST(Amv, LreMomToHcmNearObstacle) {
  const Model& m = verified();
  // obstacle 10 m to the side: within D, off the collision cone
  HybridState out = step_discrete(amv::build_lre(), lre_state(m, {{10, 0}}));
  EXPECT_EQ(std::get<Mode>(out.get(m.lens("m"))).symbol, "HCM");
  EXPECT_EQ(scalar(out, m, "rs"), 2);
}

TEST(Amv, LreHcmToMomWhenClear) {
  const Model& m = verified();
  HybridState st = lre_state(m, {{50, 50}}).put(m.lens("m"), Mode{"HCM"});
  HybridState out = step_discrete(amv::build_lre(), st);
  EXPECT_EQ(std::get<Mode>(out.get(m.lens("m"))).symbol, "MOM");
}

TEST(Amv, LreOcmIsInert) {
  const Model& m = verified();
  HybridState st = lre_state(m, {{1, 1}}).put(m.lens("m"), Mode{"OCM"});
  EXPECT_TRUE(step_discrete(amv::build_lre(), st) == st);
}

TEST(Amv, LreTransitionOnSampledStates) {
  const Model& m = verified();
  const TripleDecl& t = m.triple("LreTransition");
  std::mt19937_64 rng(5);
  for (int k = 0; k < 1000; ++k) {
    HybridState st = amv::sample_lre_pre(m, rng);
    ASSERT_TRUE(eval_pred(t.pre, st));
    HybridState out = step_discrete(t.prog, st);
    ASSERT_TRUE(eval_pred(t.post, out)) << k;
  }
}

TEST(Amv, AutopilotDeadbands) {
  const Model& m = verified();
  HybridState st(m.space);
  st = st.put(m.lens("rs"), MatVal::scalar(2.02));
  st = st.put(m.lens("s"), MatVal::scalar(2));
  st = st.put(m.lens("phi"), MatVal::scalar(1));
  st = st.put(m.lens("rh"), MatVal::scalar(1.03));
  st = st.put(m.lens("a"), MatVal::row({5, 5}));
  HybridState out = step_discrete(amv::build_autopilot(), st);
  EXPECT_EQ(out.get_real(m.lens("a")), MatVal::row({0, 0}));
  EXPECT_EQ(scalar(out, m, "ft"), 0);
  EXPECT_EQ(scalar(out, m, "fl"), 0);
}

TEST(Amv, AutopilotSaturatesAndPushesAlongHeading) {
  const Model& m = verified();
  HybridState st(m.space);
  st = st.put(m.lens("rs"), MatVal::scalar(4));
  st = st.put(m.lens("phi"), MatVal::scalar(0.5));
  st = st.put(m.lens("rh"), MatVal::scalar(0.5));
  HybridState out = step_discrete(amv::build_autopilot(), st);
  EXPECT_EQ(scalar(out, m, "ft"), 3000);
  MatVal a = out.get_real(m.lens("a"));
  EXPECT_NEAR(a.data[0], 0.6 * std::sin(0.5), 1e-12);
  EXPECT_NEAR(a.data[1], 0.6 * std::cos(0.5), 1e-12);
}

TEST(Amv, AutopilotWritesOnlyAcceleration) {
  ModSet ms = mods(amv::build_autopilot());
  for (const char* x : {"t", "p", "v", "s", "phi"}) EXPECT_FALSE(ms.contains(x)) << x;
  EXPECT_TRUE(ms.contains("a"));
}

TEST(Amv, SimModelWithoutObstaclesStaysInMom) {
  amv::AmvScenario sc = amv::default_scenario();
  const Model& m = sc.scenario.model;
  HybridState st = sc.x0.put(m.lens("ob"), PointSet{});
  SimConfig cfg = config_of(sc.scenario);
  cfg.horizon = 20;
  auto [ctrl, dyn] = amv::build_sim_model();
  Trajectory tr = run_loop(ctrl, dyn, st, cfg);
  for (const auto& e : tr.events) EXPECT_NE(e.tag, "mode") << e.detail;
}

TEST(Amv, DefaultScenarioValues) {
  amv::AmvScenario sc = amv::default_scenario();
  const Model& m = sc.scenario.model;
  MatVal v = sc.x0.get_real(m.lens("v"));
  EXPECT_NEAR(std::hypot(v.data[0], v.data[1]), 3.833, 1e-3);
  ASSERT_EQ(sc.obstacles.size(), 1u);
  MatVal p = sc.x0.get_real(m.lens("p"));
  EXPECT_NEAR(std::hypot(p.data[0] - sc.obstacles[0][0], p.data[1] - sc.obstacles[0][1]), 8.246, 1e-3);
  EXPECT_EQ(sc.waypoint, (Point{0, 0}));
  EXPECT_EQ(sc.horizon, 35);
  EXPECT_EQ(std::get<Mode>(sc.x0.get(m.lens("m"))).symbol, "MOM");
}

TEST(Amv, DefaultScenarioShape) {
  amv::AmvScenario sc = amv::default_scenario();
  Trajectory tr = run_scenario(sc.scenario, config_of(sc.scenario));
  const Model& m = sc.scenario.model;
  const Event* first = nullptr;
  for (const auto& e : tr.events)
    if (e.tag == "mode") {
      first = &e;
      break;
    }
  ASSERT_NE(first, nullptr);
  EXPECT_EQ(first->detail.substr(0, 5), "MOM->");
  EXPECT_NEAR(first->time, 5, 2);
  bool arrived = false;
  for (const auto& e : tr.events) arrived |= e.tag == "watch" && e.detail == "arrived" && e.time < 35;
  EXPECT_TRUE(arrived);
  (void)m;
}

TEST(Amv, WithinDsbReadingSwitchesAtStart) {
  amv::AmvParams p;
  p.nO_literal = false;
  amv::AmvScenario sc = amv::default_scenario(p);
  SimConfig cfg = config_of(sc.scenario);
  cfg.horizon = 1;
  Trajectory tr = run_scenario(sc.scenario, cfg);
  ASSERT_FALSE(tr.events.empty());
  EXPECT_EQ(tr.events[0].time, 0);
  EXPECT_EQ(tr.events[0].detail, "MOM->HCM");
}

TEST(Amv, SamplersSatisfyTheirPreconditions) {
  const Model& m = verified();
  std::mt19937_64 rng(9);
  EvalOptions o;
  o.eq_tol = 1e-9;
  for (int k = 0; k < 200; ++k) {
    EXPECT_TRUE(eval_pred(m.pred("collinear"), amv::sample_collinear(m, rng), o));
    EXPECT_TRUE(eval_pred(m.pred("ap_pre"), amv::sample_ap_pre(m, rng), o));
    EXPECT_TRUE(eval_pred(m.triple("LreTransition").pre, amv::sample_lre_pre(m, rng), o));
  }
}
