#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "helmproof/amv.hpp"
#include "helmproof/sim.hpp"

using namespace helmproof;

namespace {

Program ode_of(const Model& m, const std::string& text) { return parse_program(text, m); }

double get1(const HybridState& st, const Model& m, const std::string& name) {
  return st.get_real(m.lens(name)).as_scalar();
}

}  // namespace

TEST(Sim, LinearMotionIsExact) {
  Model m = parse_model("state { cont p, v : real[1,2]; }\n");
  HybridState st = HybridState(m.space).put(m.lens("v"), MatVal::row({1, 0}));
  SimConfig cfg;
  cfg.epsilon = 1;
  OdeRun run = integrate_ode(ode_of(m, "ode { p' = v | true }"), st, cfg);
  MatVal p = run.state.get_real(m.lens("p"));
  EXPECT_NEAR(p.data[0], 1.0, 1e-9);
  EXPECT_NEAR(p.data[1], 0.0, 1e-9);
  EXPECT_EQ(run.reason, ExitReason::TimeLimit);
  EXPECT_EQ(run.path.size(), 100u);
}

TEST(Sim, ClockDomainExitsAfterTenSteps) {
  Model m = parse_model("state { cont t : real; }\nconst eps = 0.1;\n");
  SimConfig cfg;
  cfg.epsilon = 1;
  OdeRun run = integrate_ode(ode_of(m, "ode { t' = 1 | t < eps }"), HybridState(m.space), cfg);
  EXPECT_EQ(run.reason, ExitReason::DomainExit);
  EXPECT_EQ(run.path.size(), 10u);
  EXPECT_NEAR(get1(run.state, m, "t"), 0.1, 1e-9);
  for (const auto& [lt, s] : run.path) EXPECT_LT(get1(s, m, "t"), 0.1);
}

TEST(Sim, DomainCrossingIsBisected) {
  Model m = parse_model("state { cont x : real; }\n");
  SimConfig cfg;
  cfg.epsilon = 1;
  OdeRun run = integrate_ode(ode_of(m, "ode { x' = 1 | x <= 0.055 }"), HybridState(m.space), cfg);
  EXPECT_EQ(run.reason, ExitReason::DomainExit);
  double x = get1(run.state, m, "x");
  EXPECT_LE(x, 0.055);
  EXPECT_GT(x, 0.055 - cfg.dt / 16);
}

TEST(Sim, StartOutsideDomain) {
  Model m = parse_model("state { cont x : real; }\n");
  HybridState st = HybridState(m.space).put(m.lens("x"), MatVal::scalar(1));
  SimConfig cfg;
  OdeRun run = integrate_ode(ode_of(m, "ode { x' = 1 | x <= 0 }"), st, cfg);
  EXPECT_EQ(run.reason, ExitReason::DomainExit);
  EXPECT_TRUE(run.path.empty());
  cfg.domain_policy = DomainPolicy::ErrorOnViolation;
  try {
    integrate_ode(ode_of(m, "ode { x' = 1 | x <= 0 }"), st, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DomainError);
  }
}

TEST(Sim, NonFiniteStateIsReported) {
  Model m = parse_model("state { cont x : real; }\n");
  HybridState st = HybridState(m.space).put(m.lens("x"), MatVal::scalar(1));
  SimConfig cfg;
  cfg.dt = 0.1;
  cfg.epsilon = 10;
  try {
    integrate_ode(ode_of(m, "ode { x' = x * x * x * x | true }"), st, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFiniteState);
  }
}

TEST(Sim, CollinearFlowMatchesClosedForm) {
  ConstOverrides o{{"eps", MatVal::scalar(10)}};
  Model m = load_model(amv::model_dir() + "/amv_verified.hp", o);
  Program ode = m.program("Dyn").node().parts[1];
  double phi = 0.7;
  HybridState st(m.space);
  st = st.put(m.lens("phi"), MatVal::scalar(phi));
  st = st.put(m.lens("p"), MatVal::row({3, -2}));
  st = st.put(m.lens("a"), MatVal::row({0.5 * std::sin(phi), 0.5 * std::cos(phi)}));
  SimConfig cfg;
  cfg.dt = 0.01;
  OdeRun run = integrate_ode(ode, st, cfg, 2.0);
  ASSERT_EQ(run.reason, ExitReason::TimeLimit);
  MatVal p = run.state.get_real(m.lens("p"));
  double t = 2;
  EXPECT_NEAR(p.data[0], 3 + t * t / 2 * 0.5 * std::sin(phi), 1e-6);
  EXPECT_NEAR(p.data[1], -2 + t * t / 2 * 0.5 * std::cos(phi), 1e-6);
  EXPECT_NEAR(get1(run.state, m, "s"), 1.0, 1e-6);
  EXPECT_NEAR(get1(run.state, m, "phi"), phi, 1e-6);
}

TEST(Sim, DiscreteSlotsAreFrozen) {
  Model m = amv::verified_model();
  std::mt19937_64 rng(3);
  SimConfig cfg;
  Program ode = m.program("Dyn").node().parts[1];
  for (int k = 0; k < 20; ++k) {
    HybridState st = amv::sample_collinear(m, rng);
    OdeRun run = integrate_ode(ode, st, cfg);
    EXPECT_EQ(run.state.disc(), st.disc());
  }
}

TEST(Sim, ZeroHorizonGivesOneSample) {
  Model m = parse_model("state { cont t : real; }\n");
  SimConfig cfg;
  cfg.horizon = 0;
  Trajectory tr = run_loop(hp::skip(), ode_of(m, "ode { t' = 1 | true }"), HybridState(m.space), cfg);
  EXPECT_EQ(tr.samples.size(), 1u);
  EXPECT_EQ(tr.cycles, 0u);
}

TEST(Sim, CycleCounting) {
  Model m = parse_model("state { cont t : real; }\n");
  SimConfig cfg;
  cfg.horizon = 1;
  cfg.epsilon = 0.5;
  Trajectory tr = run_loop(hp::skip(), ode_of(m, "ode { t' = 1 | true }"), HybridState(m.space), cfg);
  EXPECT_EQ(tr.cycles, 2u);
  EXPECT_EQ(tr.samples.size(), 101u);
  EXPECT_NEAR(tr.samples.back().first, 1.0, 1e-9);
  for (std::size_t k = 1; k < tr.samples.size(); ++k) EXPECT_GT(tr.samples[k].first, tr.samples[k - 1].first);
}

TEST(Sim, NoProgressCarriesCycleIndex) {
  Model m = parse_model("state { cont t : real; disc k : real; }\n");
  Program ctrl = parse_program("k := k + 1", m);
  Program dyn = ode_of(m, "ode { t' = 1 | t < 0.25 }");
  SimConfig cfg;
  cfg.horizon = 1;
  cfg.epsilon = 0.5;
  try {
    run_loop(ctrl, dyn, HybridState(m.space), cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NoProgress);
    EXPECT_NE(e.message().find("cycle 1"), std::string::npos) << e.message();
  }
}

TEST(Sim, ModeEventsAndWatches) {
  Model m = parse_model(
      "state { cont t, x : real; disc m : mode {A, B}; }\n"
      "prog Ctrl = if x >= 0.25 then m := B fi;\n"
      "prog Dyn = t := 0; ode { t' = 1, x' = 1 | t < 0.1 };\n");
  SimConfig cfg;
  cfg.horizon = 1;
  cfg.watches = {{"half", parse_pred("x >= 0.505", m)}};
  Trajectory tr = run_loop(m.program("Ctrl"), m.program("Dyn"), HybridState(m.space), cfg);
  ASSERT_EQ(tr.events.size(), 2u);
  EXPECT_EQ(tr.events[0].tag, "mode");
  EXPECT_EQ(tr.events[0].detail, "A->B");
  EXPECT_NEAR(tr.events[0].time, 0.3, 1e-9);
  EXPECT_EQ(tr.events[1].tag, "watch");
  EXPECT_NEAR(tr.events[1].time, 0.51, 1e-9);
}

TEST(Sim, ScheduledWritesApply) {
  Model m = parse_model(
      "state { cont t : real; disc k : real; }\n"
      "prog Dyn = t := 0; ode { t' = 1 | t < 0.1 };\n");
  SimConfig cfg;
  cfg.horizon = 0.5;
  cfg.schedule = {{0.2, m.lens("k"), MatVal::scalar(7)}};
  Trajectory tr = run_loop(hp::skip(), m.program("Dyn"), HybridState(m.space), cfg);
  for (const auto& [t, s] : tr.samples) EXPECT_EQ(get1(s, m, "k"), t > 0.2 + 1e-9 ? 7 : 0) << t;
}

TEST(Sim, Determinism) {
  amv::AmvScenario sc = amv::default_scenario();
  SimConfig cfg = config_of(sc.scenario);
  cfg.horizon = 3;
  Trajectory a = run_scenario(sc.scenario, cfg), b = run_scenario(sc.scenario, cfg);
  ASSERT_EQ(a.samples.size(), b.samples.size());
  for (std::size_t k = 0; k < a.samples.size(); ++k) EXPECT_TRUE(a.samples[k].second == b.samples[k].second);
  EXPECT_EQ(a.events, b.events);
}

TEST(Sim, CsvLayout) {
  Model m = parse_model("state { cont t : real; cont p : real[1,2]; disc m : mode {A, B}; disc k : real; }\n");
  Trajectory tr;
  HybridState st(m.space);
  for (int k = 0; k < 3; ++k)
    tr.samples.emplace_back(k * 0.1, st.put(m.lens("t"), MatVal::scalar(k / 3.0)));
  tr.events.push_back({0.1, "mode", "A->B"});
  std::string csv = trajectory_csv(tr, {{"twice", parse_expr("2 * t", m)}});
  std::vector<std::string> lines;
  std::size_t start = 0;
  for (std::size_t k = csv.find('\n'); k != std::string::npos; start = k + 1, k = csv.find('\n', start))
    lines.push_back(csv.substr(start, k - start));
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "time,t,p[1,1],p[1,2],m,k,twice");
  EXPECT_EQ(lines[2], "0.1,0.333333333,0,0,A,0,0.666666667");
  EXPECT_EQ(events_csv(tr), "time,tag,detail\n0.1,mode,A->B\n");
}

TEST(Sim, JsonlRoundTrip) {
  amv::AmvScenario sc = amv::default_scenario();
  SimConfig cfg = config_of(sc.scenario);
  cfg.horizon = 6;
  Trajectory tr = run_scenario(sc.scenario, cfg);
  Trajectory back = read_trajectory_jsonl(trajectory_jsonl(tr), sc.x0.space());
  ASSERT_EQ(back.samples.size(), tr.samples.size());
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    EXPECT_EQ(back.samples[k].first, tr.samples[k].first);
    EXPECT_TRUE(back.samples[k].second == tr.samples[k].second) << k;
  }
  EXPECT_EQ(back.events, tr.events);
  EXPECT_EQ(back.cycles, tr.cycles);
  try {
    read_trajectory_jsonl("{\"t\": 0, \"cont\": [1]}\n", sc.x0.space());
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::ShapeMismatch || e.kind() == ErrorKind::ParseError);
  }
}

TEST(Sim, ExportWritesSidecar) {
  Model m = parse_model("state { cont t : real; }\n");
  SimConfig cfg;
  cfg.horizon = 0.05;
  Trajectory tr = run_loop(hp::skip(), ode_of(m, "ode { t' = 1 | true }"), HybridState(m.space), cfg);
  auto dir = std::filesystem::temp_directory_path() / "helmproof_sim_test";
  std::filesystem::create_directories(dir);
  std::string path = (dir / "run.csv").string();
  export_trajectory(tr, path, "csv");
  EXPECT_TRUE(std::filesystem::exists(path));
  EXPECT_TRUE(std::filesystem::exists(path + ".events.csv"));
  try {
    export_trajectory(tr, (dir / "missing" / "x.csv").string(), "csv");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
  std::filesystem::remove_all(dir);
}

TEST(Sim, ExecuteFollowsFlowAndTests) {
  Model m = parse_model("state { cont t : real; disc k : real; }\nconst eps = 0.1;\n");
  SimConfig cfg;
  auto outs = execute(parse_program("k := 1; ode { t' = 1 | t < eps }", m), HybridState(m.space), cfg);
  EXPECT_EQ(outs.size(), 11u);
  EXPECT_TRUE(execute(parse_program("?(k > 0)", m), HybridState(m.space), cfg).empty());
}

TEST(Sim, ValidatorCatchesFalseTriple) {
  Model m = parse_model("state { cont t : real; }\nconst eps = 0.1;\n");
  HoareTriple t = make_triple("Bad", m.space, pr::truth(), parse_program("ode { t' = 1 | t < eps }", m),
                              parse_pred("t <= 0.05", m));
  SimConfig cfg;
  ValidationReport r = validate_triple(t, {HybridState(m.space)}, cfg);
  EXPECT_EQ(r.runs, 1u);
  EXPECT_GT(r.violations, 0u);
  ASSERT_TRUE(r.counterexample.has_value());
}

TEST(Sim, ProvedTriplesSurviveExecution) {
  Model m = amv::verified_model();
  std::mt19937_64 rng(11);
  SimConfig cfg;
  cfg.dt = 1e-3;
  for (const char* name : {"Collinearity", "HeadingConstant", "StraightLine"}) {
    std::vector<HybridState> pres;
    for (int k = 0; k < 30; ++k) pres.push_back(amv::sample_collinear(m, rng));
    ValidationReport r = validate_triple(make_triple(m.triple(name)), pres, cfg);
    EXPECT_EQ(r.runs, 30u) << name;
    EXPECT_EQ(r.violations, 0u) << name;
  }
}
