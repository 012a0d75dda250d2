// Acceptance run: one PASS/FAIL line per criterion. Always exits 0; the
// lines are the result.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "gen.hpp"
#include "helmproof/amv.hpp"
#include "helmproof/deriv.hpp"
#include "helmproof/proof.hpp"
#include "helmproof/sim.hpp"

using namespace helmproof;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream note;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << "[failed: " << what << "] ";
    }
  }
};

const Model& verified() {
  static const Model m = amv::verified_model();
  return m;
}

TripleReport check(const std::string& name) {
  return check_triple(make_triple(verified().triple(name)), verified().assumptions);
}

bool all_symbolic(const TripleReport& r) {
  for (const auto& res : r.results)
    if (res.verdict != Verdict::ProvedSymbolic) return false;
  return r.proved;
}

// 1. nmods statements and mutated queries.
void nmods_exactness(Outcome& o) {
  auto t0 = Clock::now();
  const Model& m = verified();
  const Program& lre = m.program("LRE");
  const Program& ap = m.program("AP");
  const Program& dyn = m.program("Dyn");
  bool s1 = nmods(lre, {"t", "p", "v", "a", "s", "phi"});
  bool s2 = nmods(ap, {"t", "p", "v", "s", "phi"});
  bool s3 = nmods(dyn, {"wp", "ob", "rs", "rh", "ft", "fl", "f", "m"});
  o.require(s1 && s2 && s3, "statements");
  ModSet ap_mods = mods(ap);
  o.require(!nmods(ap, {"a"}), "AP vs {a}");
  for (const char* x : {"a", "ft", "fl", "f"}) o.require(ap_mods.contains(x), std::string("mods(AP) has ") + x);
  o.require(!nmods(lre, {"m"}), "LRE vs {m}");
  o.require(!nmods(dyn, {"a"}), "Dyn vs {a}");
  o.require(!nmods(dyn, {"t"}), "Dyn vs {t}");
  double dt = seconds_since(t0);
  o.require(dt < 1, "runtime");
  o.note << (s1 ? "holds" : "fails") << '/' << (s2 ? "holds" : "fails") << '/' << (s3 ? "holds" : "fails")
         << ", mutated queries fail, " << dt << " s";
}

// 2. Collinearity by two cuts.
void collinearity(Outcome& o) {
  auto t0 = Clock::now();
  TripleReport r = check("Collinearity");
  int cut_vcs = 0;
  for (std::size_t k = 0; k < r.vcs.size(); ++k)
    if (r.vcs[k].origin.find("lie") != std::string::npos) {
      ++cut_vcs;
      o.require(r.results[k].verdict == Verdict::ProvedSymbolic, r.vcs[k].id);
    }
  o.require(cut_vcs == 2, "two cut VCs");
  o.require(all_symbolic(r), "triple proved");
  double dt = seconds_since(t0);
  o.require(dt < 5, "runtime");
  o.note << r.vcs.size() << " VCs ProvedSymbolic, " << dt << " s";
}

// 3. Heading constancy with a ghost.
void heading_constant(Outcome& o) {
  TripleReport r = check("HeadingConstant");
  o.require(all_symbolic(r), "triple proved");
  const Model& m = verified();
  Expr a = ex::var(m.lens("a")), v = ex::var(m.lens("v"));
  Expr two = ex::constant(2);
  VC id{"identity", "normal form", pr::eq(two * ex::dot(a, v) * ex::dot(a, a), two * ex::dot(a, a) * ex::dot(v, a)),
        {}, m.space};
  DischargeOptions opts;
  opts.sampling = false;
  DischargeResult d = discharge(id, opts);
  o.require(d.verdict == Verdict::ProvedSymbolic, "2(a.v)(a.a) = 2(a.a)(v.a)");
  o.note << r.vcs.size() << " VCs ProvedSymbolic, identity " << to_string(d.verdict);
}

// 4. Autopilot collinearity, composition, execution.
void autopilot(Outcome& o) {
  TripleReport ap = check("AutopilotCollinearity");
  o.require(all_symbolic(ap), "AP triple");
  TripleReport both = compose(ap, check("Collinearity"), verified().assumptions);
  o.require(both.proved, "AP;Dyn composed");
  std::mt19937_64 rng(404);
  std::vector<HybridState> pres;
  for (int k = 0; k < 1000; ++k) pres.push_back(amv::sample_ap_pre(verified(), rng));
  ValidationReport v1 = validate_triple(ap.triple, pres, SimConfig{});
  ValidationReport v2 = validate_triple(both.triple, pres, SimConfig{});
  o.require(v1.violations == 0 && v2.violations == 0, "execution");
  o.require(v1.runs == 1000 && v2.runs == 1000, "all pre-states used");
  o.note << "AP and AP;Dyn proved, " << v1.runs << "+" << v2.runs << " runs, " << v1.checks + v2.checks
         << " checks, " << v1.violations + v2.violations << " violations";
}

// 5. LRE transition on sampled states.
void lre_transition(Outcome& o) {
  auto t0 = Clock::now();
  const Model& m = verified();
  const TripleDecl& t = m.triple("LreTransition");
  std::mt19937_64 rng(505);
  int violations = 0, pre_false = 0;
  for (int k = 0; k < 10000; ++k) {
    HybridState st = amv::sample_lre_pre(m, rng);
    if (!eval_pred(t.pre, st)) {
      ++pre_false;
      continue;
    }
    if (!eval_pred(t.post, step_discrete(t.prog, st))) ++violations;
  }
  double dt = seconds_since(t0);
  o.require(pre_false == 0, "sampler");
  o.require(violations == 0, "post");
  o.require(dt < 5, "runtime");
  o.note << "10000 states, " << violations << " violations, " << dt << " s";
}

// 6. Straight-line flow against the closed form, and the step-halving ratio.
double straight_line_error(const Model& m, double dt) {
  Program ode = m.program("Dyn").node().parts[1];
  double phi = 0.7, s0 = 1.5, acc = 0.4;
  MatVal p0 = MatVal::row({3, -2});
  MatVal v0 = MatVal::row({s0 * std::sin(phi), s0 * std::cos(phi)});
  MatVal a = MatVal::row({acc * std::sin(phi), acc * std::cos(phi)});
  HybridState st(m.space);
  st = st.put(m.lens("phi"), MatVal::scalar(phi));
  st = st.put(m.lens("s"), MatVal::scalar(s0));
  st = st.put(m.lens("p"), p0);
  st = st.put(m.lens("v"), v0);
  st = st.put(m.lens("a"), a);
  SimConfig cfg;
  cfg.dt = dt;
  OdeRun run = integrate_ode(ode, st, cfg, 5.0);
  if (run.reason != ExitReason::TimeLimit) return INFINITY;
  const Lens& tl = m.lens("t");
  const Lens& pl = m.lens("p");
  double worst = 0;
  for (const auto& [time, s] : run.path) {
    double t = s.get_real(tl).as_scalar();
    MatVal p = s.get_real(pl);
    for (int k = 0; k < 2; ++k) {
      double exact = t * t / 2 * a.data[k] + t * v0.data[k] + p0.data[k];
      worst = std::max(worst, std::fabs(p.data[k] - exact));
    }
  }
  return worst;
}

void straight_line(Outcome& o) {
  ConstOverrides ov{{"eps", MatVal::scalar(10)}};
  Model m = load_model(amv::model_dir() + "/amv_verified.hp", ov);
  double e1 = straight_line_error(m, 0.01);
  double e2 = straight_line_error(m, 0.005);
  double ratio = e2 > 0 ? e1 / e2 : INFINITY;
  o.require(e1 <= 1e-6, "error within 1e-6");
  o.require(ratio >= 8 && ratio <= 32, "halving ratio in [8, 32]");
  char buf[160];
  std::snprintf(buf, sizeof buf, "max error %.3g at dt=0.01, %.3g at dt=0.005, ratio %.3g", e1, e2, ratio);
  o.note << buf;
}

// 7. Lie derivatives against finite differences.
void lie_oracle(Outcome& o) {
  testgen::Gen gen(7007);
  int agree = 0;
  for (int k = 0; k < 500; ++k) {
    Expr e = gen.scalar(1 + gen.pick(3));
    VectorField F = gen.field();
    HybridState st = gen.state();
    double sym = eval_scalar(lie_expr(e, F), st);
    double fd = directional_derivative_fd(e, F, st, 1e-6);
    if (std::fabs(sym - fd) <= 1e-4 * (1 + std::fabs(sym))) ++agree;
  }
  o.require(agree == 500, "agreement");
  o.note << agree << "/500 agree";
}

// 8. Braking distance.
void braking_distance(Outcome& o) {
  double d = amv::d_sb(amv::AmvParams{}, 4);
  o.require(std::fabs(d - 13.33) <= 0.01, "d_sb");
  char buf[64];
  std::snprintf(buf, sizeof buf, "d_sb(4) = %.4f", d);
  o.note << buf;
}

// 9. Default scenario shape.
void default_scenario(Outcome& o) {
  auto t0 = Clock::now();
  amv::AmvScenario sc = amv::default_scenario();
  Trajectory tr = run_scenario(sc.scenario, config_of(sc.scenario));
  double dt = seconds_since(t0);
  const Model& m = sc.scenario.model;
  double t_switch = -1;
  std::string detail;
  for (const auto& e : tr.events)
    if (e.tag == "mode" && e.detail.rfind("MOM->", 0) == 0) {
      t_switch = e.time;
      detail = e.detail;
      break;
    }
  o.require(t_switch >= 3 && t_switch <= 7, "switch at 5 +- 2 s");
  auto speed = [&](const HybridState& st) {
    MatVal v = st.get_real(m.lens("v"));
    return std::hypot(v.data[0], v.data[1]);
  };
  bool monotone = t_switch >= 0;
  double prev = INFINITY, covered = 0;
  for (const auto& [t, st] : tr.samples) {
    if (t < t_switch || t > t_switch + 2 + 1e-9) continue;
    double sp = speed(st);
    if (sp > prev + 1e-12) monotone = false;
    prev = sp;
    covered = t - t_switch;
  }
  o.require(monotone && covered >= 2 - 1e-9, "speed decreasing for 2 s");
  double arrival = -1;
  for (const auto& [t, st] : tr.samples) {
    MatVal p = st.get_real(m.lens("p"));
    if (std::hypot(p.data[0] - sc.waypoint[0], p.data[1] - sc.waypoint[1]) <= 1) {
      arrival = t;
      break;
    }
  }
  o.require(arrival >= 0 && arrival < 35, "arrival before 35 s");
  o.require(dt < 10, "runtime");
  o.note << detail << " at " << t_switch << " s, speed decreasing for 2 s: " << (monotone ? "yes" : "no")
         << ", within 1 m of the waypoint at " << arrival << " s, run " << dt << " s";
}

// 10. Proved triples against execution.
void soundness(Outcome& o) {
  const Model& m = verified();
  struct Case {
    TripleReport report;
    std::function<HybridState(std::mt19937_64&)> sample;
  };
  auto coll = [&](std::mt19937_64& g) { return amv::sample_collinear(m, g); };
  auto ap_pre = [&](std::mt19937_64& g) { return amv::sample_ap_pre(m, g); };
  auto lre_pre = [&](std::mt19937_64& g) { return amv::sample_lre_pre(m, g); };
  TripleReport ap = check("AutopilotCollinearity");
  TripleReport co = check("Collinearity");
  std::vector<Case> cases{{co, coll},
                          {check("StraightLine"), coll},
                          {check("HeadingConstant"), coll},
                          {ap, ap_pre},
                          {check("LreTransition"), lre_pre},
                          {compose(ap, co, m.assumptions), ap_pre}};
  std::mt19937_64 rng(1010);
  std::size_t checks = 0, violations = 0, skipped = 0, proved = 0;
  SimConfig cfg;
  for (const auto& c : cases) proved += c.report.proved;
  while (checks < 100000) {
    for (const auto& c : cases) {
      if (!c.report.proved) continue;
      std::vector<HybridState> pres;
      for (int k = 0; k < 500; ++k) pres.push_back(c.sample(rng));
      ValidationReport r = validate_triple(c.report.triple, pres, cfg);
      checks += r.checks;
      violations += r.violations;
      skipped += r.skipped;
    }
    if (proved == 0) break;
  }
  o.require(proved == cases.size(), "all triples proved");
  o.require(violations == 0, "violations");
  o.note << proved << " proved triples, " << checks << " checks, " << violations << " violations, " << skipped
         << " skipped";
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    void (*run)(Outcome&);
  };
  const Criterion criteria[] = {
      {"nmods exactness", nmods_exactness},
      {"collinearity by differential cuts", collinearity},
      {"heading constancy", heading_constant},
      {"autopilot collinearity", autopilot},
      {"LRE transition", lre_transition},
      {"straight-line flow", straight_line},
      {"Lie derivative oracle", lie_oracle},
      {"braking distance", braking_distance},
      {"default scenario", default_scenario},
      {"execution soundness", soundness},
  };
  int n = 0;
  for (const auto& c : criteria) {
    ++n;
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.note << "[error: " << e.what() << "]";
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", n, c.name, o.note.str().c_str());
    std::fflush(stdout);
  }
  return 0;
}
