#include <gtest/gtest.h>

#include "helmproof/proof.hpp"

using namespace helmproof;

namespace {

const Model& verified() {
  static const Model m = load_model(std::string(HELMPROOF_MODEL_DIR) + "/amv_verified.hp");
  return m;
}

Program dyn_ode() {
  const Program& dyn = verified().program("Dyn");
  return dyn.node().parts[1];
}

VC make_vc(const std::string& text, const Model& m) {
  VC vc;
  vc.id = "adhoc#1";
  vc.origin = "test";
  vc.formula = parse_pred(text, m);
  vc.assumptions = m.assumptions;
  vc.space = m.space;
  return vc;
}

Verdict verdict_of(const std::string& text, const Model& m, DischargeOptions opts = {}) {
  return discharge(make_vc(text, m), opts).verdict;
}

TripleReport check(const std::string& name) {
  const Model& m = verified();
  return check_triple(make_triple(m.triple(name)), m.assumptions);
}

std::string explain(const TripleReport& r) {
  std::string out;
  for (std::size_t k = 0; k < r.vcs.size(); ++k)
    out += r.vcs[k].id + " [" + r.vcs[k].origin + "] " + to_string(r.results[k].verdict) + ": " +
           r.results[k].detail + "\n    " + to_string(r.vcs[k].formula) + "\n";
  return out;
}

}  // namespace

TEST(Proof, AssignmentAxiom) {
  Model m = parse_model("state { disc x : real; }\n");
  HoareTriple t = make_triple("Inc", m.space, parse_pred("x + 1 <= 2", m), parse_program("x := x + 1", m),
                              parse_pred("x <= 2", m));
  TripleReport r = check_triple(t, {});
  ASSERT_EQ(r.vcs.size(), 1u);
  EXPECT_EQ(r.vcs[0].id, "Inc#1");
  EXPECT_TRUE(r.proved);
}

TEST(Proof, SkipGivesImplication) {
  Model m = parse_model("state { disc x : real; }\n");
  HoareTriple ok = make_triple("S", m.space, parse_pred("x <= 1", m), hp::skip(), parse_pred("x <= 3", m));
  EXPECT_TRUE(check_triple(ok, {}).proved);
  HoareTriple bad = make_triple("S", m.space, parse_pred("x <= 3", m), hp::skip(), parse_pred("x <= 1", m));
  TripleReport r = check_triple(bad, {});
  EXPECT_FALSE(r.proved);
  ASSERT_EQ(r.results[0].verdict, Verdict::RefutedWithWitness);
  EXPECT_FALSE(eval_pred(r.vcs[0].formula, *r.results[0].witness));
}

TEST(Proof, StarNeedsInvariant) {
  Model m = parse_model("state { disc x : real; }\n");
  HoareTriple t = make_triple("L", m.space, parse_pred("x >= 0", m), hp::star(parse_program("x := x + 1", m)),
                              parse_pred("x >= 0", m));
  try {
    vc_gen(t, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingInvariant);
  }
  t.prog = hp::star(parse_program("x := x + 1", m), parse_pred("x >= 0", m));
  TripleReport r = check_triple(t, {});
  EXPECT_EQ(r.vcs.size(), 3u);
  EXPECT_TRUE(r.proved) << explain(r);
}

TEST(Proof, HavocIsUniversal) {
  Model m = parse_model("state { disc x, y : real; }\n");
  HoareTriple t = make_triple("H", m.space, pr::truth(), parse_program("x := *", m), parse_pred("x <= 5", m));
  TripleReport r = check_triple(t, {});
  EXPECT_FALSE(r.proved);
  EXPECT_EQ(r.results[0].verdict, Verdict::RefutedWithWitness);
}

TEST(Proof, ChoiceIsFirstMatch) {
  Model m = parse_model("state { disc x, k : real; }\n");
  Program p = parse_program("x < 0 -> k := 1 [] x < 5 -> k := 2", m);
  // the second branch is only reached with 0 <= x
  HoareTriple t = make_triple("C", m.space, parse_pred("x < 5", m), p, parse_pred("k = 1 \\/ (k = 2 /\\ x >= 0)", m));
  EXPECT_TRUE(check_triple(t, {}).proved);
}

TEST(Proof, DifferentialInductionExamples) {
  const Model& m = verified();
  auto vcs = dI(parse_pred("dot(a, v) >= 0", m), dyn_ode(), m.space, m.assumptions);
  ASSERT_EQ(vcs.size(), 1u);
  EXPECT_NE(to_string(vcs[0].formula).find("a * a"), std::string::npos) << to_string(vcs[0].formula);
  EXPECT_EQ(discharge(vcs[0]).verdict, Verdict::ProvedSymbolic);

  try {
    dI(parse_pred("s <= rs", m), dyn_ode(), m.space);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotDifferentiable);
    EXPECT_NE(std::string(e.what()).find("Cond"), std::string::npos) << e.what();
  }

  Model c = parse_model("state { cont t : real; }\nconst eps = 0.1;\n");
  VectorField F;
  F.bind(c.lens("t"), ex::constant(1));
  Program ode = hp::ode(F, parse_pred("t < eps", c));
  auto tv = dI(parse_pred("t <= eps", c), ode, c.space, {});
  ASSERT_EQ(tv.size(), 1u);
  EXPECT_EQ(to_string(tv[0].formula), "t < eps => 1 <= 0");
  EXPECT_EQ(discharge(tv[0]).verdict, Verdict::RefutedWithWitness);
}

TEST(Proof, DifferentialCut) {
  const Model& m = verified();
  auto vcs = dC(parse_pred("dot(a, v) >= 0", m), parse_pred("dot(a, v)^2 = dot(a, a) * dot(v, v)", m), dyn_ode(),
                m.space, m.assumptions);
  ASSERT_EQ(vcs.size(), 2u);
  for (const auto& vc : vcs) EXPECT_EQ(discharge(vc).verdict, Verdict::ProvedSymbolic) << to_string(vc.formula);
  auto plain = dC(pr::truth(), parse_pred("dot(a, v) >= 0", m), dyn_ode(), m.space, m.assumptions);
  EXPECT_EQ(plain.size(), 1u);
}

TEST(Proof, DischargeExamples) {
  const Model& m = verified();
  EXPECT_EQ(verdict_of("2 * dot(a, v) * dot(a, a) = 2 * dot(a, a) * dot(v, a)", m), Verdict::ProvedSymbolic);
  EXPECT_EQ(verdict_of("t < eps => 1 <= 0", m), Verdict::RefutedWithWitness);
  // true, closed by the sign rules; sampling alone cannot prove it
  EXPECT_EQ(verdict_of("ax_AV => s >= -1", m), Verdict::ProvedSymbolic);
  DischargeOptions sampling_only;
  sampling_only.symbolic = false;
  sampling_only.box.ranges["s"] = {0, 4};
  EXPECT_EQ(verdict_of("ax_AV => s >= -1", m, sampling_only), Verdict::Unknown);
}

TEST(Proof, SmtExport) {
  const Model& m = verified();
  std::string smt = export_smtlib(make_vc("dot(a, v) >= 0 => dot(a, a) >= 0", m));
  EXPECT_NE(smt.find("(set-logic QF_UFNRA)"), std::string::npos);
  for (const char* sym : {"a_1_1", "a_1_2", "v_1_1", "v_1_2"})
    EXPECT_NE(smt.find(std::string("(declare-const ") + sym + " Real)"), std::string::npos) << sym;
  EXPECT_NE(smt.find("(check-sat)"), std::string::npos);
  EXPECT_EQ(smt, export_smtlib(make_vc("dot(a, v) >= 0 => dot(a, a) >= 0", m)));

  std::string trig = export_smtlib(make_vc("sin(phi)^2 + cos(phi)^2 = 1", m));
  EXPECT_NE(trig.find("(declare-fun hp_sin (Real) Real)"), std::string::npos);
  EXPECT_NE(trig.find("(hp_cos phi))) 1.0))"), std::string::npos) << trig;

  try {
    export_smtlib(make_vc("near => s >= 0", m));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedTheory);
  }
}

TEST(Proof, CollinearityTriple) {
  TripleReport r = check("Collinearity");
  EXPECT_TRUE(r.proved) << explain(r);
  EXPECT_GE(r.vcs.size(), 3u);
}

TEST(Proof, HeadingConstantTriple) {
  TripleReport r = check("HeadingConstant");
  EXPECT_TRUE(r.proved) << explain(r);
}

TEST(Proof, StraightLineTriple) {
  TripleReport r = check("StraightLine");
  EXPECT_TRUE(r.proved) << explain(r);
}

TEST(Proof, AutopilotCollinearityTriple) {
  TripleReport r = check("AutopilotCollinearity");
  EXPECT_TRUE(r.proved) << explain(r);
}

TEST(Proof, LreTransitionTriple) {
  TripleReport r = check("LreTransition");
  EXPECT_TRUE(r.proved) << explain(r);
}

TEST(Proof, NmodsRuleAndComposition) {
  const Model& m = verified();
  HoareTriple frame = make_triple("Frame", m.space, m.pred("collinear"), m.program("LRE"), m.pred("collinear"));
  auto r = nmods_triple(frame);
  ASSERT_TRUE(r);
  EXPECT_TRUE(r->proved);
  EXPECT_TRUE(r->vcs.empty());

  TripleReport ap = check("AutopilotCollinearity");
  TripleReport dyn = check("Collinearity");
  TripleReport both = compose(ap, dyn, m.assumptions);
  EXPECT_TRUE(both.proved) << explain(both);
  EXPECT_EQ(both.triple.name, "AutopilotCollinearity;Collinearity");
}

TEST(Proof, SessionJsonRoundTrip) {
  ProofSession s("models/amv_verified.hp");
  s.add(check("AutopilotCollinearity"));
  auto [model, entries] = ProofSession::read_json(s.to_json());
  EXPECT_EQ(model, "models/amv_verified.hp");
  ASSERT_FALSE(entries.empty());
  EXPECT_EQ(entries[0].id, "AutopilotCollinearity#1");
  EXPECT_EQ(entries[0].verdict, "ProvedSymbolic");
  EXPECT_NE(s.to_text().find("PROVED"), std::string::npos);
}

TEST(Proof, SymbolicVerdictsSurviveSampling) {
  const Model& m = verified();
  DischargeOptions sampling_only;
  sampling_only.symbolic = false;
  sampling_only.samples = 5000;
  for (const char* name : {"Collinearity", "HeadingConstant", "StraightLine", "AutopilotCollinearity",
                           "LreTransition"}) {
    TripleReport r = check(name);
    for (std::size_t k = 0; k < r.vcs.size(); ++k) {
      if (r.results[k].verdict != Verdict::ProvedSymbolic) continue;
      EXPECT_NE(discharge(r.vcs[k], sampling_only).verdict, Verdict::RefutedWithWitness) << r.vcs[k].id;
    }
  }
  (void)m;
}
