#include <gtest/gtest.h>

#include "helmproof/model.hpp"

using namespace helmproof;

namespace {

std::string model_path(const std::string& f) { return std::string(HELMPROOF_MODEL_DIR) + "/" + f; }

const Model& verified() {
  static const Model m = load_model(model_path("amv_verified.hp"));
  return m;
}

template <class F>
Error expect_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  ADD_FAILURE() << "no error raised";
  return Error(ErrorKind::NoProgress, "none");
}

const char* kSmall = R"(
state {
  cont x, y : real;
  cont q : real[1,2];
  disc k : real;
  disc md : mode {A, B};
  disc obs : set;
}
const c = 2;
expr twice = 2 * x;
pred pos = 0 < x;
prog inc = x := x + 1;
)";

}  // namespace

TEST(Parse, VerifiedModelShape) {
  const Model& m = verified();
  EXPECT_EQ(m.space->cont_dim(), 9u);
  EXPECT_EQ(m.space->disc_count(), 8u);
  for (const char* p : {"LRE", "AP", "Dyn", "steerToWP", "Ctrl", "AMV"}) EXPECT_TRUE(m.has_program(p)) << p;
  EXPECT_EQ(m.triples.size(), 5u);
  EXPECT_EQ(m.constant("S").as_scalar(), 4.0);
  EXPECT_FALSE(m.assumptions.empty());
  HybridState st(m.space);
  EXPECT_EQ(std::get<Mode>(st.get(m.lens("m"))).symbol, "MOM");
}

TEST(Parse, GhostsExtendTripleSpace) {
  const TripleDecl& t = verified().triple("StraightLine");
  ASSERT_EQ(t.ghosts.size(), 2u);
  EXPECT_EQ(t.ghosts[0].lens.name, "old_v");
  EXPECT_EQ(t.ghosts[1].lens.name, "old_p");
  EXPECT_TRUE(t.space->find("old_p"));
  EXPECT_FALSE(verified().space->find("old_p"));
  const TripleDecl& h = verified().triple("HeadingConstant");
  ASSERT_EQ(h.ghosts.size(), 1u);
  EXPECT_EQ(h.ghosts[0].lens.name, "X");
  EXPECT_EQ(h.cuts.size(), 2u);
}

TEST(Parse, SimModelAndScenario) {
  Scenario sc = load_scenario(model_path("default.scn"));
  EXPECT_EQ(sc.name, "default");
  EXPECT_EQ(sc.ctrl, "Ctrl");
  EXPECT_DOUBLE_EQ(sc.horizon, 35);
  EXPECT_EQ(std::get<MatVal>(sc.init.get(sc.model.lens("p"))), MatVal::row({-10, -10}));
  EXPECT_EQ(std::get<MatVal>(sc.init.get(sc.model.lens("v"))), MatVal::row({-0.5, -3.8}));
  EXPECT_EQ(std::get<PointSet>(sc.init.get(sc.model.lens("ob"))).size(), 1u);
  EXPECT_EQ(std::get<Mode>(sc.init.get(sc.model.lens("m"))).symbol, "MOM");
  EXPECT_EQ(sc.columns.size(), 4u);
  EXPECT_EQ(sc.watches.size(), 1u);
}

TEST(Parse, ScenarioOverridesConstants) {
  Scenario sc = load_scenario(model_path("default.scn"), {{"S", MatVal::scalar(5)}});
  EXPECT_EQ(sc.model.constant("S").as_scalar(), 5.0);
}

TEST(Parse, MatrixLiterals) {
  Expr m = parse_matrix("[[1,2],[3,4]]");
  EXPECT_EQ(m.shape(), (Shape{2, 2}));
  Expr r = parse_matrix("[1, 2]");
  EXPECT_EQ(r.shape(), (Shape{1, 2}));

  Model ctx = parse_model("state { cont x1, x2, y1, y2 : real; }");
  Expr sym = parse_matrix("[x1+x2, y1+y2]", &ctx);
  EXPECT_EQ(sym.shape(), (Shape{1, 2}));
  EXPECT_EQ(sym.op(), Op::MatLit);
  EXPECT_EQ(to_string(sym), "[x1 + x2, y1 + y2]");
}

TEST(Parse, RaggedRowsLocated) {
  Error e = expect_error([] { parse_matrix("[[1,2],\n [3]]"); });
  EXPECT_EQ(e.kind(), ErrorKind::RaggedRows);
  EXPECT_EQ(e.line(), 2);
  EXPECT_EQ(e.col(), 2);

  Error f = expect_error([] { parse_model("state { cont x : real; }\nexpr bad = [[1, 2], [3]];\n"); });
  EXPECT_EQ(f.kind(), ErrorKind::RaggedRows);
  EXPECT_EQ(f.line(), 2);
}

TEST(Parse, ProgramsAgainstModel) {
  const Model& m = verified();
  Program p = parse_program("rs := S ; steerToWP", m);
  ASSERT_EQ(p.op(), ProgOp::Seq);
  ASSERT_EQ(p.node().parts.size(), 2u);
  EXPECT_EQ(p.node().parts[0].node().target->name, "rs");
  EXPECT_EQ(to_string(p.node().parts[0].node().value), "S");
  EXPECT_EQ(p.node().parts[1].node().target->name, "rh");
  EXPECT_EQ(to_string(p.node().parts[1].node().value), "atan2((wp - p)[1,1], (wp - p)[1,2])");

  Program g = parse_program("m = OCM -> skip", m);
  ASSERT_EQ(g.op(), ProgOp::Choice);
  ASSERT_EQ(g.node().alts.size(), 1u);
  EXPECT_EQ(g.node().alts[0].body.op(), ProgOp::Skip);
}

TEST(Parse, ProgramErrors) {
  Model ctx = parse_model("state { cont x : real[1,3]; disc y : real; }");
  Error e = expect_error([&] { parse_program("x := [1,2,3", ctx); });
  EXPECT_EQ(e.kind(), ErrorKind::ParseError);
  EXPECT_EQ(e.line(), 1);
  EXPECT_GT(e.col(), 1);

  EXPECT_EQ(expect_error([&] { parse_program("x := [1,2]", ctx); }).kind(), ErrorKind::ShapeMismatch);
  EXPECT_EQ(expect_error([&] { parse_program("z := 1", ctx); }).kind(), ErrorKind::UnknownLens);
  EXPECT_EQ(expect_error([&] { parse_program("ode { y' = 1 }", ctx); }).kind(), ErrorKind::InvalidProgram);
}

TEST(Parse, ModelErrors) {
  EXPECT_EQ(expect_error([] { parse_model(""); }).kind(), ErrorKind::ParseError);
  EXPECT_EQ(expect_error([] { parse_model("  # only a comment\n"); }).kind(), ErrorKind::ParseError);
  Error d = expect_error([] { parse_model("state {\n cont x : real;\n disc x : real;\n}"); });
  EXPECT_EQ(d.kind(), ErrorKind::DuplicateName);
  EXPECT_EQ(d.line(), 3);
  Error u = expect_error([] { parse_model("state { cont x : real; }\npred bad = 0 < zz;"); });
  EXPECT_EQ(u.kind(), ErrorKind::UnknownLens);
  EXPECT_EQ(u.line(), 2);
  EXPECT_EQ(u.col(), 16);
  EXPECT_EQ(expect_error([] { parse_model("state { cont x : real[0,2]; }"); }).kind(), ErrorKind::ZeroDimension);
  EXPECT_EQ(expect_error([] { parse_model("state { cont x : real; } triple T { pre true; }"); }).kind(),
            ErrorKind::ParseError);
}

TEST(Parse, ExpressionsAndPredicates) {
  Model m = parse_model(kSmall);
  EXPECT_EQ(to_string(parse_expr("twice + c", m)), "2 * x + c");
  EXPECT_EQ(to_string(parse_expr("-x^2", m)), "-(x * x)");
  EXPECT_EQ(to_string(parse_expr("q[2]", m)), "q[1,2]");
  EXPECT_EQ(to_string(parse_expr("sin x * cos(y)", m)), "sin(x) * cos(y)");
  EXPECT_EQ(parse_expr("-3", m).op(), Op::Const);
  EXPECT_EQ(to_string(parse_pred("pos /\\ x <= y => y > 0", m)), "0 < x /\\ x <= y => y > 0");
  EXPECT_EQ(to_string(parse_pred("(x < 1 \\/ y < 1) /\\ md = A", m)), "(x < 1 \\/ y < 1) /\\ md = A");
  EXPECT_EQ(to_string(parse_pred("(x + 1) * 2 < y", m)), "(x + 1) * 2 < y");
  EXPECT_EQ(to_string(parse_pred("exists o in obs. norm(o - q) <= 1 /\\ x < 2", m)),
            "(exists o in obs. norm(o - q) <= 1 /\\ x < 2)");
  EXPECT_EQ(parse_expr("minover(o in obs, norm(o - q))", m).op(), Op::SetMin);
  EXPECT_EQ(expect_error([&] { parse_pred("q < x", m); }).kind(), ErrorKind::ShapeMismatch);
  EXPECT_EQ(expect_error([&] { parse_expr("x + q", m); }).kind(), ErrorKind::ShapeMismatch);
}

TEST(Parse, ProgramPrintRoundTrip) {
  const Model& m = verified();
  for (const char* name : {"LRE", "AP", "Dyn", "AMV", "CAMbody"}) {
    std::string once = to_string(m.program(name));
    std::string twice = to_string(parse_program(once, m));
    EXPECT_EQ(once, twice) << name;
  }
  Model sim = load_model(model_path("amv_sim.hp"));
  for (const char* name : {"LRE", "AP", "Ctrl", "Dyn"}) {
    std::string once = to_string(sim.program(name));
    EXPECT_EQ(once, to_string(parse_program(once, sim))) << name;
  }
}

TEST(Parse, MatrixPrintRoundTrip) {
  Model ctx = parse_model("state { cont x, y : real; }");
  for (const char* src : {"[[1, 2], [3, 4]]", "[x * y, -x]", "[[x + 1], [2 * y]]", "[sin(x), cos(y) / 2]"}) {
    std::string once = to_string(parse_matrix(src, &ctx));
    std::string twice = to_string(parse_matrix(once, &ctx));
    EXPECT_EQ(once, twice) << src;
  }
}
