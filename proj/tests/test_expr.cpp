#include <gtest/gtest.h>

#include <cmath>

#include "helmproof/expr.hpp"

using namespace helmproof;

namespace {

struct Fixture : ::testing::Test {
  SpacePtr sp = register_space({
      {"s", LensKind::Continuous, Sort::Real, {1, 1}},
      {"v", LensKind::Continuous, Sort::Real, {1, 2}},
      {"ob", LensKind::Discrete, Sort::Set, {1, 1}},
      {"m", LensKind::Discrete, Sort::Mode, {1, 1}, false, {"A", "B"}},
  });
  Expr s = ex::var(sp->lens("s"));
  Expr v = ex::var(sp->lens("v"));
  HybridState st = HybridState(sp)
                       .put(sp->lens("s"), MatVal::scalar(2))
                       .put(sp->lens("v"), MatVal::row({3, 4}))
                       .put(sp->lens("ob"), PointSet{{0, 1}, {5, 5}});
};

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::TestFailed;
}

}  // namespace

TEST_F(Fixture, ShapeInference) {
  EXPECT_EQ((s * v).shape(), (Shape{1, 2}));
  EXPECT_EQ((v * v).shape(), (Shape{1, 1}));
  EXPECT_EQ((v * v).op(), Op::Dot);
  EXPECT_EQ(ex::transpose(v).shape(), (Shape{2, 1}));
  EXPECT_EQ(kind_of([&] { (void)(v + s); }), ErrorKind::ShapeMismatch);
  EXPECT_EQ(kind_of([&] { (void)ex::sin(v); }), ErrorKind::ShapeMismatch);
  EXPECT_EQ(kind_of([&] { (void)ex::index(v, 2, 1); }), ErrorKind::IndexOutOfRange);
  EXPECT_EQ(ex::index(v, 1, 2).op(), Op::Var);
}

TEST_F(Fixture, Evaluate) {
  EXPECT_DOUBLE_EQ(eval_scalar(ex::norm(v), st), 5.0);
  EXPECT_DOUBLE_EQ(eval_scalar((v * v) / s, st), 12.5);
  EXPECT_DOUBLE_EQ(eval_scalar(ex::ang(v), st), std::atan2(3.0, 4.0));
  auto o = ex::bound("o");
  EXPECT_DOUBLE_EQ(eval_scalar(ex::setmin("o", sp->lens("ob"), ex::norm(o - v)), st),
                   std::sqrt(5.0));
  EXPECT_TRUE(eval_pred(pr::exists("o", sp->lens("ob"), pr::le(ex::norm(o), ex::constant(1))), st));
  EXPECT_FALSE(eval_pred(pr::forall("o", sp->lens("ob"), pr::le(ex::norm(o), ex::constant(1))), st));
  EXPECT_TRUE(eval_pred(pr::eq(ex::var(sp->lens("m")), ex::mode("A")), st));
}

TEST_F(Fixture, EvalErrorsAreReported) {
  EXPECT_EQ(kind_of([&] { eval_scalar(s / (s - s), st); }), ErrorKind::DivByZero);
  EXPECT_EQ(kind_of([&] { eval_scalar(ex::sqrt(-s), st); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([&] { eval_scalar(ex::acos(s), st); }), ErrorKind::DomainError);
  EXPECT_EQ(kind_of([&] { eval_scalar(ex::log(s - s), st); }), ErrorKind::DomainError);
  // Tiny overshoot of acos is clamped, not an error.
  EXPECT_DOUBLE_EQ(eval_scalar(ex::acos(ex::constant(1 + 1e-14)), st), 0.0);
}

TEST_F(Fixture, CondZeroTolerance) {
  Expr c = ex::cond(pr::ne(s, ex::constant(0)), ex::constant(1), ex::constant(2));
  HybridState tiny = st.put(sp->lens("s"), MatVal::scalar(1e-12));
  EXPECT_DOUBLE_EQ(eval_scalar(c, tiny), 1.0);
  EvalOptions o;
  o.cond_zero_tol = 1e-9;
  EXPECT_DOUBLE_EQ(eval_scalar(c, tiny, o), 2.0);
}

TEST_F(Fixture, WrapAngle) {
  EXPECT_DOUBLE_EQ(wrap_angle(3 * M_PI), M_PI);
  EXPECT_DOUBLE_EQ(wrap_angle(-M_PI), M_PI);
  EXPECT_NEAR(wrap_angle(0.5 - 4 * M_PI), 0.5, 1e-12);
}

TEST_F(Fixture, PrintingIsParenthesised) {
  Expr e = (s - (s + s)) * s;
  EXPECT_EQ(to_string(e), "(s - (s + s)) * s");
  EXPECT_EQ(to_string(ex::neg(s + s)), "-(s + s)");
  EXPECT_EQ(to_string(ex::index(v, 1, 2)), "v[1,2]");
  Pred p = pr::implies(pr::conj(pr::le(s, s), pr::disj(pr::lt(s, s), pr::gt(s, s))), pr::truth());
  EXPECT_EQ(to_string(p), "true");
  p = pr::implies(pr::conj(pr::le(s, s), pr::disj(pr::lt(s, s), pr::gt(s, s))), pr::eq(s, s));
  EXPECT_EQ(to_string(p), "s <= s /\\ (s < s \\/ s > s) => s = s");
}

TEST_F(Fixture, SubstituteWholeAndElement) {
  Expr w = ex::row({ex::constant(1), ex::constant(2)});
  Expr e = ex::index(v, 1, 2) + ex::norm(v);
  Expr r = substitute(e, sp->lens("v"), w);
  EXPECT_DOUBLE_EQ(eval_scalar(r, st), 2 + std::sqrt(5.0));
  Lens v1 = element_of(sp->lens("v"), 1, 1);
  Expr r2 = substitute(ex::norm(v), v1, ex::constant(0));
  EXPECT_DOUBLE_EQ(eval_scalar(r2, st), 4.0);
  EXPECT_EQ(free_lenses(pr::le(r, s)), std::vector<std::string>{"s"});
}

TEST_F(Fixture, ExpandComponents) {
  Expr e = expand_components(v * v);
  EXPECT_EQ(to_string(e), "[v[1,1], v[1,2]] * [v[1,1], v[1,2]]");
  EXPECT_DOUBLE_EQ(eval_scalar(e, st), 25.0);
}
