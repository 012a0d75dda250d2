#include <gtest/gtest.h>

#include <cmath>

#include "gen.hpp"

using namespace helmproof;

namespace {

Expr x() { return ex::var(testgen::space()->lens("x")); }
Expr y() { return ex::var(testgen::space()->lens("y")); }
Expr u() { return ex::var(testgen::space()->lens("u")); }
Expr w() { return ex::var(testgen::space()->lens("w")); }

}  // namespace

TEST(Simplify, ScalarTimesLiteral) {
  Expr e = ex::scalar_mul(ex::param("n", MatVal::scalar(2)), ex::row({x(), y()}));
  EXPECT_EQ(to_string(simplify(e)), "[x * n, y * n]");
}

TEST(Simplify, CancelsSymmetricProducts) {
  Expr e = 2.0 * ex::dot(w(), u()) * ex::dot(w(), w()) - 2.0 * ex::dot(w(), w()) * ex::dot(u(), w());
  EXPECT_TRUE(ex::is_zero_const(simplify(e))) << to_string(simplify(e));
}

TEST(Simplify, AdditiveIdentity) {
  Expr e = x() * y() + ex::constant(0);
  EXPECT_EQ(to_string(simplify(e)), "x * y");
}

TEST(Simplify, Pythagoras) {
  Expr s = ex::sin(x() - y()), c = ex::cos(y() - x());
  EXPECT_TRUE(ex::is_const(simplify(s * s + c * c), 1));
}

TEST(Simplify, NormIsSignInvariant) {
  EXPECT_EQ(to_string(simplify(ex::norm(u() - w()))), to_string(simplify(ex::norm(w() - u()))));
}

TEST(Simplify, ExactSquareRoots) {
  EXPECT_TRUE(ex::is_const(simplify(ex::sqrt(ex::constant(2.25))), 1.5));
  EXPECT_EQ(to_string(simplify(ex::sqrt(x() * x()))), "abs(x)");
}

TEST(Simplify, PredicatesKeepStructure) {
  Pred p = pr::conj(pr::le(x() + x(), y()), pr::eq(u(), w()));
  Pred s = simplify(p);
  EXPECT_EQ(s.op(), PredOp::And);
  EXPECT_EQ(to_string(s), "2 * x <= y /\\ [u[1,1], u[1,2]] = [w[1,1], w[1,2]]");
}

TEST(Simplify, SoundOnRandomTerms) {
  testgen::Gen gen(4242);
  gen.smooth_only = false;
  int compared = 0;
  for (int k = 0; k < 1000; ++k) {
    Expr e = gen.pick(3) ? gen.scalar(1 + gen.pick(3)) : gen.vec(1 + gen.pick(2));
    Expr s = simplify(e);
    ASSERT_EQ(s.shape(), e.shape()) << to_string(e);
    HybridState st = gen.state();
    MatVal a, b;
    try {
      a = eval_expr(e, st);
      b = eval_expr(s, st);
    } catch (const Error& err) {
      ASSERT_TRUE(is_eval_error(err.kind())) << err.what();
      continue;
    }
    for (std::size_t i = 0; i < a.data.size(); ++i)
      EXPECT_LE(std::fabs(a.data[i] - b.data[i]), 1e-9 * (1 + std::fabs(a.data[i])))
          << to_string(e) << "  =>  " << to_string(s);
    ++compared;
  }
  EXPECT_GT(compared, 900);
}

TEST(Simplify, Idempotent) {
  testgen::Gen gen(5);
  for (int k = 0; k < 200; ++k) {
    Expr e = simplify(gen.scalar(2));
    EXPECT_EQ(to_string(simplify(e)), to_string(e));
  }
}
