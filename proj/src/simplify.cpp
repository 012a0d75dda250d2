#include "poly.hpp"

namespace helmproof {

namespace {

Expr simplify_in(poly::Context& ctx, const Expr& e) {
  if (e.sort() != Sort::Real) return e;
  auto comps = ctx.convert(e);
  Shape s = e.shape();
  if (s.is_scalar()) return ctx.to_expr(comps[0]);
  std::vector<Expr> out;
  for (const auto& p : comps) out.push_back(ctx.to_expr(p));
  return ex::matlit(s.rows, s.cols, std::move(out));
}

Pred simplify_in(poly::Context& ctx, const Pred& p) {
  const PredNode& n = p.node();
  switch (n.op) {
    case PredOp::True:
    case PredOp::False: return p;
    case PredOp::Cmp: return pr::cmp(simplify_in(ctx, n.lhs), n.cmp, simplify_in(ctx, n.rhs));
    case PredOp::And: return pr::conj(simplify_in(ctx, n.args[0]), simplify_in(ctx, n.args[1]));
    case PredOp::Or: return pr::disj(simplify_in(ctx, n.args[0]), simplify_in(ctx, n.args[1]));
    case PredOp::Implies: return pr::implies(simplify_in(ctx, n.args[0]), simplify_in(ctx, n.args[1]));
    case PredOp::Not: return pr::neg(simplify_in(ctx, n.args[0]));
    case PredOp::Exists:
    case PredOp::Forall: return p;
  }
  return p;
}

}  // namespace

Expr simplify(const Expr& e) {
  poly::Context ctx;
  return simplify_in(ctx, e);
}

Pred simplify(const Pred& p) {
  poly::Context ctx;
  return simplify_in(ctx, p);
}

}  // namespace helmproof
