#include "helmproof/deriv.hpp"

#include <algorithm>

namespace helmproof {

const char* to_string(DiffVerdict v) noexcept {
  switch (v) {
    case DiffVerdict::Differentiable: return "Differentiable";
    case DiffVerdict::NotDifferentiable: return "NotDifferentiable";
    case DiffVerdict::Unsupported: return "Unsupported";
  }
  return "?";
}

void VectorField::bind(const Lens& l, const Expr& rhs) {
  if (!l.is_continuous() || l.is_element())
    throw Error(ErrorKind::InvalidProgram, "ODE binding needs a whole continuous variable, got '" + l.name + "'");
  if (rhs.sort() != Sort::Real || rhs.shape() != l.shape)
    throw Error(ErrorKind::ShapeMismatch, "derivative of " + l.name + " : " + to_string(l.shape) +
                                              " given as " + to_string(rhs.shape()) + " value " + to_string(rhs));
  for (auto& [k, v] : bindings)
    if (k.name == l.name) throw Error(ErrorKind::DuplicateName, "derivative of '" + l.name + "' given twice");
  bindings.emplace_back(l, rhs);
}

const Expr* VectorField::find(const std::string& name) const {
  for (const auto& [l, e] : bindings)
    if (l.name == name) return &e;
  return nullptr;
}

Expr VectorField::rate(const Lens& l) const {
  const Expr* rhs = find(l.root());
  if (!rhs || !l.is_continuous()) return ex::zero(l.shape);
  if (l.is_element()) return ex::index(*rhs, l.elem_row, l.elem_col);
  return *rhs;
}

namespace {

bool reads_continuous(const Expr& e, const VectorField* F);

bool reads_continuous(const Pred& p, const VectorField* F) {
  const PredNode& n = p.node();
  if (n.op == PredOp::Cmp) return reads_continuous(n.lhs, F) || reads_continuous(n.rhs, F);
  return std::any_of(n.args.begin(), n.args.end(), [&](const Pred& q) { return reads_continuous(q, F); });
}

bool reads_continuous(const Expr& e, const VectorField* F) {
  const ExprNode& n = e.node();
  if (n.op == Op::Var && n.lens->is_continuous()) return F ? F->binds(n.lens->root()) : true;
  if (n.op == Op::Cond && reads_continuous(n.pred, F)) return true;
  return std::any_of(n.args.begin(), n.args.end(), [&](const Expr& a) { return reads_continuous(a, F); });
}

const char* node_name(Op op) {
  switch (op) {
    case Op::Cond: return "Cond";
    case Op::Sgn: return "Sgn";
    case Op::Abs: return "Abs";
    case Op::Min: return "Min";
    case Op::Max: return "Max";
    case Op::Acos: return "Acos";
    case Op::Wrap: return "Wrap";
    case Op::SetMin: return "SetMin";
    case Op::Norm: return "Norm";
    case Op::Div: return "Div";
    default: return "node";
  }
}

bool lacks_rule(Op op) {
  switch (op) {
    case Op::Cond:
    case Op::Sgn:
    case Op::Abs:
    case Op::Min:
    case Op::Max:
    case Op::Acos:
    case Op::Wrap:
    case Op::SetMin: return true;
    default: return false;
  }
}

DiffClass classify_rec(const Expr& e) {
  const ExprNode& n = e.node();
  if (!reads_continuous(e, nullptr)) return {};
  if (lacks_rule(n.op))
    return {DiffVerdict::Unsupported, node_name(n.op), "no Lie derivative rule for " + to_string(e)};
  if (n.op == Op::Div && ex::is_zero_const(n.args[1]))
    return {DiffVerdict::NotDifferentiable, "Div", "division by zero in " + to_string(e)};
  if (n.op == Op::Norm && ex::is_zero_const(n.args[0]))
    return {DiffVerdict::NotDifferentiable, "Norm", "norm of the zero vector in " + to_string(e)};
  for (const auto& a : n.args) {
    DiffClass c = classify_rec(a);
    if (!c.ok()) return c;
  }
  return {};
}

}  // namespace

DiffClass classify(const Expr& e) { return classify_rec(e); }

DiffClass classify(const Pred& p) {
  const PredNode& n = p.node();
  switch (n.op) {
    case PredOp::True:
    case PredOp::False: return {};
    case PredOp::Cmp: {
      DiffClass c = classify(n.lhs);
      return c.ok() ? classify(n.rhs) : c;
    }
    case PredOp::Exists:
    case PredOp::Forall:
      if (reads_continuous(p, nullptr))
        return {DiffVerdict::Unsupported, n.op == PredOp::Exists ? "Exists" : "Forall",
                "set quantifier over a continuous formula: " + to_string(p)};
      return {};
    default:
      for (const auto& a : n.args) {
        DiffClass c = classify(a);
        if (!c.ok()) return c;
      }
      return {};
  }
}

namespace {

// Small constructors that drop zero terms so derivatives stay readable.
Expr z_add(const Expr& a, const Expr& b) {
  if (ex::is_zero_const(a)) return b;
  if (ex::is_zero_const(b)) return a;
  return ex::add(a, b);
}

Expr z_sub(const Expr& a, const Expr& b) {
  if (ex::is_zero_const(b)) return a;
  if (ex::is_zero_const(a)) return ex::neg(b);
  return ex::sub(a, b);
}

Expr z_mul(const Expr& a, const Expr& b) {
  if (ex::is_zero_const(a) || ex::is_zero_const(b)) {
    Shape s = a.shape().is_scalar() ? b.shape() : a.shape();
    if (!a.shape().is_scalar() && !b.shape().is_scalar()) s = {1, 1};
    return ex::zero(s);
  }
  if (ex::is_const(a, 1)) return b;
  if (ex::is_const(b, 1)) return a;
  return ex::mul(a, b);
}

Expr z_neg(const Expr& a) { return ex::is_zero_const(a) ? a : ex::neg(a); }

Expr lie(const Expr& e, const VectorField& F, std::vector<Pred>* side) {
  const ExprNode& n = e.node();
  if (e.sort() != Sort::Real) throw Error(ErrorKind::UnsupportedNode, "cannot differentiate " + to_string(e));
  if (!reads_continuous(e, &F)) return ex::zero(e.shape());
  auto d = [&](std::size_t k) { return lie(n.args[k], F, side); };
  switch (n.op) {
    case Op::Var: return F.rate(*n.lens);
    case Op::Neg: return z_neg(d(0));
    case Op::Add: return z_add(d(0), d(1));
    case Op::Sub: return z_sub(d(0), d(1));
    case Op::Mul:
    case Op::ScalarMul:
    case Op::Dot: return z_add(z_mul(d(0), n.args[1]), z_mul(n.args[0], d(1)));
    case Op::Div: {
      const Expr& a = n.args[0];
      const Expr& b = n.args[1];
      Expr db = d(1);
      if (ex::is_zero_const(db)) return ex::div(d(0), b);
      return ex::div(z_sub(z_mul(d(0), b), z_mul(a, db)), ex::mul(b, b));
    }
    case Op::Norm: {
      const Expr& a = n.args[0];
      Expr da = d(0);
      if (ex::is_zero_const(da)) return ex::zero(e.shape());
      if (side) side->push_back(pr::lt(ex::constant(0), e));
      return ex::div(z_mul(a, da), e);
    }
    case Op::Transpose: return ex::transpose(d(0));
    case Op::MatLit: {
      std::vector<Expr> cells;
      for (std::size_t k = 0; k < n.args.size(); ++k) cells.push_back(d(k));
      return ex::matlit(n.shape.rows, n.shape.cols, std::move(cells));
    }
    case Op::Index: return ex::index(d(0), n.row, n.col);
    case Op::Sin: return z_mul(d(0), ex::cos(n.args[0]));
    case Op::Cos: return z_neg(z_mul(d(0), ex::sin(n.args[0])));
    case Op::Sqrt: {
      Expr da = d(0);
      if (ex::is_zero_const(da)) return ex::zero(e.shape());
      if (side) side->push_back(pr::lt(ex::constant(0), n.args[0]));
      return ex::div(da, ex::mul(ex::constant(2), e));
    }
    case Op::Log: {
      Expr da = d(0);
      if (ex::is_zero_const(da)) return ex::zero(e.shape());
      if (side) side->push_back(pr::lt(ex::constant(0), n.args[0]));
      return ex::div(da, n.args[0]);
    }
    case Op::Atan2: {
      const Expr& y = n.args[0];
      const Expr& x = n.args[1];
      if (ex::is_zero_const(d(0)) && ex::is_zero_const(d(1))) return ex::zero(e.shape());
      Expr r2 = ex::add(ex::mul(x, x), ex::mul(y, y));
      if (side) side->push_back(pr::lt(ex::constant(0), r2));
      return ex::div(z_sub(z_mul(x, d(0)), z_mul(y, d(1))), r2);
    }
    default: break;
  }
  throw Error(ErrorKind::UnsupportedNode, std::string("no Lie derivative rule for ") + node_name(n.op) + " in " +
                                              to_string(e));
}

}  // namespace

Expr lie_expr(const Expr& e, const VectorField& F, std::vector<Pred>* side) { return lie(e, F, side); }

Pred normalize_for_lie(const Pred& p) {
  const PredNode& n = p.node();
  switch (n.op) {
    case PredOp::True:
    case PredOp::False: return p;
    case PredOp::Cmp:
      switch (n.cmp) {
        case CmpOp::Gt: return pr::lt(n.rhs, n.lhs);
        case CmpOp::Ge: return pr::le(n.rhs, n.lhs);
        default: return p;
      }
    case PredOp::And: return pr::conj(normalize_for_lie(n.args[0]), normalize_for_lie(n.args[1]));
    case PredOp::Or: return pr::disj(normalize_for_lie(n.args[0]), normalize_for_lie(n.args[1]));
    case PredOp::Implies: return normalize_for_lie(pr::disj(pr::neg(n.args[0]), n.args[1]));
    case PredOp::Not: {
      const Pred& q = n.args[0];
      const PredNode& m = q.node();
      switch (m.op) {
        case PredOp::True: return pr::falsity();
        case PredOp::False: return pr::truth();
        case PredOp::Not: return normalize_for_lie(m.args[0]);
        case PredOp::And: return normalize_for_lie(pr::disj(pr::neg(m.args[0]), pr::neg(m.args[1])));
        case PredOp::Or: return normalize_for_lie(pr::conj(pr::neg(m.args[0]), pr::neg(m.args[1])));
        case PredOp::Implies: return normalize_for_lie(pr::conj(m.args[0], pr::neg(m.args[1])));
        case PredOp::Cmp:
          if (!m.lhs.shape().is_scalar() || m.lhs.sort() != Sort::Real) break;
          switch (m.cmp) {
            case CmpOp::Le: return pr::lt(m.rhs, m.lhs);
            case CmpOp::Lt: return pr::le(m.rhs, m.lhs);
            case CmpOp::Ge: return pr::lt(m.lhs, m.rhs);
            case CmpOp::Gt: return pr::le(m.lhs, m.rhs);
            case CmpOp::Eq: return pr::ne(m.lhs, m.rhs);
            case CmpOp::Ne: return pr::eq(m.lhs, m.rhs);
          }
          break;
        default: break;
      }
      return p;
    }
    default: return p;
  }
}

namespace {

Pred lie_p(const Pred& p, const VectorField& F, std::vector<Pred>* side) {
  if (!reads_continuous(p, &F)) return pr::truth();
  const PredNode& n = p.node();
  switch (n.op) {
    case PredOp::True:
    case PredOp::False: return pr::truth();
    case PredOp::Cmp: {
      Expr a = lie(n.lhs, F, side);
      Expr b = lie(n.rhs, F, side);
      switch (n.cmp) {
        case CmpOp::Eq: return pr::eq(a, b);
        case CmpOp::Le:
        case CmpOp::Lt: return pr::le(a, b);
        default: break;
      }
      break;
    }
    case PredOp::And:
    case PredOp::Or: return pr::conj(lie_p(n.args[0], F, side), lie_p(n.args[1], F, side));
    default: break;
  }
  throw Error(ErrorKind::UnsupportedPredicate, "no Lie derivative for " + to_string(p));
}

}  // namespace

Pred lie_pred(const Pred& p, const VectorField& F, std::vector<Pred>* side) {
  return lie_p(normalize_for_lie(p), F, side);
}

std::vector<double> eval_field(const VectorField& F, const HybridState& st, const EvalOptions& opts) {
  std::vector<double> out(st.cont().size(), 0.0);
  for (const auto& [l, rhs] : F.bindings) {
    MatVal v = eval_expr(rhs, st, opts);
    std::copy(v.data.begin(), v.data.end(), out.begin() + static_cast<std::ptrdiff_t>(l.offset));
  }
  return out;
}

double directional_derivative_fd(const Expr& e, const VectorField& F, const HybridState& st, double h) {
  std::vector<double> f = eval_field(F, st);
  std::vector<double> up(st.cont().begin(), st.cont().end()), down = up;
  for (std::size_t k = 0; k < f.size(); ++k) {
    up[k] += h * f[k];
    down[k] -= h * f[k];
  }
  double a = eval_scalar(e, st.with_cont(std::move(up)));
  double b = eval_scalar(e, st.with_cont(std::move(down)));
  return (a - b) / (2 * h);
}

}  // namespace helmproof
