#include "helmproof/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

namespace helmproof {

const char* to_string(CmpOp op) noexcept {
  switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Le: return "<=";
    case CmpOp::Lt: return "<";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    case CmpOp::Ne: return "!=";
  }
  return "?";
}

Op Expr::op() const { return n_->op; }
Shape Expr::shape() const { return n_->shape; }
Sort Expr::sort() const { return n_->sort; }
const std::vector<Expr>& Expr::args() const { return n_->args; }

PredOp Pred::op() const { return n_->op; }
CmpOp Pred::cmp() const { return n_->cmp; }
const Expr& Pred::lhs() const { return n_->lhs; }
const Expr& Pred::rhs() const { return n_->rhs; }
const std::vector<Pred>& Pred::args() const { return n_->args; }

namespace {

[[noreturn]] void mismatch(const std::string& what) { throw Error(ErrorKind::ShapeMismatch, what); }

Expr make(ExprNode n) { return Expr(std::make_shared<const ExprNode>(std::move(n))); }
Pred makep(PredNode n) { return Pred(std::make_shared<const PredNode>(std::move(n))); }

void need_real(const Expr& a, const char* ctx) {
  if (a.sort() != Sort::Real) mismatch(std::string(ctx) + " expects a real operand, got " + to_string(a));
}

void need_scalar(const Expr& a, const char* ctx) {
  need_real(a, ctx);
  if (!a.shape().is_scalar())
    mismatch(std::string(ctx) + " expects a scalar, got " + to_string(a.shape()) + " operand " + to_string(a));
}

bool is_vector(Shape s) { return s.rows == 1 || s.cols == 1; }

Expr node(Op op, Shape shape, std::vector<Expr> args) {
  ExprNode n;
  n.op = op;
  n.shape = shape;
  n.args = std::move(args);
  return make(std::move(n));
}

}  // namespace

// ---------------------------------------------------------------------------
// Expression builders

namespace ex {

Expr constant(double x) { return constant(MatVal::scalar(x)); }

Expr constant(const MatVal& m) {
  ExprNode n;
  n.op = Op::Const;
  n.shape = m.shape();
  n.value = m;
  return make(std::move(n));
}

Expr zero(Shape s) { return constant(MatVal::zeros(s)); }

Expr param(const std::string& name, const MatVal& value) {
  ExprNode n;
  n.op = Op::Param;
  n.shape = value.shape();
  n.value = value;
  n.name = name;
  return make(std::move(n));
}

Expr var(const Lens& l) {
  ExprNode n;
  n.op = Op::Var;
  n.shape = l.shape;
  n.sort = l.sort;
  n.name = l.name;
  n.lens = l;
  return make(std::move(n));
}

Expr bound(const std::string& name, Shape s) {
  ExprNode n;
  n.op = Op::Bound;
  n.shape = s;
  n.name = name;
  return make(std::move(n));
}

Expr mode(const std::string& symbol) {
  ExprNode n;
  n.op = Op::ModeLit;
  n.sort = Sort::Mode;
  n.name = symbol;
  return make(std::move(n));
}

Expr neg(const Expr& a) {
  need_real(a, "negation");
  return node(Op::Neg, a.shape(), {a});
}

static Expr additive(Op op, const Expr& a, const Expr& b) {
  need_real(a, "+/-");
  need_real(b, "+/-");
  if (a.shape() != b.shape())
    mismatch("cannot add " + to_string(a.shape()) + " and " + to_string(b.shape()) + ": " + to_string(a) +
             (op == Op::Add ? " + " : " - ") + to_string(b));
  return node(op, a.shape(), {a, b});
}

Expr add(const Expr& a, const Expr& b) { return additive(Op::Add, a, b); }
Expr sub(const Expr& a, const Expr& b) { return additive(Op::Sub, a, b); }

Expr mul(const Expr& a, const Expr& b) {
  need_real(a, "*");
  need_real(b, "*");
  bool sa = a.shape().is_scalar(), sb = b.shape().is_scalar();
  if (sa && sb) return node(Op::Mul, {1, 1}, {a, b});
  if (sa) return node(Op::ScalarMul, b.shape(), {a, b});
  if (sb) return node(Op::ScalarMul, a.shape(), {b, a});
  return dot(a, b);
}

Expr scalar_mul(const Expr& k, const Expr& m) {
  need_scalar(k, "scalar multiplication");
  need_real(m, "scalar multiplication");
  return node(Op::ScalarMul, m.shape(), {k, m});
}

Expr div(const Expr& a, const Expr& b) {
  need_real(a, "/");
  need_scalar(b, "/ (divisor)");
  return node(Op::Div, a.shape(), {a, b});
}

Expr dot(const Expr& a, const Expr& b) {
  need_real(a, "dot");
  need_real(b, "dot");
  if (a.shape() != b.shape() || !is_vector(a.shape()))
    mismatch("dot needs two vectors of equal shape, got " + to_string(a.shape()) + " and " +
             to_string(b.shape()));
  return node(Op::Dot, {1, 1}, {a, b});
}

Expr norm(const Expr& a) {
  need_real(a, "norm");
  return node(Op::Norm, {1, 1}, {a});
}

Expr transpose(const Expr& a) {
  need_real(a, "transpose");
  return node(Op::Transpose, {a.shape().cols, a.shape().rows}, {a});
}

Expr matlit(std::size_t rows, std::size_t cols, std::vector<Expr> entries) {
  if (rows == 0 || cols == 0) throw Error(ErrorKind::ZeroDimension, "empty matrix literal");
  if (entries.size() != rows * cols) mismatch("matrix literal has wrong number of entries");
  for (const auto& e : entries) need_scalar(e, "matrix literal");
  return node(Op::MatLit, {rows, cols}, std::move(entries));
}

Expr row(std::vector<Expr> entries) {
  std::size_t n = entries.size();
  return matlit(1, n, std::move(entries));
}

Expr index(const Expr& a, std::size_t i, std::size_t j) {
  need_real(a, "indexing");
  if (i < 1 || j < 1 || i > a.shape().rows || j > a.shape().cols)
    throw Error(ErrorKind::IndexOutOfRange, "(" + std::to_string(i) + "," + std::to_string(j) +
                                                ") outside " + to_string(a.shape()) + " value " + to_string(a));
  if (a.shape().is_scalar()) return a;
  if (a.op() == Op::Var && a.node().lens->is_continuous() && !a.node().lens->is_element())
    return var(element_of(*a.node().lens, i, j));
  if (a.op() == Op::MatLit) return a.arg((i - 1) * a.shape().cols + (j - 1));
  if (a.op() == Op::Const) return constant(a.node().value.at(i - 1, j - 1));
  ExprNode n;
  n.op = Op::Index;
  n.shape = {1, 1};
  n.args = {a};
  n.row = i;
  n.col = j;
  return make(std::move(n));
}

Expr unary(Op op, const Expr& a) {
  need_scalar(a, "function argument");
  return node(op, {1, 1}, {a});
}

Expr sin(const Expr& a) { return unary(Op::Sin, a); }
Expr cos(const Expr& a) { return unary(Op::Cos, a); }
Expr acos(const Expr& a) { return unary(Op::Acos, a); }
Expr sqrt(const Expr& a) { return unary(Op::Sqrt, a); }
Expr log(const Expr& a) { return unary(Op::Log, a); }
Expr sgn(const Expr& a) { return unary(Op::Sgn, a); }
Expr abs(const Expr& a) {
  need_real(a, "abs");
  if (!a.shape().is_scalar()) return norm(a);
  return unary(Op::Abs, a);
}
Expr wrap(const Expr& a) { return unary(Op::Wrap, a); }

static Expr binary_fn(Op op, const Expr& a, const Expr& b) {
  need_scalar(a, "function argument");
  need_scalar(b, "function argument");
  return node(op, {1, 1}, {a, b});
}

Expr min(const Expr& a, const Expr& b) { return binary_fn(Op::Min, a, b); }
Expr max(const Expr& a, const Expr& b) { return binary_fn(Op::Max, a, b); }
Expr atan2(const Expr& y, const Expr& x) { return binary_fn(Op::Atan2, y, x); }

Expr ang(const Expr& d) {
  need_real(d, "ang");
  Shape s = d.shape();
  if (s == Shape{1, 2}) return atan2(index(d, 1, 1), index(d, 1, 2));
  if (s == Shape{2, 1}) return atan2(index(d, 1, 1), index(d, 2, 1));
  mismatch("ang expects a planar vector, got " + to_string(s));
}

Expr cond(const Pred& c, const Expr& a, const Expr& b) {
  if (a.shape() != b.shape() || a.sort() != b.sort())
    mismatch("cond branches differ: " + to_string(a) + " vs " + to_string(b));
  ExprNode n;
  n.op = Op::Cond;
  n.shape = a.shape();
  n.sort = a.sort();
  n.args = {a, b};
  n.pred = c;
  return make(std::move(n));
}

Expr setmin(const std::string& bound_name, const Lens& set, const Expr& body) {
  if (set.sort != Sort::Set) mismatch("minover ranges over a set variable, '" + set.name + "' is not one");
  need_scalar(body, "minover body");
  ExprNode n;
  n.op = Op::SetMin;
  n.shape = {1, 1};
  n.args = {body};
  n.name = bound_name;
  n.lens = set;
  return make(std::move(n));
}

bool is_zero_const(const Expr& e) {
  if (e.op() != Op::Const) return false;
  return std::all_of(e.node().value.data.begin(), e.node().value.data.end(), [](double x) { return x == 0.0; });
}

bool is_const(const Expr& e, double x) {
  return e.op() == Op::Const && e.shape().is_scalar() && e.node().value.data[0] == x;
}

}  // namespace ex

Expr operator+(const Expr& a, const Expr& b) { return ex::add(a, b); }
Expr operator-(const Expr& a, const Expr& b) { return ex::sub(a, b); }
Expr operator-(const Expr& a) { return ex::neg(a); }
Expr operator*(const Expr& a, const Expr& b) { return ex::mul(a, b); }
Expr operator/(const Expr& a, const Expr& b) { return ex::div(a, b); }
Expr operator*(double k, const Expr& b) { return ex::mul(ex::constant(k), b); }

// ---------------------------------------------------------------------------
// Predicate builders

namespace pr {

Pred truth() {
  static const Pred t = [] { PredNode n; n.op = PredOp::True; return makep(std::move(n)); }();
  return t;
}

Pred falsity() {
  static const Pred f = [] { PredNode n; n.op = PredOp::False; return makep(std::move(n)); }();
  return f;
}

Pred cmp(const Expr& a, CmpOp op, const Expr& b) {
  if (a.sort() != b.sort()) mismatch("cannot compare " + to_string(a) + " with " + to_string(b));
  if (a.sort() == Sort::Set) mismatch("sets cannot be compared");
  if (a.sort() == Sort::Mode && op != CmpOp::Eq && op != CmpOp::Ne)
    mismatch("modes only support = and !=");
  if (a.shape() != b.shape())
    mismatch("cannot compare " + to_string(a.shape()) + " with " + to_string(b.shape()) + ": " + to_string(a) +
             " " + to_string(op) + " " + to_string(b));
  if (!a.shape().is_scalar() && op != CmpOp::Eq && op != CmpOp::Ne)
    mismatch("matrices only support = and !=");
  PredNode n;
  n.op = PredOp::Cmp;
  n.cmp = op;
  n.lhs = a;
  n.rhs = b;
  return makep(std::move(n));
}

Pred eq(const Expr& a, const Expr& b) { return cmp(a, CmpOp::Eq, b); }
Pred le(const Expr& a, const Expr& b) { return cmp(a, CmpOp::Le, b); }
Pred lt(const Expr& a, const Expr& b) { return cmp(a, CmpOp::Lt, b); }
Pred ge(const Expr& a, const Expr& b) { return cmp(a, CmpOp::Ge, b); }
Pred gt(const Expr& a, const Expr& b) { return cmp(a, CmpOp::Gt, b); }
Pred ne(const Expr& a, const Expr& b) { return cmp(a, CmpOp::Ne, b); }

static Pred binop(PredOp op, const Pred& a, const Pred& b) {
  PredNode n;
  n.op = op;
  n.args = {a, b};
  return makep(std::move(n));
}

Pred conj(const Pred& a, const Pred& b) {
  if (a.op() == PredOp::True) return b;
  if (b.op() == PredOp::True) return a;
  if (a.op() == PredOp::False || b.op() == PredOp::False) return falsity();
  return binop(PredOp::And, a, b);
}

Pred conj(std::vector<Pred> ps) {
  Pred out = truth();
  for (auto& p : ps) out = conj(out, p);
  return out;
}

Pred disj(const Pred& a, const Pred& b) {
  if (a.op() == PredOp::False) return b;
  if (b.op() == PredOp::False) return a;
  if (a.op() == PredOp::True || b.op() == PredOp::True) return truth();
  return binop(PredOp::Or, a, b);
}

Pred disj(std::vector<Pred> ps) {
  Pred out = falsity();
  for (auto& p : ps) out = disj(out, p);
  return out;
}

Pred neg(const Pred& a) {
  if (a.op() == PredOp::True) return falsity();
  if (a.op() == PredOp::False) return truth();
  PredNode n;
  n.op = PredOp::Not;
  n.args = {a};
  return makep(std::move(n));
}

Pred implies(const Pred& a, const Pred& b) {
  if (a.op() == PredOp::True) return b;
  if (a.op() == PredOp::False || b.op() == PredOp::True) return truth();
  return binop(PredOp::Implies, a, b);
}

static Pred quant(PredOp op, const std::string& bound_name, const Lens& set, const Pred& body) {
  if (set.sort != Sort::Set) mismatch("quantifier ranges over a set variable, '" + set.name + "' is not one");
  PredNode n;
  n.op = op;
  n.bound = bound_name;
  n.set = set;
  n.args = {body};
  return makep(std::move(n));
}

Pred exists(const std::string& b, const Lens& set, const Pred& body) { return quant(PredOp::Exists, b, set, body); }
Pred forall(const std::string& b, const Lens& set, const Pred& body) { return quant(PredOp::Forall, b, set, body); }

}  // namespace pr

// ---------------------------------------------------------------------------
// Evaluation

const MatVal* Bindings::find(const std::string& name) const {
  for (auto it = slots.rbegin(); it != slots.rend(); ++it)
    if (it->first == name) return &it->second;
  return nullptr;
}

double wrap_angle(double x) {
  constexpr double pi = std::numbers::pi;
  if (!std::isfinite(x)) return x;
  double r = std::fmod(x + pi, 2 * pi);
  if (r < 0) r += 2 * pi;
  r -= pi;
  if (r == -pi) r = pi;
  return r;
}

namespace {

struct Evaluator {
  const HybridState& st;
  const EvalOptions& opts;
  Bindings env;

  MatVal real(const Expr& e) {
    Value v = value(e);
    if (auto* m = std::get_if<MatVal>(&v)) return std::move(*m);
    mismatch("expected a real value from " + to_string(e));
  }

  double scalar(const Expr& e) { return real(e).data[0]; }

  static MatVal map(MatVal m, const std::function<double(double)>& f) {
    for (auto& x : m.data) x = f(x);
    return m;
  }

  Value value(const Expr& e) {
    const ExprNode& n = e.node();
    switch (n.op) {
      case Op::Const:
      case Op::Param: return n.value;
      case Op::Var: return st.get(*n.lens);
      case Op::Bound: {
        const MatVal* m = env.find(n.name);
        if (!m) throw Error(ErrorKind::UnknownLens, "unbound variable '" + n.name + "'");
        return *m;
      }
      case Op::ModeLit: return Mode{n.name};
      case Op::Neg: return map(real(n.args[0]), [](double x) { return -x; });
      case Op::Add:
      case Op::Sub: {
        MatVal a = real(n.args[0]);
        MatVal b = real(n.args[1]);
        for (std::size_t k = 0; k < a.data.size(); ++k)
          a.data[k] = n.op == Op::Add ? a.data[k] + b.data[k] : a.data[k] - b.data[k];
        return a;
      }
      case Op::Mul: return MatVal::scalar(scalar(n.args[0]) * scalar(n.args[1]));
      case Op::ScalarMul: {
        double k = scalar(n.args[0]);
        return map(real(n.args[1]), [k](double x) { return k * x; });
      }
      case Op::Div: {
        MatVal a = real(n.args[0]);
        double d = scalar(n.args[1]);
        if (d == 0.0) throw Error(ErrorKind::DivByZero, "division by zero in " + to_string(e));
        return map(std::move(a), [d](double x) { return x / d; });
      }
      case Op::Dot: {
        MatVal a = real(n.args[0]);
        MatVal b = real(n.args[1]);
        double s = 0;
        for (std::size_t k = 0; k < a.data.size(); ++k) s += a.data[k] * b.data[k];
        return MatVal::scalar(s);
      }
      case Op::Norm: {
        MatVal a = real(n.args[0]);
        double s = 0;
        for (double x : a.data) s += x * x;
        return MatVal::scalar(std::sqrt(s));
      }
      case Op::Transpose: {
        MatVal a = real(n.args[0]);
        MatVal t = MatVal::zeros({a.cols, a.rows});
        for (std::size_t i = 0; i < a.rows; ++i)
          for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
        return t;
      }
      case Op::MatLit: {
        MatVal m = MatVal::zeros(n.shape);
        for (std::size_t k = 0; k < n.args.size(); ++k) m.data[k] = scalar(n.args[k]);
        return m;
      }
      case Op::Index: {
        MatVal a = real(n.args[0]);
        return MatVal::scalar(a.at(n.row - 1, n.col - 1));
      }
      case Op::Sin: return MatVal::scalar(std::sin(scalar(n.args[0])));
      case Op::Cos: return MatVal::scalar(std::cos(scalar(n.args[0])));
      case Op::Acos: {
        double x = scalar(n.args[0]);
        if (std::isnan(x) || x < -1 - opts.acos_slack || x > 1 + opts.acos_slack)
          throw Error(ErrorKind::DomainError, "acos argument " + format_number(x) + " outside [-1, 1] in " +
                                                  to_string(e));
        return MatVal::scalar(std::acos(std::clamp(x, -1.0, 1.0)));
      }
      case Op::Sqrt: {
        double x = scalar(n.args[0]);
        if (!(x >= 0))
          throw Error(ErrorKind::DomainError, "sqrt of negative " + format_number(x) + " in " + to_string(e));
        return MatVal::scalar(std::sqrt(x));
      }
      case Op::Log: {
        double x = scalar(n.args[0]);
        if (!(x > 0))
          throw Error(ErrorKind::DomainError, "log of non-positive " + format_number(x) + " in " + to_string(e));
        return MatVal::scalar(std::log(x));
      }
      case Op::Sgn: {
        double x = scalar(n.args[0]);
        return MatVal::scalar(x > 0 ? 1.0 : x < 0 ? -1.0 : 0.0);
      }
      case Op::Abs: return MatVal::scalar(std::fabs(scalar(n.args[0])));
      case Op::Min: return MatVal::scalar(std::min(scalar(n.args[0]), scalar(n.args[1])));
      case Op::Max: return MatVal::scalar(std::max(scalar(n.args[0]), scalar(n.args[1])));
      case Op::Atan2: return MatVal::scalar(std::atan2(scalar(n.args[0]), scalar(n.args[1])));
      case Op::Wrap: return MatVal::scalar(wrap_angle(scalar(n.args[0])));
      case Op::Cond: {
        EvalOptions g = opts;
        g.eq_tol = std::max(g.eq_tol, g.cond_zero_tol);
        Evaluator sub{st, g, env};
        return sub.pred(n.pred) ? value(n.args[0]) : value(n.args[1]);
      }
      case Op::SetMin: {
        PointSet pts = std::get<PointSet>(st.get(*n.lens));
        if (pts.empty()) throw Error(ErrorKind::DomainError, "minover of an empty set in " + to_string(e));
        double best = std::numeric_limits<double>::infinity();
        for (const auto& pt : pts) {
          env.slots.emplace_back(n.name, MatVal::row({pt[0], pt[1]}));
          double v = scalar(n.args[0]);
          env.slots.pop_back();
          best = std::min(best, v);
        }
        return MatVal::scalar(best);
      }
    }
    throw Error(ErrorKind::UnsupportedNode, "cannot evaluate " + to_string(e));
  }

  bool compare(double a, CmpOp op, double b) const {
    double slack = opts.eq_tol * (1.0 + std::max(std::fabs(a), std::fabs(b)));
    switch (op) {
      case CmpOp::Eq: return std::fabs(a - b) <= slack;
      case CmpOp::Ne: return std::fabs(a - b) > slack;
      case CmpOp::Le: return a <= b + slack;
      case CmpOp::Ge: return a + slack >= b;
      case CmpOp::Lt: return a < b;
      case CmpOp::Gt: return a > b;
    }
    return false;
  }

  bool pred(const Pred& p) {
    const PredNode& n = p.node();
    switch (n.op) {
      case PredOp::True: return true;
      case PredOp::False: return false;
      case PredOp::Cmp: {
        Value a = value(n.lhs), b = value(n.rhs);
        if (auto* ma = std::get_if<Mode>(&a)) {
          bool same = *ma == std::get<Mode>(b);
          return n.cmp == CmpOp::Eq ? same : !same;
        }
        const auto& x = std::get<MatVal>(a);
        const auto& y = std::get<MatVal>(b);
        for (double v : x.data)
          if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteState, "non-finite value in " + to_string(p));
        for (double v : y.data)
          if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteState, "non-finite value in " + to_string(p));
        if (n.cmp == CmpOp::Ne) {
          for (std::size_t k = 0; k < x.data.size(); ++k)
            if (compare(x.data[k], CmpOp::Ne, y.data[k])) return true;
          return false;
        }
        for (std::size_t k = 0; k < x.data.size(); ++k)
          if (!compare(x.data[k], n.cmp, y.data[k])) return false;
        return true;
      }
      case PredOp::And: return pred(n.args[0]) && pred(n.args[1]);
      case PredOp::Or: return pred(n.args[0]) || pred(n.args[1]);
      case PredOp::Not: return !pred(n.args[0]);
      case PredOp::Implies: return !pred(n.args[0]) || pred(n.args[1]);
      case PredOp::Exists:
      case PredOp::Forall: {
        PointSet pts = std::get<PointSet>(st.get(*n.set));
        bool want = n.op == PredOp::Exists;
        for (const auto& pt : pts) {
          env.slots.emplace_back(n.bound, MatVal::row({pt[0], pt[1]}));
          bool v = pred(n.args[0]);
          env.slots.pop_back();
          if (v == want) return want;
        }
        return !want;
      }
    }
    return false;
  }
};

}  // namespace

Value eval_value(const Expr& e, const HybridState& st, const EvalOptions& opts, const Bindings* env) {
  Evaluator ev{st, opts, env ? *env : Bindings{}};
  Value v = ev.value(e);
  if (auto* m = std::get_if<MatVal>(&v))
    for (double x : m->data)
      if (!std::isfinite(x)) throw Error(ErrorKind::NonFiniteState, "non-finite value of " + to_string(e));
  return v;
}

MatVal eval_expr(const Expr& e, const HybridState& st, const EvalOptions& opts) {
  Value v = eval_value(e, st, opts);
  if (auto* m = std::get_if<MatVal>(&v)) return std::move(*m);
  mismatch("expression " + to_string(e) + " is not real-valued");
}

double eval_scalar(const Expr& e, const HybridState& st, const EvalOptions& opts) {
  return eval_expr(e, st, opts).as_scalar();
}

bool eval_pred(const Pred& p, const HybridState& st, const EvalOptions& opts, const Bindings* env) {
  Evaluator ev{st, opts, env ? *env : Bindings{}};
  return ev.pred(p);
}

// ---------------------------------------------------------------------------
// Printing

std::string format_number(double x) {
  if (x == 0) return "0";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

int prec(const Expr& e) {
  switch (e.op()) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::ScalarMul:
    case Op::Dot:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Const:
      if (e.shape().is_scalar() && std::signbit(e.node().value.data[0])) return 3;
      return 4;
    default: return 4;
  }
}

const char* fn_name(Op op) {
  switch (op) {
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Acos: return "acos";
    case Op::Sqrt: return "sqrt";
    case Op::Log: return "log";
    case Op::Sgn: return "sgn";
    case Op::Abs: return "abs";
    case Op::Min: return "min";
    case Op::Max: return "max";
    case Op::Atan2: return "atan2";
    case Op::Wrap: return "wrap";
    case Op::Norm: return "norm";
    case Op::Transpose: return "transpose";
    default: return "?";
  }
}

std::string print(const Expr& e, int ctx);
std::string print_pred(const Pred& p, int ctx);

std::string matrix(std::size_t rows, std::size_t cols, const std::function<std::string(std::size_t)>& cell) {
  std::string out = "[";
  for (std::size_t i = 0; i < rows; ++i) {
    if (rows > 1) out += i ? ", [" : "[";
    for (std::size_t j = 0; j < cols; ++j) {
      if (j) out += ", ";
      out += cell(i * cols + j);
    }
    if (rows > 1) out += "]";
  }
  return out + "]";
}

std::string print(const Expr& e, int ctx) {
  const ExprNode& n = e.node();
  std::string s;
  switch (n.op) {
    case Op::Const:
      if (n.shape.is_scalar())
        s = format_number(n.value.data[0]);
      else
        s = matrix(n.shape.rows, n.shape.cols, [&](std::size_t k) { return format_number(n.value.data[k]); });
      break;
    case Op::Param:
    case Op::Bound:
    case Op::ModeLit:
    case Op::Var: s = n.name; break;
    case Op::Neg: s = "-" + print(n.args[0], 4); break;
    case Op::Add: s = print(n.args[0], 1) + " + " + print(n.args[1], 2); break;
    case Op::Sub: s = print(n.args[0], 1) + " - " + print(n.args[1], 2); break;
    case Op::Mul:
    case Op::ScalarMul:
    case Op::Dot: s = print(n.args[0], 2) + " * " + print(n.args[1], 3); break;
    case Op::Div: s = print(n.args[0], 2) + " / " + print(n.args[1], 3); break;
    case Op::MatLit:
      s = matrix(n.shape.rows, n.shape.cols, [&](std::size_t k) { return print(n.args[k], 0); });
      break;
    case Op::Index:
      s = print(n.args[0], 5) + "[" + std::to_string(n.row) + "," + std::to_string(n.col) + "]";
      break;
    case Op::Cond:
      s = "cond(" + print_pred(n.pred, 0) + ", " + print(n.args[0], 0) + ", " + print(n.args[1], 0) + ")";
      break;
    case Op::SetMin: s = "minover(" + n.name + " in " + n.lens->name + ", " + print(n.args[0], 0) + ")"; break;
    default: {
      s = fn_name(n.op);
      s += "(";
      for (std::size_t k = 0; k < n.args.size(); ++k) {
        if (k) s += ", ";
        s += print(n.args[k], 0);
      }
      s += ")";
    }
  }
  // Index binds tighter than anything but atoms; wrap non-atoms being indexed.
  int p = prec(e);
  if (ctx == 5) {
    bool atomic = n.op == Op::Var || n.op == Op::Param || n.op == Op::Bound || n.op == Op::MatLit ||
                  (n.op == Op::Const && p == 4);
    return atomic ? s : "(" + s + ")";
  }
  if (p < ctx) return "(" + s + ")";
  return s;
}

int pprec(const Pred& p) {
  switch (p.op()) {
    case PredOp::Implies: return 1;
    case PredOp::Or: return 2;
    case PredOp::And: return 3;
    case PredOp::Not: return 4;
    default: return 5;
  }
}

std::string print_pred(const Pred& p, int ctx) {
  const PredNode& n = p.node();
  std::string s;
  switch (n.op) {
    case PredOp::True: s = "true"; break;
    case PredOp::False: s = "false"; break;
    case PredOp::Cmp: s = print(n.lhs, 0) + " " + to_string(n.cmp) + " " + print(n.rhs, 0); break;
    case PredOp::And: s = print_pred(n.args[0], 3) + " /\\ " + print_pred(n.args[1], 4); break;
    case PredOp::Or: s = print_pred(n.args[0], 2) + " \\/ " + print_pred(n.args[1], 3); break;
    case PredOp::Implies: s = print_pred(n.args[0], 2) + " => " + print_pred(n.args[1], 1); break;
    case PredOp::Not: s = "~" + print_pred(n.args[0], 5); break;
    case PredOp::Exists:
    case PredOp::Forall:
      s = std::string("(") + (n.op == PredOp::Exists ? "exists " : "forall ") + n.bound + " in " + n.set->name +
          ". " + print_pred(n.args[0], 0) + ")";
      break;
  }
  return pprec(p) < ctx ? "(" + s + ")" : s;
}

}  // namespace

std::string to_string(const Expr& e) { return e ? print(e, 0) : std::string("<null>"); }
std::string to_string(const Pred& p) { return p ? print_pred(p, 0) : std::string("<null>"); }

// ---------------------------------------------------------------------------
// Structural helpers

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.ptr() == b.ptr()) return true;
  const ExprNode& x = a.node();
  const ExprNode& y = b.node();
  if (x.op != y.op || x.shape != y.shape || x.sort != y.sort || x.args.size() != y.args.size()) return false;
  switch (x.op) {
    case Op::Const:
      if (x.value != y.value) return false;
      break;
    case Op::Param:
    case Op::Bound:
    case Op::ModeLit:
      if (x.name != y.name) return false;
      break;
    case Op::Var:
      if (!(*x.lens == *y.lens)) return false;
      break;
    case Op::Index:
      if (x.row != y.row || x.col != y.col) return false;
      break;
    case Op::Cond:
      if (!structurally_equal(x.pred, y.pred)) return false;
      break;
    case Op::SetMin:
      if (x.name != y.name || !(*x.lens == *y.lens)) return false;
      break;
    default: break;
  }
  for (std::size_t k = 0; k < x.args.size(); ++k)
    if (!structurally_equal(x.args[k], y.args[k])) return false;
  return true;
}

bool structurally_equal(const Pred& a, const Pred& b) {
  if (a.node().op != b.node().op) return false;
  const PredNode& x = a.node();
  const PredNode& y = b.node();
  switch (x.op) {
    case PredOp::True:
    case PredOp::False: return true;
    case PredOp::Cmp: return x.cmp == y.cmp && structurally_equal(x.lhs, y.lhs) && structurally_equal(x.rhs, y.rhs);
    case PredOp::Exists:
    case PredOp::Forall:
      if (x.bound != y.bound || !(*x.set == *y.set)) return false;
      [[fallthrough]];
    default:
      if (x.args.size() != y.args.size()) return false;
      for (std::size_t k = 0; k < x.args.size(); ++k)
        if (!structurally_equal(x.args[k], y.args[k])) return false;
      return true;
  }
}

namespace {

void collect(const Expr& e, std::set<std::string>& lenses, std::set<std::string>& params);

void collect(const Pred& p, std::set<std::string>& lenses, std::set<std::string>& params) {
  const PredNode& n = p.node();
  if (n.op == PredOp::Cmp) {
    collect(n.lhs, lenses, params);
    collect(n.rhs, lenses, params);
  }
  if (n.set) lenses.insert(n.set->root());
  for (const auto& a : n.args) collect(a, lenses, params);
}

void collect(const Expr& e, std::set<std::string>& lenses, std::set<std::string>& params) {
  const ExprNode& n = e.node();
  if (n.op == Op::Var || n.op == Op::SetMin) lenses.insert(n.lens->root());
  if (n.op == Op::Param) params.insert(n.name);
  if (n.op == Op::Cond) collect(n.pred, lenses, params);
  for (const auto& a : n.args) collect(a, lenses, params);
}

}  // namespace

std::vector<std::string> free_lenses(const Expr& e) {
  std::set<std::string> l, p;
  collect(e, l, p);
  return {l.begin(), l.end()};
}

std::vector<std::string> free_lenses(const Pred& pd) {
  std::set<std::string> l, p;
  collect(pd, l, p);
  return {l.begin(), l.end()};
}

std::vector<std::string> free_params(const Pred& pd) {
  std::set<std::string> l, p;
  collect(pd, l, p);
  return {p.begin(), p.end()};
}

namespace {

Expr rebuild(const Expr& e, std::vector<Expr> args, const Pred& pred) {
  const ExprNode& n = e.node();
  switch (n.op) {
    case Op::Const:
    case Op::Param:
    case Op::Var:
    case Op::Bound:
    case Op::ModeLit: return e;
    case Op::Neg: return ex::neg(args[0]);
    case Op::Add: return ex::add(args[0], args[1]);
    case Op::Sub: return ex::sub(args[0], args[1]);
    case Op::Mul:
    case Op::ScalarMul: return ex::mul(args[0], args[1]);
    case Op::Div: return ex::div(args[0], args[1]);
    case Op::Dot: return ex::dot(args[0], args[1]);
    case Op::Norm: return ex::norm(args[0]);
    case Op::Transpose: return ex::transpose(args[0]);
    case Op::MatLit: return ex::matlit(n.shape.rows, n.shape.cols, std::move(args));
    case Op::Index: return ex::index(args[0], n.row, n.col);
    case Op::Min:
    case Op::Max:
    case Op::Atan2: {
      ExprNode m = n;
      m.args = std::move(args);
      return make(std::move(m));
    }
    case Op::Cond: return ex::cond(pred, args[0], args[1]);
    case Op::SetMin: return ex::setmin(n.name, *n.lens, args[0]);
    default: return ex::unary(n.op, args[0]);
  }
}

Pred rebuild_pred(const Pred& p, const std::function<Expr(const Expr&)>& f,
                  const std::function<Pred(const Pred&)>& self) {
  const PredNode& n = p.node();
  switch (n.op) {
    case PredOp::True:
    case PredOp::False: return p;
    case PredOp::Cmp: return pr::cmp(f(n.lhs), n.cmp, f(n.rhs));
    case PredOp::And: return pr::conj(self(n.args[0]), self(n.args[1]));
    case PredOp::Or: return pr::disj(self(n.args[0]), self(n.args[1]));
    case PredOp::Not: return pr::neg(self(n.args[0]));
    case PredOp::Implies: return pr::implies(self(n.args[0]), self(n.args[1]));
    case PredOp::Exists: return pr::exists(n.bound, *n.set, self(n.args[0]));
    case PredOp::Forall: return pr::forall(n.bound, *n.set, self(n.args[0]));
  }
  return p;
}

}  // namespace

Expr rewrite(const Expr& e, const std::function<Expr(const Expr&)>& f) {
  const ExprNode& n = e.node();
  std::vector<Expr> args;
  args.reserve(n.args.size());
  for (const auto& a : n.args) args.push_back(rewrite(a, f));
  Pred pred = n.op == Op::Cond ? rewrite(n.pred, f) : Pred();
  return f(rebuild(e, std::move(args), pred));
}

Pred rewrite(const Pred& p, const std::function<Expr(const Expr&)>& f) {
  std::function<Pred(const Pred&)> self = [&](const Pred& q) { return rewrite(q, f); };
  return rebuild_pred(p, [&](const Expr& e) { return rewrite(e, f); }, self);
}

namespace {

Expr subst_var(const Expr& e, const Lens& target, const Expr& value) {
  if (e.op() != Op::Var) return e;
  const Lens& l = *e.node().lens;
  if (l.root() != target.root()) return e;
  if (l == target) return value;
  if (!target.is_element() && l.is_element()) return ex::index(value, l.elem_row, l.elem_col);
  if (target.is_element() && !l.is_element()) {
    std::vector<Expr> cells;
    for (std::size_t i = 1; i <= l.shape.rows; ++i)
      for (std::size_t j = 1; j <= l.shape.cols; ++j)
        cells.push_back(i == target.elem_row && j == target.elem_col ? value : ex::var(element_of(l, i, j)));
    return ex::matlit(l.shape.rows, l.shape.cols, std::move(cells));
  }
  return e;
}

}  // namespace

Expr substitute(const Expr& e, const Lens& target, const Expr& value) {
  return rewrite(e, [&](const Expr& x) { return subst_var(x, target, value); });
}

Pred substitute(const Pred& p, const Lens& target, const Expr& value) {
  return rewrite(p, [&](const Expr& x) { return subst_var(x, target, value); });
}

std::vector<Pred> conjuncts(const Pred& p) {
  if (p.op() == PredOp::True) return {};
  if (p.op() != PredOp::And) return {p};
  auto a = conjuncts(p.arg(0));
  auto b = conjuncts(p.arg(1));
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

namespace {

Expr expand_leaf(const Expr& e) {
  if (e.sort() != Sort::Real || e.shape().is_scalar()) return e;
  if (e.op() != Op::Var && e.op() != Op::Param && e.op() != Op::Bound) return e;
  Shape s = e.shape();
  std::vector<Expr> cells;
  for (std::size_t i = 1; i <= s.rows; ++i)
    for (std::size_t j = 1; j <= s.cols; ++j) {
      if (e.op() == Op::Param) {
        // keep the parameter symbolic, one index node per cell
        ExprNode n;
        n.op = Op::Index;
        n.shape = {1, 1};
        n.args = {e};
        n.row = i;
        n.col = j;
        cells.push_back(make(std::move(n)));
      } else {
        cells.push_back(ex::index(e, i, j));
      }
    }
  return ex::matlit(s.rows, s.cols, std::move(cells));
}

}  // namespace

Expr expand_components(const Expr& e) {
  return rewrite(e, [](const Expr& x) {
    // Leaves only; an Index over an expanded literal collapses in the builder.
    return expand_leaf(x);
  });
}

Pred expand_components(const Pred& p) { return rewrite(p, [](const Expr& x) { return expand_leaf(x); }); }

}  // namespace helmproof
