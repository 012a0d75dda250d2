#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "helmproof/state.hpp"

namespace helmproof {

enum class Op {
  Const,      // numeric matrix literal value
  Param,      // named model constant (symbolic in proofs, valued in evaluation)
  Var,        // lens read
  Bound,      // quantifier-bound point variable
  ModeLit,    // mode symbol
  Neg,
  Add,
  Sub,
  Mul,        // scalar * scalar
  ScalarMul,  // scalar * matrix
  Div,        // (scalar|matrix) / scalar
  Dot,        // vec . vec
  Norm,
  Transpose,
  MatLit,
  Index,      // e[i,j], 1-based
  Sin,
  Cos,
  Acos,
  Sqrt,
  Log,
  Sgn,
  Abs,
  Min,
  Max,
  Atan2,
  Wrap,       // wrap angle into (-pi, pi]
  Cond,       // cond(P, a, b)
  SetMin,     // minover(o in ob, body)
};

enum class PredOp { True, False, Cmp, And, Or, Not, Implies, Exists, Forall };
enum class CmpOp { Eq, Le, Lt, Gt, Ge, Ne };

const char* to_string(CmpOp op) noexcept;

struct ExprNode;
struct PredNode;
class Pred;

/// Immutable, shape-checked symbolic expression. Copies share structure.
class Expr {
 public:
  Expr() = default;
  explicit Expr(std::shared_ptr<const ExprNode> n) : n_(std::move(n)) {}

  explicit operator bool() const noexcept { return static_cast<bool>(n_); }
  const ExprNode& node() const { return *n_; }
  Op op() const;
  Shape shape() const;
  Sort sort() const;
  bool is_scalar() const { return shape().is_scalar() && sort() == Sort::Real; }
  const std::vector<Expr>& args() const;
  const Expr& arg(std::size_t k) const { return args()[k]; }
  const std::shared_ptr<const ExprNode>& ptr() const noexcept { return n_; }

 private:
  std::shared_ptr<const ExprNode> n_;
};

/// Immutable predicate AST.
class Pred {
 public:
  Pred() = default;
  explicit Pred(std::shared_ptr<const PredNode> n) : n_(std::move(n)) {}

  explicit operator bool() const noexcept { return static_cast<bool>(n_); }
  const PredNode& node() const { return *n_; }
  PredOp op() const;
  CmpOp cmp() const;
  const Expr& lhs() const;
  const Expr& rhs() const;
  const std::vector<Pred>& args() const;
  const Pred& arg(std::size_t k) const { return args()[k]; }

 private:
  std::shared_ptr<const PredNode> n_;
};

struct ExprNode {
  Op op = Op::Const;
  Shape shape;
  Sort sort = Sort::Real;
  std::vector<Expr> args;
  MatVal value;            // Const, Param
  std::string name;        // Param, Bound, ModeLit symbol, SetMin bound name
  std::optional<Lens> lens;  // Var, SetMin set lens
  std::size_t row = 0, col = 0;  // Index
  Pred pred;               // Cond
};

struct PredNode {
  PredOp op = PredOp::True;
  CmpOp cmp = CmpOp::Eq;
  Expr lhs, rhs;
  std::vector<Pred> args;
  std::string bound;       // Exists/Forall bound variable
  std::optional<Lens> set;  // Exists/Forall set lens
};

// ---------------------------------------------------------------------------
// Builders. All builders infer shapes and throw ShapeMismatch on misuse.
namespace ex {

Expr constant(double x);
Expr constant(const MatVal& m);
Expr zero(Shape s);
Expr param(const std::string& name, const MatVal& value);
Expr var(const Lens& l);
Expr bound(const std::string& name, Shape s = {1, 2});
Expr mode(const std::string& symbol);
Expr neg(const Expr& a);
Expr add(const Expr& a, const Expr& b);
Expr sub(const Expr& a, const Expr& b);
/// Chooses Mul, ScalarMul or Dot from the operand shapes.
Expr mul(const Expr& a, const Expr& b);
Expr scalar_mul(const Expr& k, const Expr& m);
Expr div(const Expr& a, const Expr& b);
Expr dot(const Expr& a, const Expr& b);
Expr norm(const Expr& a);
Expr transpose(const Expr& a);
Expr matlit(std::size_t rows, std::size_t cols, std::vector<Expr> entries);
Expr row(std::vector<Expr> entries);
Expr index(const Expr& a, std::size_t i, std::size_t j);
Expr unary(Op op, const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr acos(const Expr& a);
Expr sqrt(const Expr& a);
Expr log(const Expr& a);
Expr sgn(const Expr& a);
Expr abs(const Expr& a);
Expr min(const Expr& a, const Expr& b);
Expr max(const Expr& a, const Expr& b);
Expr atan2(const Expr& y, const Expr& x);
/// Heading of a planar vector d: atan2(d_x, d_y), so that
/// s * [sin(phi), cos(phi)] = v holds for phi = ang(v).
Expr ang(const Expr& d);
Expr wrap(const Expr& a);
Expr cond(const Pred& c, const Expr& a, const Expr& b);
Expr setmin(const std::string& bound, const Lens& set, const Expr& body);

bool is_zero_const(const Expr& e);
bool is_const(const Expr& e, double x);

}  // namespace ex

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator*(double k, const Expr& b);

namespace pr {

Pred truth();
Pred falsity();
Pred cmp(const Expr& a, CmpOp op, const Expr& b);
Pred eq(const Expr& a, const Expr& b);
Pred le(const Expr& a, const Expr& b);
Pred lt(const Expr& a, const Expr& b);
Pred ge(const Expr& a, const Expr& b);
Pred gt(const Expr& a, const Expr& b);
Pred ne(const Expr& a, const Expr& b);
Pred conj(const Pred& a, const Pred& b);
Pred conj(std::vector<Pred> ps);
Pred disj(const Pred& a, const Pred& b);
Pred disj(std::vector<Pred> ps);
Pred neg(const Pred& a);
Pred implies(const Pred& a, const Pred& b);
Pred exists(const std::string& bound, const Lens& set, const Pred& body);
Pred forall(const std::string& bound, const Lens& set, const Pred& body);

}  // namespace pr

// ---------------------------------------------------------------------------
// Evaluation

struct EvalOptions {
  /// Relative tolerance for =, != and for the non-strict sides of <=/>=.
  double eq_tol = 0.0;
  /// Guards of cond(...) compare against zero with this slack.
  double cond_zero_tol = 0.0;
  /// acos accepts inputs up to this far outside [-1, 1] and clamps them.
  double acos_slack = 1e-12;
};

/// Values of quantifier-bound variables.
struct Bindings {
  std::vector<std::pair<std::string, MatVal>> slots;
  const MatVal* find(const std::string& name) const;
};

/// Errors: DivByZero, DomainError, UnknownLens, NonFiniteState.
MatVal eval_expr(const Expr& e, const HybridState& st, const EvalOptions& opts = {});
Value eval_value(const Expr& e, const HybridState& st, const EvalOptions& opts = {},
                 const Bindings* env = nullptr);
double eval_scalar(const Expr& e, const HybridState& st, const EvalOptions& opts = {});
bool eval_pred(const Pred& p, const HybridState& st, const EvalOptions& opts = {},
               const Bindings* env = nullptr);

/// Wrap an angle into (-pi, pi].
double wrap_angle(double x);

// ---------------------------------------------------------------------------
// Printing (output re-parses with the expression grammar).

std::string to_string(const Expr& e);
std::string to_string(const Pred& p);
std::string format_number(double x);

// ---------------------------------------------------------------------------
// Structural helpers

bool structurally_equal(const Expr& a, const Expr& b);
bool structurally_equal(const Pred& a, const Pred& b);

/// Root names of lenses read by an expression / predicate (bound vars excluded).
std::vector<std::string> free_lenses(const Expr& e);
std::vector<std::string> free_lenses(const Pred& p);
std::vector<std::string> free_params(const Pred& p);

/// Replace every read of `target` (or its elements) by `value`.
Expr substitute(const Expr& e, const Lens& target, const Expr& value);
Pred substitute(const Pred& p, const Lens& target, const Expr& value);

/// Bottom-up rewrite: f is applied to every rebuilt node.
Expr rewrite(const Expr& e, const std::function<Expr(const Expr&)>& f);
Pred rewrite(const Pred& p, const std::function<Expr(const Expr&)>& f);

/// Flatten nested conjunctions.
std::vector<Pred> conjuncts(const Pred& p);

/// Expand matrix-valued variable reads into literals of element reads so that
/// vector formulas become componentwise.
Expr expand_components(const Expr& e);
Pred expand_components(const Pred& p);

/// Algebraic normal form: exact rational arithmetic, like terms collected,
/// sin^2 + cos^2 folded. Agrees with the input wherever both evaluate.
/// Non-real terms are returned unchanged.
Expr simplify(const Expr& e);
Pred simplify(const Pred& p);

}  // namespace helmproof
