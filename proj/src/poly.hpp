#pragma once

// Exact multivariate polynomials over the rationals whose variables are
// "atoms": state coordinates, parameters, and opaque function applications
// (sin u, norm(...), 1/w, ...) with canonical polynomial arguments.

#include <gmpxx.h>

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "helmproof/expr.hpp"

namespace helmproof::poly {

using Coeff = mpq_class;
using VarId = int;
/// (variable, exponent) pairs sorted by variable id.
using Monomial = std::vector<std::pair<VarId, int>>;

struct Poly {
  std::map<Monomial, Coeff> terms;  // no zero coefficients

  static Poly constant(const Coeff& c);
  static Poly var(VarId v);

  bool zero() const { return terms.empty(); }
  bool is_const() const { return terms.empty() || (terms.size() == 1 && terms.begin()->first.empty()); }
  Coeff const_value() const;
  int degree() const;
  bool contains(VarId v) const;
  bool operator==(const Poly& o) const { return terms == o.terms; }
};

Poly operator+(const Poly& a, const Poly& b);
Poly operator-(const Poly& a, const Poly& b);
Poly operator-(const Poly& a);
Poly operator*(const Poly& a, const Poly& b);
Poly scale(const Poly& a, const Coeff& c);
Poly pow(const Poly& a, int k);

Monomial mono_mul(const Monomial& a, const Monomial& b);
bool mono_divides(const Monomial& a, const Monomial& b);
Monomial mono_div(const Monomial& b, const Monomial& a);  // b / a
Monomial mono_lcm(const Monomial& a, const Monomial& b);
int mono_degree(const Monomial& m);

enum class AtomKind {
  Var,     // lens element / scalar lens
  Param,   // named constant (symbolic)
  Bound,   // quantifier-bound component
  Fresh,   // auxiliary variable introduced by the prover
  Sin,
  Cos,
  Sqrt,
  Norm,
  Inv,
  Abs,
  Sgn,
  Min,
  Max,
  Acos,
  Atan2,
  Wrap,
  Log,
  Opaque,  // cond / minover and friends, keyed by their printed normal form
};

struct Atom {
  AtomKind kind = AtomKind::Var;
  std::vector<Poly> args;
  std::string key;
  Expr leaf;  // Var, Param, Bound, Opaque: expression to print back
  std::string name;  // traversal-independent ordering name
  int cls = 0;    // ordering class within the ring block
  int block = 0;  // 1 for radicals and inverses (eliminated first)
};

/// Conversion between expressions and polynomials plus the monomial order.
class Context {
 public:
  Context();

  /// Componentwise polynomials of a real expression (row-major).
  std::vector<Poly> convert(const Expr& e);
  Poly convert_scalar(const Expr& e);

  /// Back to an expression of the given shape.
  Expr to_expr(const Poly& p);

  VarId intern(AtomKind kind, std::vector<Poly> args, const std::string& key, const Expr& leaf = Expr());
  VarId fresh(const std::string& tag);
  const Atom& atom(VarId v) const { return atoms_[static_cast<std::size_t>(v)]; }
  std::size_t atom_count() const { return atoms_.size(); }
  std::string key(const Poly& p) const;

  double mode_code(const std::string& symbol);

  /// Monomial order: radicals/inverses block first, then degree, then
  /// lexicographic by class and id. Returns <0, 0, >0.
  int compare(const Monomial& a, const Monomial& b) const;
  /// Leading term of a nonzero polynomial.
  std::map<Monomial, Coeff>::const_iterator leading(const Poly& p) const;
  int lead_sign(const Poly& p) const;

  /// Evaluate with atoms read from `values` (indexed by VarId); NaN if absent.
  double eval(const Poly& p, const std::vector<double>& values) const;

  /// Atoms referenced by p, including those inside atom arguments.
  void collect_atoms(const Poly& p, std::vector<bool>& seen) const;

  /// sin(u)^2 -> 1 - cos(u)^2 until no sine appears squared.
  Poly trig_reduce(const Poly& p);

  /// Predicate key for quantified bodies and boolean atoms.
  std::string pred_key(const Pred& p);

 private:
  Poly atom_poly(AtomKind kind, std::vector<Poly> args, const Expr& leaf);
  Poly convert_fn(const Expr& e);
  Expr atom_expr(VarId v);
  std::string poly_name(const Poly& p) const;

  std::vector<Atom> atoms_;
  std::unordered_map<std::string, VarId> by_key_;
  std::map<std::string, double> modes_;
  std::vector<Expr> atom_exprs_;
  int bound_depth_ = 0;
};

struct GroebnerLimits {
  std::size_t max_pairs = 400;
  std::size_t max_basis = 48;
  std::size_t max_terms = 600;
};

/// Capped Buchberger over the context's monomial order. `complete` reports
/// whether the result is a full basis; a partial basis still yields sound
/// reductions (anything reducing to 0 is in the ideal).
struct Basis {
  std::vector<Poly> polys;
  bool complete = true;
  bool inconsistent = false;  // contains a nonzero constant
};

Basis groebner(Context& ctx, std::vector<Poly> gens, const GroebnerLimits& lim = {});
Poly reduce(const Context& ctx, const Poly& p, const std::vector<Poly>& basis, std::size_t max_terms = 2000);

}  // namespace helmproof::poly
