#pragma once

#include <string>
#include <vector>

#include "helmproof/expr.hpp"

namespace helmproof {

/// Right-hand side x' = F(x) of an ODE. Unbound continuous lenses have
/// derivative zero; bindings target whole continuous variables.
struct VectorField {
  std::vector<std::pair<Lens, Expr>> bindings;

  /// Errors: ShapeMismatch (rhs shape), InvalidProgram (discrete or element target).
  void bind(const Lens& l, const Expr& rhs);
  const Expr* find(const std::string& name) const;
  /// Derivative of a (whole or element) lens read.
  Expr rate(const Lens& l) const;
  bool binds(const std::string& root) const { return find(root) != nullptr; }
};

enum class DiffVerdict { Differentiable, NotDifferentiable, Unsupported };

struct DiffClass {
  DiffVerdict verdict = DiffVerdict::Differentiable;
  std::string node;    // offending node (printed)
  std::string reason;
  bool ok() const noexcept { return verdict == DiffVerdict::Differentiable; }
};

const char* to_string(DiffVerdict v) noexcept;

/// Nodes with no Lie rule are only a problem when they read a continuous
/// variable; discrete subterms are constant along the flow.
DiffClass classify(const Expr& e);
DiffClass classify(const Pred& p);

/// Symbolic Lie derivative. Side conditions (nonzero norms, positive sqrt
/// arguments) are appended to `side` when given.
/// Errors: UnsupportedNode, ShapeMismatch.
Expr lie_expr(const Expr& e, const VectorField& F, std::vector<Pred>* side = nullptr);

/// Rewrites >, >= by swapping sides, pushes negations into comparisons and
/// turns implications into disjunctions. Errors: UnsupportedPredicate.
Pred normalize_for_lie(const Pred& p);

/// L(e = f) = (L e = L f), L(e <= f) = L(e < f) = (L e <= L f), and both
/// P /\ Q and P \/ Q map to L P /\ L Q. Predicates without continuous reads
/// map to true. Errors: UnsupportedPredicate, UnsupportedNode.
Pred lie_pred(const Pred& p, const VectorField& F, std::vector<Pred>* side = nullptr);

/// Central difference of e along F at st. Errors: eval errors.
double directional_derivative_fd(const Expr& e, const VectorField& F, const HybridState& st, double h);

/// F evaluated at st as a continuous-coordinate vector.
std::vector<double> eval_field(const VectorField& F, const HybridState& st, const EvalOptions& opts = {});

}  // namespace helmproof
