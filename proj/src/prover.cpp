#include "prover.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "poly.hpp"

namespace helmproof::prover {

using poly::Atom;
using poly::AtomKind;
using poly::Coeff;
using poly::Monomial;
using poly::Poly;
using poly::VarId;

namespace {

// ---------------------------------------------------------------------------
// Expression helpers

bool occurs(const Expr& hay, const Expr& needle) {
  bool found = false;
  rewrite(hay, [&](const Expr& x) {
    if (!found && structurally_equal(x, needle)) found = true;
    return x;
  });
  return found;
}

bool occurs(const Pred& hay, const Expr& needle) {
  bool found = false;
  rewrite(hay, [&](const Expr& x) {
    if (!found && structurally_equal(x, needle)) found = true;
    return x;
  });
  return found;
}

Pred replace(const Pred& p, const Expr& from, const Expr& to) {
  return rewrite(p, [&](const Expr& x) { return structurally_equal(x, from) ? to : x; });
}

bool is_leaf(const Expr& e) {
  if (e.sort() == Sort::Set) return false;
  if (e.op() == Op::Var) return e.sort() == Sort::Mode || e.shape().is_scalar();
  return e.op() == Op::Index && e.arg(0).op() == Op::Var;
}

// First cond node whose guard and branches are cond-free.
Expr find_cond(const Pred& p) {
  Expr hit;
  rewrite(p, [&](const Expr& x) {
    if (!hit && x.op() == Op::Cond) hit = x;
    return x;
  });
  return hit;
}

Pred negate_cmp(const Pred& p) {
  switch (p.cmp()) {
    case CmpOp::Eq: return pr::ne(p.lhs(), p.rhs());
    case CmpOp::Ne: return pr::eq(p.lhs(), p.rhs());
    case CmpOp::Le: return pr::lt(p.rhs(), p.lhs());
    case CmpOp::Lt: return pr::le(p.rhs(), p.lhs());
    case CmpOp::Ge: return pr::lt(p.lhs(), p.rhs());
    case CmpOp::Gt: return pr::le(p.lhs(), p.rhs());
  }
  return p;
}

// Componentwise form of a matrix comparison (equalities and disequalities).
Pred split_matrix(const Pred& p) {
  Shape s = p.lhs().shape();
  std::vector<Pred> parts;
  for (std::size_t i = 1; i <= s.rows; ++i)
    for (std::size_t j = 1; j <= s.cols; ++j)
      parts.push_back(pr::cmp(ex::index(p.lhs(), i, j), p.cmp() == CmpOp::Ne ? CmpOp::Ne : CmpOp::Eq,
                              ex::index(p.rhs(), i, j)));
  return p.cmp() == CmpOp::Ne ? pr::disj(std::move(parts)) : pr::conj(std::move(parts));
}

bool matrix_cmp(const Pred& p) {
  return p.op() == PredOp::Cmp && p.lhs().sort() == Sort::Real && !p.lhs().shape().is_scalar();
}

// ---------------------------------------------------------------------------
// Algebraic core for one tableau leaf

struct Literals {
  std::vector<Pred> hyps;
  std::vector<Pred> goals;
};

class Algebra {
 public:
  Algebra(const Literals& lits, int depth) : depth_(depth) {
    for (const auto& h : lits.hyps) add_hyp(h);
    for (const auto& g : lits.goals) {
      add_goal(g);
      // a failed alternative may still help the others
      if (g.op() == PredOp::Cmp && g.cmp() != CmpOp::Eq) add_hyp(negate_cmp(g));
    }
    finish();
  }

  bool closed(std::string& residue) {
    if (basis_.inconsistent) return true;
    for (const auto& q : strict_)
      if (nonneg(-q, depth_)) return true;
    for (const auto& h : nonneg_)
      if (pos(-h, depth_)) return true;
    for (const auto& g : goals_) {
      if (attempt(g)) return true;
      if (residue.empty()) residue = describe(g);
    }
    return false;
  }

 private:
  enum class Kind { Zero, Nonneg, Pos, NonZero, SqSq, Atom };
  struct Goal {
    Kind kind;
    Poly p, l, r;
    std::string atom;
  };

  void add_hyp(const Pred& h) {
    try {
      if (h.op() == PredOp::Exists || h.op() == PredOp::Forall) {
        atoms_.insert(ctx_.pred_key(h));
        return;
      }
      if (h.op() != PredOp::Cmp) return;
      Poly l = ctx_.convert_scalar(h.lhs()), r = ctx_.convert_scalar(h.rhs());
      switch (h.cmp()) {
        case CmpOp::Eq: eqs_.push_back(l - r); break;
        case CmpOp::Le: nonneg_.push_back(r - l); break;
        case CmpOp::Ge: nonneg_.push_back(l - r); break;
        case CmpOp::Lt: strict_.push_back(r - l); break;
        case CmpOp::Gt: strict_.push_back(l - r); break;
        case CmpOp::Ne: {
          VarId z = ctx_.fresh("ne");
          eqs_.push_back((l - r) * Poly::var(z) - Poly::constant(1));
          break;
        }
      }
    } catch (const Error&) {
      // a hypothesis outside the fragment is simply not used
    }
  }

  static bool rewritable(const Expr& l, const Expr& r) {
    auto one = [](const Expr& x, const Expr& y) {
      return (ex::is_zero_const(y) && x.op() == Op::Acos) || (x.op() == Op::Div && x.is_scalar());
    };
    return one(l, r) || one(r, l);
  }

  void add_eq_goal(const Expr& l, const Expr& r) {
    if (ex::is_zero_const(r) && l.op() == Op::Acos) return add_eq_goal(l.arg(0), ex::constant(1));
    if (ex::is_zero_const(l) && r.op() == Op::Acos) return add_eq_goal(r.arg(0), ex::constant(1));
    if (l.op() == Op::Div && l.is_scalar()) return add_eq_goal(l.arg(0), r * l.arg(1));
    if (r.op() == Op::Div && r.is_scalar()) return add_eq_goal(l * r.arg(1), r.arg(0));
    Poly pl = ctx_.convert_scalar(l), pr_ = ctx_.convert_scalar(r);
    goals_.push_back({Kind::Zero, pl - pr_, {}, {}, {}});
    goals_.push_back({Kind::SqSq, {}, pl, pr_, {}});
  }

  void add_goal(const Pred& g) {
    try {
      if (g.op() == PredOp::Exists || g.op() == PredOp::Forall) {
        goals_.push_back({Kind::Atom, {}, {}, {}, ctx_.pred_key(g)});
        return;
      }
      if (g.op() != PredOp::Cmp) return;
      if (g.cmp() == CmpOp::Eq) {
        if (g.lhs().sort() == Sort::Real) {
          // rewritten forms replace the plain difference; its inverse atoms
          // would otherwise enter the ideal
          if (!rewritable(g.lhs(), g.rhs()))
            goals_.push_back({Kind::Zero, ctx_.convert_scalar(g.lhs()) - ctx_.convert_scalar(g.rhs()), {}, {}, {}});
          add_eq_goal(g.lhs(), g.rhs());
        } else {
          goals_.push_back({Kind::Zero, ctx_.convert_scalar(g.lhs()) - ctx_.convert_scalar(g.rhs()), {}, {}, {}});
        }
        return;
      }
      Poly l = ctx_.convert_scalar(g.lhs()), r = ctx_.convert_scalar(g.rhs());
      switch (g.cmp()) {
        case CmpOp::Le: goals_.push_back({Kind::Nonneg, r - l, {}, {}, {}}); break;
        case CmpOp::Ge: goals_.push_back({Kind::Nonneg, l - r, {}, {}, {}}); break;
        case CmpOp::Lt: goals_.push_back({Kind::Pos, r - l, {}, {}, {}}); break;
        case CmpOp::Gt: goals_.push_back({Kind::Pos, l - r, {}, {}, {}}); break;
        case CmpOp::Ne: goals_.push_back({Kind::NonZero, l - r, {}, {}, {}}); break;
        default: break;
      }
    } catch (const Error&) {
      // left open
    }
  }

  // Defining relations of the function atoms, then the ideal.
  void finish() {
    std::vector<bool> seen;
    auto collect = [&](const Poly& p) { ctx_.collect_atoms(p, seen); };
    for (const auto& p : eqs_) collect(p);
    for (const auto& p : nonneg_) collect(p);
    for (const auto& p : strict_) collect(p);
    for (const auto& g : goals_) {
      collect(g.p);
      collect(g.l);
      collect(g.r);
    }
    std::vector<Poly> gens = eqs_;
    for (std::size_t k = 0; k < seen.size(); ++k) {
      if (!seen[k]) continue;
      VarId v = static_cast<VarId>(k);
      const Atom& a = ctx_.atom(v);
      Poly x = Poly::var(v);
      switch (a.kind) {
        case AtomKind::Sqrt: gens.push_back(x * x - a.args[0]); break;
        case AtomKind::Abs: gens.push_back(x * x - a.args[0] * a.args[0]); break;
        case AtomKind::Inv: gens.push_back(x * a.args[0] - Poly::constant(1)); break;
        case AtomKind::Cos: {
          VarId s = ctx_.intern(AtomKind::Sin, {a.args[0]}, "sin(" + ctx_.key(a.args[0]) + ")");
          gens.push_back(Poly::var(s) * Poly::var(s) + x * x - Poly::constant(1));
          break;
        }
        default: break;
      }
    }
    basis_ = poly::groebner(ctx_, gens);
    sign_.assign(ctx_.atom_count(), -1);
  }

  Poly red(const Poly& p) { return poly::reduce(ctx_, ctx_.trig_reduce(p), basis_.polys); }

  // Sign knowledge per atom: 0 unknown, 1 nonnegative, 2 positive.
  int sign(VarId v) {
    auto k = static_cast<std::size_t>(v);
    if (k >= sign_.size()) sign_.resize(ctx_.atom_count(), -1);
    if (sign_[k] >= 0) return sign_[k];
    if (sign_[k] == -2) return 0;  // in progress
    sign_[k] = -2;
    int out = compute_sign(v);
    sign_[k] = out;
    return out;
  }

  int compute_sign(VarId v) {
    const Atom a = ctx_.atom(v);
    // the argument as written first; its reduced form may mention this atom
    auto sign_of_poly = [&](const Poly& p) {
      if (all_nonneg(p)) return some_pos(p) ? 2 : 1;
      return pos(p, 1) ? 2 : nonneg(p, 1) ? 1 : 0;
    };
    switch (a.kind) {
      case AtomKind::Sqrt: return sign_of_poly(a.args[0]) == 2 ? 2 : 1;
      case AtomKind::Abs:
      case AtomKind::Acos: return 1;
      case AtomKind::Sgn: return sign_of_poly(a.args[0]);
      case AtomKind::Inv: return sign_of_poly(a.args[0]) ? 2 : 0;
      case AtomKind::Min: return std::min(sign_of_poly(a.args[0]), sign_of_poly(a.args[1]));
      case AtomKind::Max: return std::max(sign_of_poly(a.args[0]), sign_of_poly(a.args[1]));
      default: break;
    }
    // a*x + b >= 0 (or > 0) with a > 0 and b <= 0
    int best = 0;
    auto scan = [&](const std::vector<Poly>& hs, bool strict) {
      for (const auto& h : hs) {
        if (h.terms.size() > 2) continue;
        Coeff a_c = 0, b_c = 0;
        bool ok = true;
        for (const auto& [m, c] : h.terms) {
          if (m.empty())
            b_c = c;
          else if (m.size() == 1 && m[0].first == v && m[0].second == 1)
            a_c = c;
          else
            ok = false;
        }
        if (!ok || a_c <= 0 || b_c > 0) continue;
        best = std::max(best, (strict || b_c < 0) ? 2 : 1);
      }
    };
    scan(nonneg_, false);
    scan(strict_, true);
    return best;
  }

  bool term_nonneg(const Monomial& m, const Coeff& c) {
    if (c < 0) return false;
    for (const auto& [v, e] : m)
      if (e % 2 == 1 && sign(v) == 0) return false;
    return true;
  }

  bool term_pos(const Monomial& m, const Coeff& c) {
    if (c <= 0) return false;
    for (const auto& [v, e] : m)
      if (sign(v) != 2) return false;
    return true;
  }

  bool all_nonneg(const Poly& r) {
    for (const auto& [m, c] : r.terms)
      if (!term_nonneg(m, c)) return false;
    return true;
  }

  bool some_pos(const Poly& r) {
    for (const auto& [m, c] : r.terms)
      if (term_pos(m, c)) return true;
    return false;
  }

  // r - k*h for the k > 0 that cancels the first offending term of r.
  template <typename F>
  bool try_subtract(const Poly& r, const std::vector<Poly>& hs, F&& done) {
    const std::pair<const Monomial, Coeff>* bad = nullptr;
    for (const auto& t : r.terms)
      if (!term_nonneg(t.first, t.second)) {
        bad = &t;
        break;
      }
    for (const auto& h : hs) {
      Poly hr = red(h);
      std::vector<const std::pair<const Monomial, Coeff>*> targets;
      if (bad) {
        targets.push_back(bad);
      } else {
        for (const auto& t : r.terms) targets.push_back(&t);
      }
      for (const auto* t : targets) {
        auto it = hr.terms.find(t->first);
        if (it == hr.terms.end()) continue;
        Coeff k = t->second / it->second;
        if (k <= 0) continue;
        if (done(red(r - poly::scale(hr, k)))) return true;
      }
    }
    return false;
  }

  bool nonneg(const Poly& p, int depth) {
    Poly r = red(p);
    if (all_nonneg(r)) return true;
    if (depth <= 0) return false;
    auto rec = [&](const Poly& q) { return nonneg(q, depth - 1); };
    if (try_subtract(r, nonneg_, rec) || try_subtract(r, strict_, rec)) return true;
    // cancel against an original equation, unreduced
    Poly raw = ctx_.trig_reduce(p);
    for (const auto& e : eqs_)
      for (const auto& [m, c] : raw.terms) {
        auto it = e.terms.find(m);
        if (it == e.terms.end()) continue;
        if (all_nonneg(raw - poly::scale(e, c / it->second))) return true;
      }
    return false;
  }

  bool pos(const Poly& p, int depth) {
    Poly r = red(p);
    if (all_nonneg(r) && some_pos(r)) return true;
    if (depth <= 0) return false;
    auto to_nonneg = [&](const Poly& q) { return nonneg(q, depth - 1); };
    auto to_pos = [&](const Poly& q) { return pos(q, depth - 1); };
    return try_subtract(r, strict_, to_nonneg) || try_subtract(r, nonneg_, to_pos);
  }

  bool attempt(const Goal& g) {
    switch (g.kind) {
      case Kind::Zero: return red(g.p).zero();
      case Kind::Nonneg: return nonneg(g.p, depth_);
      case Kind::Pos: return pos(g.p, depth_);
      case Kind::NonZero: return pos(g.p, depth_) || pos(-g.p, depth_);
      case Kind::Atom: return atoms_.count(g.atom) != 0;
      case Kind::SqSq: {
        if (!has_block(g.l) && !has_block(g.r)) return false;
        if (!red(g.l * g.l - g.r * g.r).zero()) return false;
        return (nonneg(g.l, depth_) && nonneg(g.r, depth_)) || (nonneg(-g.l, depth_) && nonneg(-g.r, depth_));
      }
    }
    return false;
  }

  bool has_block(const Poly& p) const {
    for (const auto& t : p.terms)
      for (const auto& f : t.first)
        if (ctx_.atom(f.first).block) return true;
    return false;
  }

  std::string describe(const Goal& g) {
    switch (g.kind) {
      case Kind::Zero: return to_string(ctx_.to_expr(red(g.p))) + " = 0";
      case Kind::Nonneg: return to_string(ctx_.to_expr(red(g.p))) + " >= 0";
      case Kind::Pos: return to_string(ctx_.to_expr(red(g.p))) + " > 0";
      case Kind::NonZero: return to_string(ctx_.to_expr(red(g.p))) + " != 0";
      case Kind::Atom: return "open quantified atom";
      case Kind::SqSq: return "";
    }
    return "";
  }

  poly::Context ctx_;
  int depth_;
  std::vector<Poly> eqs_, nonneg_, strict_;
  std::set<std::string> atoms_;
  std::vector<Goal> goals_;
  poly::Basis basis_;
  std::vector<int> sign_;
};

// ---------------------------------------------------------------------------
// Tableau

class Tableau {
 public:
  explicit Tableau(const Limits& lim) : lim_(lim) {}

  bool run(std::vector<Pred> th, std::vector<Pred> tg, Literals lits, int splits) {
    if (leaves_ > lim_.max_leaves) return false;
    while (!th.empty()) {
      Pred p = th.back();
      th.pop_back();
      switch (p.op()) {
        case PredOp::True: break;
        case PredOp::False: return true;
        case PredOp::And:
          th.push_back(p.arg(0));
          th.push_back(p.arg(1));
          break;
        case PredOp::Or: {
          auto a = th, b = th;
          a.push_back(p.arg(0));
          b.push_back(p.arg(1));
          return run(a, tg, lits, splits) && run(b, tg, lits, splits);
        }
        case PredOp::Implies: {
          auto a = tg;
          auto b = th;
          a.push_back(p.arg(0));
          b.push_back(p.arg(1));
          return run(th, a, lits, splits) && run(b, tg, lits, splits);
        }
        case PredOp::Not: tg.push_back(p.arg(0)); break;
        case PredOp::Cmp:
          if (matrix_cmp(p))
            th.push_back(split_matrix(p));
          else
            lits.hyps.push_back(p);
          break;
        case PredOp::Exists:
        case PredOp::Forall: lits.hyps.push_back(p); break;
      }
    }
    while (!tg.empty()) {
      Pred p = tg.back();
      tg.pop_back();
      switch (p.op()) {
        case PredOp::True: return true;
        case PredOp::False: break;
        case PredOp::Or:
          tg.push_back(p.arg(0));
          tg.push_back(p.arg(1));
          break;
        case PredOp::And: {
          auto a = tg, b = tg;
          a.push_back(p.arg(0));
          b.push_back(p.arg(1));
          return run({}, a, lits, splits) && run({}, b, lits, splits);
        }
        case PredOp::Implies: {
          tg.push_back(p.arg(1));
          return run({p.arg(0)}, tg, lits, splits);
        }
        case PredOp::Not: return run({p.arg(0)}, tg, lits, splits);
        case PredOp::Cmp:
          if (matrix_cmp(p)) {
            tg.push_back(split_matrix(p));
          } else {
            lits.goals.push_back(p);
          }
          break;
        case PredOp::Exists:
        case PredOp::Forall: lits.goals.push_back(p); break;
      }
    }
    return leaf(std::move(lits), splits);
  }

  int leaves() const { return leaves_; }
  const std::string& residue() const { return residue_; }

 private:
  bool leaf(Literals lits, int splits) {
    substitute_leaves(lits);
    for (const auto& g : lits.goals)
      for (const auto& h : lits.hyps)
        if (structurally_equal(g, h)) return true;
    if (splits < lim_.max_cond_splits) {
      Expr c;
      for (const auto& p : lits.hyps)
        if (!c) c = find_cond(p);
      for (const auto& p : lits.goals)
        if (!c) c = find_cond(p);
      if (c) {
        const Pred& guard = c.node().pred;
        auto branch = [&](const Expr& value, const Pred& assumption) {
          Literals next;
          for (const auto& p : lits.hyps) next.hyps.push_back(replace(p, c, value));
          for (const auto& p : lits.goals) next.goals.push_back(replace(p, c, value));
          return run({assumption}, {}, std::move(next), splits + 1);
        };
        return branch(c.arg(0), guard) && branch(c.arg(1), pr::neg(guard));
      }
    }
    ++leaves_;
    std::string residue;
    Algebra alg(lits, lim_.sign_depth);
    if (alg.closed(residue)) return true;
    if (residue_.empty()) residue_ = residue.empty() ? "open leaf" : residue;
    return false;
  }

  // Eliminate hypotheses of the form leaf = term.
  static void substitute_leaves(Literals& lits) {
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t k = 0; k < lits.hyps.size(); ++k) {
        const Pred& h = lits.hyps[k];
        if (h.op() != PredOp::Cmp || h.cmp() != CmpOp::Eq) continue;
        Expr from, to;
        if (is_leaf(h.lhs()) && !occurs(h.rhs(), h.lhs())) {
          from = h.lhs();
          to = h.rhs();
        } else if (is_leaf(h.rhs()) && !occurs(h.lhs(), h.rhs())) {
          from = h.rhs();
          to = h.lhs();
        } else {
          continue;
        }
        Pred keep = h;
        lits.hyps.erase(lits.hyps.begin() + static_cast<std::ptrdiff_t>(k));
        for (auto& p : lits.hyps) p = replace(p, from, to);
        for (auto& p : lits.goals) p = replace(p, from, to);
        (void)keep;
        changed = true;
        break;
      }
    }
  }

  const Limits& lim_;
  int leaves_ = 0;
  std::string residue_;
};

}  // namespace

Outcome prove(const std::vector<Pred>& hyps, const Pred& goal, const Limits& lim) {
  std::vector<Pred> th;
  for (const auto& h : hyps) th.push_back(expand_components(h));
  Tableau t(lim);
  Outcome out;
  out.proved = t.run(std::move(th), {expand_components(goal)}, {}, 0);
  out.leaves = t.leaves();
  if (!out.proved) out.residue = t.residue();
  return out;
}

}  // namespace helmproof::prover
