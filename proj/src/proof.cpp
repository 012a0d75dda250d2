#include "helmproof/proof.hpp"

#include <gmpxx.h>

#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "prover.hpp"

namespace helmproof {

// ---------------------------------------------------------------------------
// Triples

HoareTriple make_triple(const TripleDecl& d) {
  HoareTriple t;
  t.name = d.name;
  t.space = d.space;
  t.pre = d.pre;
  t.prog = d.prog;
  t.post = d.post;
  t.cuts = d.cuts;
  t.invariant = d.invariant;
  t.ghosts = d.ghosts;
  return t;
}

HoareTriple make_triple(std::string name, SpacePtr space, Pred pre, Program prog, Pred post) {
  HoareTriple t;
  t.name = std::move(name);
  t.space = std::move(space);
  t.pre = std::move(pre);
  t.prog = std::move(prog);
  t.post = std::move(post);
  return t;
}

// ---------------------------------------------------------------------------
// VC generation

VcSink::VcSink(std::string triple, std::vector<Pred> assumptions, SpacePtr space)
    : triple_(std::move(triple)), assumptions_(std::move(assumptions)), space_(std::move(space)) {}

void VcSink::emit(const std::string& origin, const Pred& formula) {
  VC vc;
  vc.origin = origin;
  vc.formula = formula;
  vc.assumptions = assumptions_;
  vcs_.push_back(std::move(vc));
}

Lens VcSink::fresh_copy(const Lens& l) {
  std::string name;
  do {
    name = l.root() + "_h" + std::to_string(++havocs_);
  } while (space_->find(name));
  LensDecl d{name, LensKind::Discrete, l.sort, l.shape, l.angle, l.modes};
  space_ = space_->extended({d});
  return space_->lens(name);
}

std::vector<VC> VcSink::take() {
  for (auto& vc : vcs_) vc.space = space_;
  return std::move(vcs_);
}

namespace {

bool implied_by(const Pred& p, const Pred& context) {
  auto have = conjuncts(context);
  for (const auto& c : conjuncts(p)) {
    bool found = std::any_of(have.begin(), have.end(), [&](const Pred& h) { return structurally_equal(h, c); });
    if (!found) return false;
  }
  return true;
}

Pred domain_of(const Program& ode) {
  if (ode.op() != ProgOp::Ode) throw Error(ErrorKind::InvalidProgram, "expected an ODE, got " + to_string(ode));
  return ode.node().cond ? ode.node().cond : pr::truth();
}

// VCs of dI for `candidate` under `domain`: the Lie condition, then one VC
// per side condition.
std::vector<std::pair<std::string, Pred>> di_formulas(const Pred& candidate, const VectorField& F,
                                                       const Pred& domain) {
  DiffClass c = classify(candidate);
  if (!c.ok())
    throw Error(ErrorKind::NotDifferentiable,
                "dI needs a differentiable candidate; " + c.node + " " + c.reason + " in " + to_string(candidate));
  // Rates of the lenses read must be differentiable too; cond rates are
  // admitted for equations, whose obligation is decided branchwise.
  bool equation = candidate.op() == PredOp::Cmp && candidate.cmp() == CmpOp::Eq;
  for (const auto& name : free_lenses(candidate)) {
    const Expr* rate = F.find(name);
    if (!rate) continue;
    DiffClass rc = classify(*rate);
    if (!rc.ok() && !(equation && rc.node == "Cond"))
      throw Error(ErrorKind::NotDifferentiable,
                  "dI needs differentiable dynamics; " + rc.node + " in the rate of " + name + " (" + rc.reason + ")");
  }
  std::vector<Pred> side;
  Pred lie = lie_pred(normalize_for_lie(candidate), F, &side);
  std::vector<std::pair<std::string, Pred>> out;
  out.emplace_back("lie", pr::implies(domain, lie));
  for (const auto& s : side) out.emplace_back("side", pr::implies(domain, s));
  return out;
}

Pred wp_ode(const Program& p, const Pred& post, VcSink& sink) {
  const ProgNode& n = p.node();
  Pred B = domain_of(p);
  Pred J = sink.invariant ? sink.invariant : post;
  Pred acc = B;
  std::vector<Pred> established;
  for (std::size_t k = 0; k < sink.cuts.size(); ++k) {
    const Pred& cut = sink.cuts[k];
    if (!implied_by(cut, acc))
      for (auto& [tag, f] : di_formulas(cut, n.field, acc)) sink.emit("dC cut " + std::to_string(k + 1) + " " + tag, f);
    acc = pr::conj(acc, cut);
    established.push_back(cut);
  }
  if (J.op() != PredOp::True) {
    if (!implied_by(J, acc))
      for (auto& [tag, f] : di_formulas(J, n.field, acc)) sink.emit("dI " + tag, f);
    established.push_back(J);
  }
  if (!structurally_equal(J, post)) sink.emit("ode post", pr::implies(pr::conj(acc, J), post));
  return pr::implies(B, established.empty() ? pr::truth() : pr::conj(established));
}

}  // namespace

Pred wp(const Program& p, const Pred& post, VcSink& sink) {
  const ProgNode& n = p.node();
  switch (n.op) {
    case ProgOp::Skip: return post;
    case ProgOp::Assign: return substitute(post, *n.target, n.value);
    case ProgOp::NonDetAssign: return substitute(post, *n.target, ex::var(sink.fresh_copy(*n.target)));
    case ProgOp::Seq: {
      Pred q = post;
      for (auto it = n.parts.rbegin(); it != n.parts.rend(); ++it) q = wp(*it, q, sink);
      return q;
    }
    case ProgOp::If:
      return pr::conj(pr::implies(n.cond, wp(n.parts[0], post, sink)),
                      pr::implies(pr::neg(n.cond), wp(n.parts[1], post, sink)));
    case ProgOp::Choice: {
      std::vector<Pred> cases;
      std::vector<Pred> earlier;
      for (const auto& alt : n.alts) {
        std::vector<Pred> guard = earlier;
        guard.push_back(alt.guard);
        cases.push_back(pr::implies(pr::conj(guard), wp(alt.body, post, sink)));
        earlier.push_back(pr::neg(alt.guard));
      }
      cases.push_back(earlier.empty() ? post : pr::implies(pr::conj(earlier), post));
      return pr::conj(cases);
    }
    case ProgOp::Test: return pr::implies(n.cond, post);
    case ProgOp::Ode: return wp_ode(p, post, sink);
    case ProgOp::Star: {
      if (!n.cond) throw Error(ErrorKind::MissingInvariant, "loop without invariant: " + to_string(p));
      sink.emit("loop consecution", pr::implies(n.cond, wp(n.parts[0], n.cond, sink)));
      sink.emit("loop exit", pr::implies(n.cond, post));
      return n.cond;
    }
  }
  return post;
}

std::vector<VC> vc_gen(const HoareTriple& t, const std::vector<Pred>& assumptions) {
  VcSink sink(t.name, assumptions, t.space);
  sink.cuts = t.cuts;
  sink.invariant = t.invariant;
  Pred w = wp(t.prog, t.post, sink);
  std::vector<Pred> pre{t.pre};
  for (const auto& g : t.ghosts) pre.push_back(pr::eq(ex::var(g.lens), g.value));
  std::vector<VC> side = sink.take();
  VC main;
  main.origin = "main";
  main.formula = pr::implies(pr::conj(pre), w);
  main.assumptions = assumptions;
  main.space = sink.space();
  std::vector<VC> out{main};
  for (auto& vc : side) out.push_back(std::move(vc));
  for (std::size_t k = 0; k < out.size(); ++k) out[k].id = t.name + "#" + std::to_string(k + 1);
  return out;
}

namespace {

std::vector<VC> number(std::vector<std::pair<std::string, Pred>> fs, const std::string& origin,
                       const std::vector<Pred>& assumptions, const SpacePtr& space) {
  std::vector<VC> out;
  for (auto& [tag, f] : fs) {
    VC vc;
    vc.id = origin + "#" + std::to_string(out.size() + 1);
    vc.origin = origin + " " + tag;
    vc.formula = f;
    vc.assumptions = assumptions;
    vc.space = space;
    out.push_back(std::move(vc));
  }
  return out;
}

}  // namespace

std::vector<VC> dI(const Pred& candidate, const Program& ode, const SpacePtr& space,
                   const std::vector<Pred>& assumptions, const std::string& origin) {
  return number(di_formulas(candidate, ode.node().field, domain_of(ode)), origin, assumptions, space);
}

std::vector<VC> dC(const Pred& lemma, const Pred& target, const Program& ode, const SpacePtr& space,
                   const std::vector<Pred>& assumptions, const std::string& origin) {
  Pred B = domain_of(ode);
  std::vector<std::pair<std::string, Pred>> fs;
  if (lemma.op() != PredOp::True)
    for (auto& [tag, f] : di_formulas(lemma, ode.node().field, B)) fs.emplace_back("lemma " + tag, f);
  Pred inner = lemma.op() == PredOp::True ? B : pr::conj(B, lemma);
  for (auto& [tag, f] : di_formulas(target, ode.node().field, inner)) fs.emplace_back("target " + tag, f);
  return number(std::move(fs), origin, assumptions, space);
}

// ---------------------------------------------------------------------------
// Discharge

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::ProvedSymbolic: return "ProvedSymbolic";
    case Verdict::RefutedWithWitness: return "RefutedWithWitness";
    case Verdict::Unknown: return "Unknown";
  }
  return "?";
}

namespace {

bool close_to(double a, double b, double tol) { return std::fabs(a - b) <= tol * (1 + std::max(std::fabs(a), std::fabs(b))); }

bool cmp_holds(CmpOp op, const MatVal& l, const MatVal& r, bool loose, double tol) {
  double slack = 0;
  if (op == CmpOp::Eq || op == CmpOp::Ne) {
    bool eq = true;
    for (std::size_t k = 0; k < l.data.size(); ++k)
      eq = eq && (loose ? close_to(l.data[k], r.data[k], tol) : l.data[k] == r.data[k]);
    if (op == CmpOp::Eq) return eq;
    // l != r: loosely true unless exactly equal, tightly the plain test
    return l.data != r.data;
  }
  double a = l.as_scalar(), b = r.as_scalar();
  if (loose) slack = tol * (1 + std::max(std::fabs(a), std::fabs(b)));
  switch (op) {
    case CmpOp::Le: return a <= b + slack;
    case CmpOp::Lt: return a < b + slack;
    case CmpOp::Ge: return a + slack >= b;
    case CmpOp::Gt: return a + slack > b;
    default: return false;
  }
}

bool polar(const Pred& p, const HybridState& st, bool positive, double tol, const Bindings& env) {
  const PredNode& n = p.node();
  switch (n.op) {
    case PredOp::True: return true;
    case PredOp::False: return false;
    case PredOp::Cmp: {
      Value l = eval_value(n.lhs, st, {}, &env), r = eval_value(n.rhs, st, {}, &env);
      if (n.lhs.sort() != Sort::Real) {
        bool eq = l == r;
        return n.cmp == CmpOp::Ne ? !eq : eq;
      }
      return cmp_holds(n.cmp, std::get<MatVal>(l), std::get<MatVal>(r), positive, tol);
    }
    case PredOp::And: return polar(n.args[0], st, positive, tol, env) && polar(n.args[1], st, positive, tol, env);
    case PredOp::Or: return polar(n.args[0], st, positive, tol, env) || polar(n.args[1], st, positive, tol, env);
    case PredOp::Not: return !polar(n.args[0], st, !positive, tol, env);
    case PredOp::Implies:
      return !polar(n.args[0], st, !positive, tol, env) || polar(n.args[1], st, positive, tol, env);
    case PredOp::Exists:
    case PredOp::Forall: {
      const PointSet& pts = std::get<PointSet>(st.get(*n.set));
      bool exists = n.op == PredOp::Exists;
      for (const auto& pt : pts) {
        Bindings inner = env;
        inner.slots.emplace_back(n.bound, MatVal::row({pt[0], pt[1]}));
        bool h = polar(n.args[0], st, positive, tol, inner);
        if (exists && h) return true;
        if (!exists && !h) return false;
      }
      return !exists;
    }
  }
  return false;
}

// Hypothesis equalities along the implication spine: lens = term.
void solvable_equalities(const Pred& p, std::vector<std::pair<Lens, Expr>>& out) {
  if (p.op() != PredOp::Implies) return;
  for (const auto& c : conjuncts(p.arg(0))) {
    if (c.op() != PredOp::Cmp || c.cmp() != CmpOp::Eq) continue;
    auto try_side = [&](const Expr& leaf, const Expr& term) {
      if (leaf.op() != Op::Var) return false;
      const Lens& l = *leaf.node().lens;
      auto reads = free_lenses(term);
      if (std::find(reads.begin(), reads.end(), l.root()) != reads.end()) return false;
      out.emplace_back(l, term);
      return true;
    };
    if (!try_side(c.lhs(), c.rhs())) try_side(c.rhs(), c.lhs());
  }
  solvable_equalities(p.arg(1), out);
}

std::string show_state(const HybridState& st) {
  std::string out;
  for (const Lens& l : st.space()->lenses()) {
    if (l.is_element()) continue;
    if (!out.empty()) out += ", ";
    out += l.name + " = " + to_string(st.get(l));
  }
  return out;
}

}  // namespace

bool holds_loosely(const Pred& p, const HybridState& st, double tol) { return polar(p, st, true, tol, Bindings{}); }

HybridState sample_state(const VC& vc, const SampleBox& box, std::mt19937_64& rng) {
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  HybridState st(vc.space);
  for (const Lens& l : vc.space->lenses()) {
    if (l.is_element()) continue;
    switch (l.sort) {
      case Sort::Real: {
        double lo = box.lo, hi = box.hi;
        if (auto it = box.ranges.find(l.name); it != box.ranges.end()) {
          lo = it->second.first;
          hi = it->second.second;
        } else if (l.angle) {
          lo = -std::numbers::pi;
          hi = std::numbers::pi;
        }
        MatVal v = MatVal::zeros(l.shape);
        for (auto& x : v.data) x = uni(lo, hi);
        st = st.put(l, v);
        break;
      }
      case Sort::Mode:
        if (!l.modes.empty())
          st = st.put(l, Mode{l.modes[std::uniform_int_distribution<std::size_t>(0, l.modes.size() - 1)(rng)]});
        break;
      case Sort::Set: {
        std::size_t k = std::uniform_int_distribution<std::size_t>(0, box.max_points)(rng);
        std::vector<Point> pts;
        for (std::size_t i = 0; i < k; ++i) pts.push_back({uni(box.lo, box.hi), uni(box.lo, box.hi)});
        st = st.put(l, make_point_set(std::move(pts)));
        break;
      }
    }
  }
  std::vector<std::pair<Lens, Expr>> eqs;
  solvable_equalities(vc.formula, eqs);
  for (int pass = 0; pass < 2; ++pass)
    for (const auto& [l, term] : eqs) {
      try {
        st = st.put(l, eval_value(term, st));
      } catch (const Error&) {
        // leave the sampled value
      }
    }
  return st;
}

DischargeResult discharge(const VC& vc, const DischargeOptions& opts) {
  DischargeResult out;
  std::string residue;
  if (opts.symbolic) {
    prover::Outcome o = prover::prove(vc.assumptions, vc.formula);
    if (o.proved) {
      out.verdict = Verdict::ProvedSymbolic;
      out.detail = "closed symbolically (" + std::to_string(o.leaves) + " leaves)";
      return out;
    }
    residue = o.residue;
  }
  if (opts.sampling) {
    std::mt19937_64 rng(opts.seed);
    for (std::size_t k = 0; k < opts.samples; ++k) {
      HybridState st = sample_state(vc, opts.box, rng);
      bool ok = true;
      try {
        ok = holds_loosely(vc.formula, st);
      } catch (const Error& e) {
        if (!is_eval_error(e.kind()) && e.kind() != ErrorKind::IndexOutOfRange) throw;
        continue;
      }
      if (!ok) {
        out.verdict = Verdict::RefutedWithWitness;
        out.witness = st;
        out.detail = show_state(st);
        return out;
      }
    }
  }
  out.verdict = Verdict::Unknown;
  out.detail = residue.empty() ? "no symbolic closure; sampling found no counterexample" : "open: " + residue;
  return out;
}

// ---------------------------------------------------------------------------
// SMT-LIB export

namespace {

class SmtWriter {
 public:
  std::string pred(const Pred& p) {
    const PredNode& n = p.node();
    switch (n.op) {
      case PredOp::True: return "true";
      case PredOp::False: return "false";
      case PredOp::Cmp: return cmp(p);
      case PredOp::And: return "(and " + pred(n.args[0]) + " " + pred(n.args[1]) + ")";
      case PredOp::Or: return "(or " + pred(n.args[0]) + " " + pred(n.args[1]) + ")";
      case PredOp::Not: return "(not " + pred(n.args[0]) + ")";
      case PredOp::Implies: return "(=> " + pred(n.args[0]) + " " + pred(n.args[1]) + ")";
      case PredOp::Exists:
      case PredOp::Forall:
        throw Error(ErrorKind::UnsupportedTheory,
                    "quantifier over the symbolic set '" + n.set->name + "' needs a finite expansion");
    }
    return "true";
  }

  std::string script(const VC& vc) {
    std::vector<std::string> asserts;
    for (const auto& a : vc.assumptions) asserts.push_back(pred(expand_components(a)));
    std::string goal = pred(expand_components(vc.formula));
    std::ostringstream os;
    os << "; " << vc.id << " (" << vc.origin << ")\n";
    os << "(set-logic QF_UFNRA)\n";
    for (const auto& f : funs_) os << "(declare-fun " << f << " (Real) Real)\n";
    if (atan2_) os << "(declare-fun hp_atan2 (Real Real) Real)\n";
    for (const auto& s : symbols_) os << "(declare-const " << s << " Real)\n";
    for (const auto& [sym, code] : modes_) os << "(define-fun " << sym << " () Real " << code << ")\n";
    for (const auto& a : asserts) os << "(assert " << a << ")\n";
    for (const auto& t : trig_args_)
      os << "(assert (= (+ (* (hp_sin " << t << ") (hp_sin " << t << ")) (* (hp_cos " << t << ") (hp_cos " << t
         << "))) 1.0))\n";
    for (const auto& t : sqrt_args_)
      os << "(assert (=> (>= " << t << " 0.0) (and (>= (hp_sqrt " << t << ") 0.0) (= (* (hp_sqrt " << t
         << ") (hp_sqrt " << t << ")) " << t << "))))\n";
    os << "(assert (not " << goal << "))\n";
    os << "(check-sat)\n(exit)\n";
    return os.str();
  }

 private:
  static std::string number(double x) {
    mpq_class q(x);
    auto lit = [](const mpz_class& z) { return z.get_str() + ".0"; };
    mpz_class num = abs(q.get_num());
    std::string body = q.get_den() == 1 ? lit(num) : "(/ " + lit(num) + " " + lit(q.get_den()) + ")";
    return q < 0 ? "(- " + body + ")" : body;
  }

  static std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s) out += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
    return out;
  }

  std::string symbol(const std::string& base, std::size_t i = 0, std::size_t j = 0) {
    std::string s = sanitize(base);
    if (i) s += "_" + std::to_string(i) + "_" + std::to_string(j);
    symbols_.insert(s);
    return s;
  }

  std::string mode(const std::string& sym) {
    std::string name = "mode_" + sanitize(sym);
    if (!modes_.count(name)) modes_.emplace(name, std::to_string(modes_.size() + 1) + ".0");
    return name;
  }

  std::string cmp(const Pred& p) {
    const Expr& l = p.lhs();
    const Expr& r = p.rhs();
    if (l.sort() == Sort::Real && !l.shape().is_scalar()) {
      std::string parts;
      for (std::size_t k = 0; k < l.shape().size(); ++k) parts += " (= " + comp(l, k) + " " + comp(r, k) + ")";
      return p.cmp() == CmpOp::Ne ? "(not (and" + parts + "))" : "(and" + parts + ")";
    }
    std::string a = scalar(l), b = scalar(r);
    switch (p.cmp()) {
      case CmpOp::Eq: return "(= " + a + " " + b + ")";
      case CmpOp::Ne: return "(not (= " + a + " " + b + "))";
      case CmpOp::Le: return "(<= " + a + " " + b + ")";
      case CmpOp::Lt: return "(< " + a + " " + b + ")";
      case CmpOp::Ge: return "(>= " + a + " " + b + ")";
      case CmpOp::Gt: return "(> " + a + " " + b + ")";
    }
    return "true";
  }

  // Component k (row-major) of a matrix-valued expression.
  std::string comp(const Expr& e, std::size_t k) {
    const ExprNode& n = e.node();
    Shape s = e.shape();
    std::size_t i = k / s.cols + 1, j = k % s.cols + 1;
    switch (n.op) {
      case Op::Const: return number(n.value.data[k]);
      case Op::Param: return symbol(n.name, i, j);
      case Op::Var: return symbol(n.lens->name, i, j);
      case Op::MatLit: return scalar(n.args[k]);
      case Op::Neg: return "(- " + comp(n.args[0], k) + ")";
      case Op::Add: return "(+ " + comp(n.args[0], k) + " " + comp(n.args[1], k) + ")";
      case Op::Sub: return "(- " + comp(n.args[0], k) + " " + comp(n.args[1], k) + ")";
      case Op::ScalarMul: return "(* " + scalar(n.args[0]) + " " + comp(n.args[1], k) + ")";
      case Op::Div: return "(/ " + comp(n.args[0], k) + " " + scalar(n.args[1]) + ")";
      case Op::Transpose: {
        Shape in = n.args[0].shape();
        return comp(n.args[0], (j - 1) * in.cols + (i - 1));
      }
      case Op::Cond: return "(ite " + pred(n.pred) + " " + comp(n.args[0], k) + " " + comp(n.args[1], k) + ")";
      case Op::Bound: throw Error(ErrorKind::UnsupportedTheory, "bound point variable outside a finite set");
      default: break;
    }
    throw Error(ErrorKind::UnsupportedTheory, "no SMT form for " + to_string(e));
  }

  std::string fn(const char* name, const std::string& arg) {
    funs_.insert(name);
    return std::string("(") + name + " " + arg + ")";
  }

  std::string scalar(const Expr& e) {
    const ExprNode& n = e.node();
    auto a = [&](std::size_t k) { return scalar(n.args[k]); };
    switch (n.op) {
      case Op::Const: return number(n.value.data[0]);
      case Op::Param: return symbol(n.name);
      case Op::Var:
        if (n.sort == Sort::Mode) return symbol(n.lens->name);
        if (n.lens->is_element()) return symbol(n.lens->parent, n.lens->elem_row, n.lens->elem_col);
        return symbol(n.lens->name);
      case Op::ModeLit: return mode(n.name);
      case Op::Bound: throw Error(ErrorKind::UnsupportedTheory, "bound point variable outside a finite set");
      case Op::Neg: return "(- " + a(0) + ")";
      case Op::Add: return "(+ " + a(0) + " " + a(1) + ")";
      case Op::Sub: return "(- " + a(0) + " " + a(1) + ")";
      case Op::Mul: return "(* " + a(0) + " " + a(1) + ")";
      case Op::Div: return "(/ " + a(0) + " " + a(1) + ")";
      case Op::Dot: {
        std::string out = "(+";
        for (std::size_t k = 0; k < n.args[0].shape().size(); ++k)
          out += " (* " + comp(n.args[0], k) + " " + comp(n.args[1], k) + ")";
        return out + ")";
      }
      case Op::Norm: {
        std::string sum = "(+ 0.0";
        for (std::size_t k = 0; k < n.args[0].shape().size(); ++k) {
          std::string c = comp(n.args[0], k);
          sum += " (* " + c + " " + c + ")";
        }
        sum += ")";
        sqrt_args_.insert(sum);
        return fn("hp_sqrt", sum);
      }
      case Op::Index: return comp(n.args[0], (n.row - 1) * n.args[0].shape().cols + (n.col - 1));
      case Op::Sin:
      case Op::Cos: {
        std::string x = a(0);
        trig_args_.insert(x);
        funs_.insert("hp_sin");
        funs_.insert("hp_cos");
        return std::string(n.op == Op::Sin ? "(hp_sin " : "(hp_cos ") + x + ")";
      }
      case Op::Sqrt: {
        std::string x = a(0);
        sqrt_args_.insert(x);
        return fn("hp_sqrt", x);
      }
      case Op::Acos: return fn("hp_acos", a(0));
      case Op::Log: return fn("hp_log", a(0));
      case Op::Wrap: return fn("hp_wrap", a(0));
      case Op::Atan2: atan2_ = true; return "(hp_atan2 " + a(0) + " " + a(1) + ")";
      case Op::Abs: {
        std::string x = a(0);
        return "(ite (>= " + x + " 0.0) " + x + " (- " + x + "))";
      }
      case Op::Sgn: {
        std::string x = a(0);
        return "(ite (> " + x + " 0.0) 1.0 (ite (< " + x + " 0.0) (- 1.0) 0.0))";
      }
      case Op::Min:
      case Op::Max: {
        std::string x = a(0), y = a(1);
        return "(ite (" + std::string(n.op == Op::Min ? "<=" : ">=") + " " + x + " " + y + ") " + x + " " + y + ")";
      }
      case Op::Cond: return "(ite " + pred(n.pred) + " " + a(0) + " " + a(1) + ")";
      case Op::SetMin: throw Error(ErrorKind::UnsupportedTheory, "minover over a symbolic set");
      default: break;
    }
    throw Error(ErrorKind::UnsupportedTheory, "no SMT form for " + to_string(e));
  }

  std::set<std::string> symbols_, funs_, trig_args_, sqrt_args_;
  std::map<std::string, std::string> modes_;
  bool atan2_ = false;
};

}  // namespace

std::string export_smtlib(const VC& vc) {
  SmtWriter w;
  return w.script(vc);
}

// ---------------------------------------------------------------------------
// Triples and sessions

std::optional<TripleReport> nmods_triple(const HoareTriple& t) {
  if (!structurally_equal(t.pre, t.post) || !nmods_invariance(t.prog, t.pre)) return std::nullopt;
  TripleReport r;
  r.triple = t;
  r.rule = "nmods";
  r.proved = true;
  return r;
}

namespace {

void discharge_all(TripleReport& r, const DischargeOptions& opts) {
  r.results.clear();
  for (const auto& vc : r.vcs) r.results.push_back(discharge(vc, opts));
  r.proved = std::all_of(r.results.begin(), r.results.end(),
                         [](const DischargeResult& d) { return d.verdict == Verdict::ProvedSymbolic; });
}

}  // namespace

TripleReport check_triple(const HoareTriple& t, const std::vector<Pred>& assumptions, const DischargeOptions& opts) {
  if (auto r = nmods_triple(t)) return *r;
  TripleReport r;
  r.triple = t;
  r.rule = "vcgen";
  r.vcs = vc_gen(t, assumptions);
  discharge_all(r, opts);
  return r;
}

TripleReport compose(const TripleReport& a, const TripleReport& b, const std::vector<Pred>& assumptions,
                     const DischargeOptions& opts) {
  TripleReport r;
  const HoareTriple& ta = a.triple;
  const HoareTriple& tb = b.triple;
  r.triple.name = ta.name + ";" + tb.name;
  r.triple.space = ta.space->lenses().size() >= tb.space->lenses().size() ? ta.space : tb.space;
  r.triple.pre = ta.pre;
  r.triple.prog = hp::seq(ta.prog, tb.prog);
  r.triple.post = tb.post;
  r.triple.ghosts = ta.ghosts;
  r.triple.ghosts.insert(r.triple.ghosts.end(), tb.ghosts.begin(), tb.ghosts.end());
  r.rule = "compose";
  r.vcs = a.vcs;
  r.results = a.results;
  r.vcs.insert(r.vcs.end(), b.vcs.begin(), b.vcs.end());
  r.results.insert(r.results.end(), b.results.begin(), b.results.end());
  bool ok = a.proved && b.proved;
  if (!structurally_equal(ta.post, tb.pre)) {
    VC bridge;
    bridge.id = r.triple.name + "#bridge";
    bridge.origin = "composition midpoint";
    bridge.formula = pr::implies(ta.post, tb.pre);
    bridge.assumptions = assumptions;
    bridge.space = r.triple.space;
    DischargeResult d = discharge(bridge, opts);
    ok = ok && d.verdict == Verdict::ProvedSymbolic;
    r.vcs.push_back(bridge);
    r.results.push_back(d);
  }
  r.proved = ok;
  return r;
}

const TripleReport& ProofSession::add(TripleReport r) {
  reports_.push_back(std::move(r));
  return reports_.back();
}

std::string ProofSession::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model_path_;
  j["triples"] = nlohmann::ordered_json::array();
  for (const auto& r : reports_) {
    nlohmann::ordered_json t;
    t["name"] = r.triple.name;
    t["rule"] = r.rule;
    t["proved"] = r.proved;
    t["pre"] = to_string(r.triple.pre);
    t["prog"] = to_string(r.triple.prog);
    t["post"] = to_string(r.triple.post);
    t["vcs"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < r.vcs.size(); ++k) {
      nlohmann::ordered_json v;
      v["id"] = r.vcs[k].id;
      v["origin"] = r.vcs[k].origin;
      v["formula"] = to_string(r.vcs[k].formula);
      if (k < r.results.size()) {
        v["verdict"] = to_string(r.results[k].verdict);
        v["detail"] = r.results[k].detail;
      }
      t["vcs"].push_back(v);
    }
    j["triples"].push_back(t);
  }
  return j.dump(2) + "\n";
}

std::string ProofSession::to_text() const {
  std::ostringstream os;
  for (const auto& r : reports_) {
    os << "triple " << r.triple.name << ": " << (r.proved ? "PROVED" : "NOT PROVED") << " (" << r.rule << ")\n";
    for (std::size_t k = 0; k < r.vcs.size(); ++k) {
      os << "  " << r.vcs[k].id << " [" << r.vcs[k].origin << "] ";
      if (k < r.results.size()) os << to_string(r.results[k].verdict) << ": " << r.results[k].detail;
      os << "\n";
    }
  }
  return os.str();
}

std::pair<std::string, std::vector<ProofSession::Entry>> ProofSession::read_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("session file: ") + e.what());
  }
  std::vector<Entry> out;
  for (const auto& t : j.value("triples", nlohmann::json::array()))
    for (const auto& v : t.value("vcs", nlohmann::json::array()))
      out.push_back({t.value("name", ""), v.value("id", ""), v.value("origin", ""), v.value("formula", ""),
                     v.value("verdict", "")});
  return {j.value("model", ""), out};
}

}  // namespace helmproof
