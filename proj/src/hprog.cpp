#include "helmproof/hprog.hpp"

#include <algorithm>
#include <random>

namespace helmproof {

ProgOp Program::op() const { return n_->op; }

namespace {

Program make(ProgNode n) { return Program(std::make_shared<const ProgNode>(std::move(n))); }

}  // namespace

namespace hp {

Program skip() {
  static const Program s = make(ProgNode{});
  return s;
}

Program assign(const Lens& l, const Expr& e) {
  if (e.sort() != l.sort || (l.sort == Sort::Real && e.shape() != l.shape))
    throw Error(ErrorKind::ShapeMismatch, "cannot assign " + to_string(e) + " : " + to_string(e.shape()) + " to " +
                                              l.name + " : " + to_string(l.shape));
  if (l.sort == Sort::Set) throw Error(ErrorKind::ShapeMismatch, "set variables can only be assigned with :=*");
  ProgNode n;
  n.op = ProgOp::Assign;
  n.target = l;
  n.value = e;
  return make(std::move(n));
}

Program havoc(const Lens& l) {
  ProgNode n;
  n.op = ProgOp::NonDetAssign;
  n.target = l;
  return make(std::move(n));
}

Program seq(const Program& a, const Program& b) {
  if (a.op() == ProgOp::Skip) return b;
  if (b.op() == ProgOp::Skip) return a;
  ProgNode n;
  n.op = ProgOp::Seq;
  auto flatten = [&](const Program& p) {
    if (p.op() == ProgOp::Seq)
      n.parts.insert(n.parts.end(), p.node().parts.begin(), p.node().parts.end());
    else
      n.parts.push_back(p);
  };
  flatten(a);
  flatten(b);
  return make(std::move(n));
}

Program seq(std::vector<Program> ps) {
  Program out = skip();
  for (const auto& p : ps) out = seq(out, p);
  return out;
}

Program ite(const Pred& c, const Program& then_p, const Program& else_p) {
  ProgNode n;
  n.op = ProgOp::If;
  n.cond = c;
  n.parts = {then_p, else_p};
  return make(std::move(n));
}

Program choice(std::vector<GuardedAlt> alts) {
  ProgNode n;
  n.op = ProgOp::Choice;
  n.alts = std::move(alts);
  return make(std::move(n));
}

Program ode(VectorField F, const Pred& domain) {
  ProgNode n;
  n.op = ProgOp::Ode;
  n.field = std::move(F);
  n.cond = domain ? domain : pr::truth();
  return make(std::move(n));
}

Program star(const Program& body, const Pred& invariant) {
  ProgNode n;
  n.op = ProgOp::Star;
  n.parts = {body};
  n.cond = invariant;
  return make(std::move(n));
}

Program test(const Pred& p) {
  ProgNode n;
  n.op = ProgOp::Test;
  n.cond = p;
  return make(std::move(n));
}

}  // namespace hp

namespace {

void print(const Program& p, std::string& out, int indent);

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 2, ' '); }

void print_seq_item(const Program& p, std::string& out, int indent) {
  // Choices inside a sequence need brackets so that '->' does not swallow the rest.
  if (p.op() == ProgOp::Choice) {
    out += "(";
    print(p, out, indent + 1);
    out += ")";
  } else {
    print(p, out, indent);
  }
}

void print(const Program& p, std::string& out, int indent) {
  const ProgNode& n = p.node();
  switch (n.op) {
    case ProgOp::Skip: out += "skip"; break;
    case ProgOp::Assign: out += n.target->name + " := " + to_string(n.value); break;
    case ProgOp::NonDetAssign: out += n.target->name + " := *"; break;
    case ProgOp::Test: out += "? " + to_string(n.cond); break;
    case ProgOp::Seq:
      for (std::size_t k = 0; k < n.parts.size(); ++k) {
        if (k) out += ";\n" + pad(indent);
        print_seq_item(n.parts[k], out, indent);
      }
      break;
    case ProgOp::If:
      out += "if " + to_string(n.cond) + " then\n" + pad(indent + 1);
      print(n.parts[0], out, indent + 1);
      if (n.parts[1].op() != ProgOp::Skip) {
        out += "\n" + pad(indent) + "else\n" + pad(indent + 1);
        print(n.parts[1], out, indent + 1);
      }
      out += "\n" + pad(indent) + "fi";
      break;
    case ProgOp::Choice:
      for (std::size_t k = 0; k < n.alts.size(); ++k) {
        if (k) out += "\n" + pad(indent) + "[] ";
        out += to_string(n.alts[k].guard) + " ->\n" + pad(indent + 1);
        print(n.alts[k].body, out, indent + 1);
      }
      break;
    case ProgOp::Ode: {
      out += "ode { ";
      for (std::size_t k = 0; k < n.field.bindings.size(); ++k) {
        if (k) out += ", ";
        out += n.field.bindings[k].first.name + "' = " + to_string(n.field.bindings[k].second);
      }
      if (n.cond.op() != PredOp::True) out += " | " + to_string(n.cond);
      out += " }";
      break;
    }
    case ProgOp::Star:
      out += "star {\n" + pad(indent + 1);
      print(n.parts[0], out, indent + 1);
      out += "\n" + pad(indent) + "}";
      if (n.cond) out += " inv " + to_string(n.cond);
      break;
  }
}

}  // namespace

std::string to_string(const Program& p) {
  std::string out;
  print(p, out, 0);
  return out;
}

// ---------------------------------------------------------------------------
// Choosers

Chooser keep_chooser() {
  return [](const Lens& l, const HybridState& st) { return st.get(l); };
}

Chooser random_chooser(std::uint64_t seed, double lo, double hi) {
  auto rng = std::make_shared<std::mt19937_64>(seed);
  return [rng, lo, hi](const Lens& l, const HybridState& st) -> Value {
    switch (l.sort) {
      case Sort::Real: {
        std::uniform_real_distribution<double> u(lo, hi);
        MatVal m = MatVal::zeros(l.shape);
        for (auto& x : m.data) x = u(*rng);
        return m;
      }
      case Sort::Mode: {
        if (l.modes.empty()) return st.get(l);
        std::uniform_int_distribution<std::size_t> u(0, l.modes.size() - 1);
        return Mode{l.modes[u(*rng)]};
      }
      case Sort::Set: return st.get(l);
    }
    return st.get(l);
  };
}

Chooser scripted_chooser(std::map<std::string, std::vector<Value>> script) {
  auto queue = std::make_shared<std::map<std::string, std::vector<Value>>>(std::move(script));
  auto pos = std::make_shared<std::map<std::string, std::size_t>>();
  return [queue, pos](const Lens& l, const HybridState& st) -> Value {
    auto it = queue->find(l.name);
    if (it == queue->end()) return st.get(l);
    std::size_t& k = (*pos)[l.name];
    if (k >= it->second.size()) return st.get(l);
    return it->second[k++];
  };
}

// ---------------------------------------------------------------------------
// Interpreter

namespace {

HybridState exec(const Program& p, const HybridState& st, const Chooser& chooser, const EvalOptions& opts) {
  const ProgNode& n = p.node();
  switch (n.op) {
    case ProgOp::Skip: return st;
    case ProgOp::Assign: return st.put(*n.target, eval_value(n.value, st, opts));
    case ProgOp::NonDetAssign: return st.put(*n.target, chooser(*n.target, st));
    case ProgOp::Test:
      if (!eval_pred(n.cond, st, opts)) throw Error(ErrorKind::TestFailed, "test failed: " + to_string(n.cond));
      return st;
    case ProgOp::Seq: {
      HybridState cur = st;
      for (const auto& q : n.parts) cur = exec(q, cur, chooser, opts);
      return cur;
    }
    case ProgOp::If:
      return exec(eval_pred(n.cond, st, opts) ? n.parts[0] : n.parts[1], st, chooser, opts);
    case ProgOp::Choice:
      for (const auto& alt : n.alts)
        if (eval_pred(alt.guard, st, opts)) return exec(alt.body, st, chooser, opts);
      return st;
    case ProgOp::Ode:
    case ProgOp::Star:
      throw Error(ErrorKind::InvalidProgram, "discrete step cannot run " + to_string(p));
  }
  return st;
}

}  // namespace

HybridState step_discrete(const Program& p, const HybridState& st, const Chooser& chooser, const EvalOptions& opts) {
  return exec(p, st, chooser, opts);
}

void for_each_node(const Program& p, const std::function<void(const Program&)>& f) {
  f(p);
  const ProgNode& n = p.node();
  for (const auto& q : n.parts) for_each_node(q, f);
  for (const auto& a : n.alts) for_each_node(a.body, f);
}

ModSet mods(const Program& p) {
  ModSet out;
  for_each_node(p, [&](const Program& q) {
    const ProgNode& n = q.node();
    if (n.op == ProgOp::Assign || n.op == ProgOp::NonDetAssign) out.lenses.insert(n.target->root());
    if (n.op == ProgOp::Ode)
      for (const auto& b : n.field.bindings) out.lenses.insert(b.first.root());
  });
  return out;
}

bool nmods(const Program& p, const std::vector<std::string>& vars) {
  ModSet m = mods(p);
  return std::none_of(vars.begin(), vars.end(), [&](const std::string& v) { return m.contains(v); });
}

bool nmods_invariance(const Program& p, const Pred& pred) { return nmods(p, free_lenses(pred)); }

}  // namespace helmproof
