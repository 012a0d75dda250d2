#include "poly.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace helmproof::poly {

// ---------------------------------------------------------------------------
// Monomials and polynomials

Monomial mono_mul(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, a[i].second + b[j].second);
      ++i;
      ++j;
    }
  }
  return out;
}

bool mono_divides(const Monomial& a, const Monomial& b) {
  std::size_t j = 0;
  for (const auto& [v, e] : a) {
    while (j < b.size() && b[j].first < v) ++j;
    if (j == b.size() || b[j].first != v || b[j].second < e) return false;
  }
  return true;
}

Monomial mono_div(const Monomial& b, const Monomial& a) {
  Monomial out;
  std::size_t i = 0;
  for (const auto& [v, e] : b) {
    while (i < a.size() && a[i].first < v) ++i;
    int r = e - ((i < a.size() && a[i].first == v) ? a[i].second : 0);
    if (r > 0) out.emplace_back(v, r);
  }
  return out;
}

Monomial mono_lcm(const Monomial& a, const Monomial& b) {
  Monomial out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i].first < b[j].first)) {
      out.push_back(a[i++]);
    } else if (i == a.size() || b[j].first < a[i].first) {
      out.push_back(b[j++]);
    } else {
      out.emplace_back(a[i].first, std::max(a[i].second, b[j].second));
      ++i;
      ++j;
    }
  }
  return out;
}

int mono_degree(const Monomial& m) {
  int d = 0;
  for (const auto& f : m) d += f.second;
  return d;
}

Poly Poly::constant(const Coeff& c) {
  Poly p;
  if (c != 0) p.terms.emplace(Monomial{}, c);
  return p;
}

Poly Poly::var(VarId v) {
  Poly p;
  p.terms.emplace(Monomial{{v, 1}}, Coeff(1));
  return p;
}

Coeff Poly::const_value() const {
  if (terms.empty()) return 0;
  auto it = terms.find(Monomial{});
  return it == terms.end() ? Coeff(0) : it->second;
}

int Poly::degree() const {
  int d = 0;
  for (const auto& t : terms) d = std::max(d, mono_degree(t.first));
  return d;
}

bool Poly::contains(VarId v) const {
  for (const auto& t : terms)
    for (const auto& f : t.first)
      if (f.first == v) return true;
  return false;
}

static void add_term(Poly& p, const Monomial& m, const Coeff& c) {
  if (c == 0) return;
  auto [it, fresh] = p.terms.emplace(m, c);
  if (!fresh) {
    it->second += c;
    if (it->second == 0) p.terms.erase(it);
  }
}

Poly operator+(const Poly& a, const Poly& b) {
  Poly out = a;
  for (const auto& [m, c] : b.terms) add_term(out, m, c);
  return out;
}

Poly operator-(const Poly& a, const Poly& b) {
  Poly out = a;
  for (const auto& [m, c] : b.terms) add_term(out, m, -c);
  return out;
}

Poly operator-(const Poly& a) {
  Poly out = a;
  for (auto& t : out.terms) t.second = -t.second;
  return out;
}

Poly operator*(const Poly& a, const Poly& b) {
  Poly out;
  for (const auto& [ma, ca] : a.terms)
    for (const auto& [mb, cb] : b.terms) add_term(out, mono_mul(ma, mb), ca * cb);
  return out;
}

Poly scale(const Poly& a, const Coeff& c) {
  if (c == 0) return {};
  Poly out = a;
  for (auto& t : out.terms) t.second *= c;
  return out;
}

Poly pow(const Poly& a, int k) {
  Poly out = Poly::constant(1);
  for (int i = 0; i < k; ++i) out = out * a;
  return out;
}

static Poly mul_term(const Poly& p, const Monomial& m, const Coeff& c) {
  Poly out;
  for (const auto& [pm, pc] : p.terms) out.terms.emplace(mono_mul(pm, m), pc * c);
  return out;
}

// ---------------------------------------------------------------------------
// Context

namespace {

bool perfect_square(const mpz_class& z, mpz_class& root) {
  if (z < 0) return false;
  root = sqrt(z);
  return root * root == z;
}

bool rational_sqrt(const Coeff& q, Coeff& out) {
  mpz_class n, d;
  if (!perfect_square(q.get_num(), n) || !perfect_square(q.get_den(), d)) return false;
  out = Coeff(n, d);
  out.canonicalize();
  return true;
}


Expr rename_bound(const Expr& e, const std::string& from, const std::string& to) {
  return rewrite(e, [&](const Expr& x) {
    if (x.op() == Op::Bound && x.node().name == from) return ex::bound(to, x.shape());
    return x;
  });
}

Pred rename_bound(const Pred& p, const std::string& from, const std::string& to) {
  return rewrite(p, [&](const Expr& x) {
    if (x.op() == Op::Bound && x.node().name == from) return ex::bound(to, x.shape());
    return x;
  });
}

}  // namespace

Context::Context() = default;

int Context::lead_sign(const Poly& p) const {
  if (p.zero()) return 0;
  return leading(p)->second > 0 ? 1 : -1;
}

std::string Context::poly_name(const Poly& p) const {
  std::vector<std::string> terms;
  for (const auto& [m, c] : p.terms) {
    std::vector<std::string> fs;
    for (const auto& [v, e] : m) fs.push_back(atoms_[static_cast<std::size_t>(v)].name + "^" + std::to_string(e));
    std::sort(fs.begin(), fs.end());
    std::string t = c.get_str();
    for (const auto& f : fs) t += "*" + f;
    terms.push_back(std::move(t));
  }
  std::sort(terms.begin(), terms.end());
  std::string out;
  for (const auto& t : terms) out += (out.empty() ? "" : "+") + t;
  return out.empty() ? "0" : out;
}

std::string Context::key(const Poly& p) const {
  if (p.zero()) return "0";
  std::string out;
  for (const auto& [m, c] : p.terms) {
    if (!out.empty()) out += "+";
    out += c.get_str();
    for (const auto& [v, e] : m) {
      out += "*x" + std::to_string(v);
      if (e != 1) out += "^" + std::to_string(e);
    }
  }
  return out;
}

double Context::mode_code(const std::string& symbol) {
  auto it = modes_.find(symbol);
  if (it != modes_.end()) return it->second;
  double code = static_cast<double>(modes_.size() + 1);
  modes_.emplace(symbol, code);
  return code;
}

VarId Context::intern(AtomKind kind, std::vector<Poly> args, const std::string& key, const Expr& leaf) {
  auto it = by_key_.find(key);
  if (it != by_key_.end()) return it->second;
  Atom a;
  a.kind = kind;
  a.args = std::move(args);
  a.key = key;
  a.leaf = leaf;
  switch (kind) {
    case AtomKind::Var:
    case AtomKind::Bound: a.cls = 4; break;
    case AtomKind::Param: a.cls = 3; break;
    case AtomKind::Sin: a.cls = 1; break;
    default: a.cls = 0; break;
  }
  static const char* kinds[] = {"var",  "param", "bound", "fresh", "sin",  "cos",  "sqrt", "norm", "inv",
                                "abs",  "sgn",   "min",   "max",   "acos", "atan2", "wrap", "log",  "opaque"};
  if (leaf) {
    a.name = to_string(leaf);
  } else {
    a.name = std::string(kinds[static_cast<int>(kind)]) + "(";
    for (std::size_t i = 0; i < a.args.size(); ++i) a.name += (i ? ";" : "") + poly_name(a.args[i]);
    a.name += kind == AtomKind::Fresh ? key + ")" : ")";
  }
  a.block = (kind == AtomKind::Sqrt || kind == AtomKind::Inv || kind == AtomKind::Abs || kind == AtomKind::Fresh);
  VarId id = static_cast<VarId>(atoms_.size());
  atoms_.push_back(std::move(a));
  atom_exprs_.emplace_back();
  by_key_.emplace(key, id);
  return id;
}

VarId Context::fresh(const std::string& tag) {
  return intern(AtomKind::Fresh, {}, "fresh:" + tag + "#" + std::to_string(atoms_.size()));
}

namespace {

// Classes rank first; within a class the lexicographically smaller name wins.
bool higher(const Atom& a, const Atom& b) {
  if (a.cls != b.cls) return a.cls > b.cls;
  if (a.name != b.name) return a.name < b.name;
  return a.key < b.key;
}

}  // namespace

int Context::compare(const Monomial& a, const Monomial& b) const {
  auto part = [&](const Monomial& m, int block) {
    std::vector<std::pair<const Atom*, int>> out;
    for (const auto& [v, e] : m) {
      const Atom& at = atoms_[static_cast<std::size_t>(v)];
      if (at.block == block) out.push_back({&at, e});
    }
    std::sort(out.begin(), out.end(), [&](const auto& x, const auto& y) { return higher(*x.first, *y.first); });
    return out;
  };
  for (int block : {1, 0}) {
    auto pa = part(a, block), pb = part(b, block);
    int da = 0, db = 0;
    for (const auto& f : pa) da += f.second;
    for (const auto& f : pb) db += f.second;
    if (da != db) return da < db ? -1 : 1;
    std::size_t i = 0, j = 0;
    while (i < pa.size() || j < pb.size()) {
      if (j == pb.size()) return 1;
      if (i == pa.size()) return -1;
      if (pa[i].first != pb[j].first) return higher(*pa[i].first, *pb[j].first) ? 1 : -1;
      if (pa[i].second != pb[j].second) return pa[i].second > pb[j].second ? 1 : -1;
      ++i;
      ++j;
    }
  }
  return 0;
}

std::map<Monomial, Coeff>::const_iterator Context::leading(const Poly& p) const {
  auto best = p.terms.begin();
  for (auto it = std::next(best); it != p.terms.end(); ++it)
    if (compare(it->first, best->first) > 0) best = it;
  return best;
}

void Context::collect_atoms(const Poly& p, std::vector<bool>& seen) const {
  if (seen.size() < atoms_.size()) seen.resize(atoms_.size(), false);
  for (const auto& t : p.terms)
    for (const auto& f : t.first) {
      auto k = static_cast<std::size_t>(f.first);
      if (seen[k]) continue;
      seen[k] = true;
      for (const auto& a : atoms_[k].args) collect_atoms(a, seen);
    }
}

double Context::eval(const Poly& p, const std::vector<double>& values) const {
  double s = 0;
  for (const auto& [m, c] : p.terms) {
    double t = c.get_d();
    for (const auto& [v, e] : m) {
      auto k = static_cast<std::size_t>(v);
      t *= std::pow(k < values.size() ? values[k] : std::nan(""), e);
    }
    s += t;
  }
  return s;
}

Poly Context::trig_reduce(const Poly& p) {
  Poly cur = p;
  for (int guard = 0; guard < 64; ++guard) {
    Poly out;
    bool changed = false;
    for (const auto& [m, c] : cur.terms) {
      auto it = std::find_if(m.begin(), m.end(), [&](const auto& f) {
        return f.second >= 2 && atoms_[static_cast<std::size_t>(f.first)].kind == AtomKind::Sin;
      });
      if (it == m.end()) {
        add_term(out, m, c);
        continue;
      }
      changed = true;
      const Poly arg = atoms_[static_cast<std::size_t>(it->first)].args[0];
      Poly cosp = atom_poly(AtomKind::Cos, {arg}, Expr());
      Monomial rest = mono_div(m, Monomial{{it->first, 2}});
      Poly repl = Poly::constant(1) - cosp * cosp;
      for (const auto& [rm, rc] : repl.terms) add_term(out, mono_mul(rest, rm), c * rc);
    }
    cur = std::move(out);
    if (!changed) break;
  }
  return cur;
}

Poly Context::atom_poly(AtomKind kind, std::vector<Poly> args, const Expr& leaf) {
  auto k = [&](const char* name) {
    std::string s = std::string(name) + "(";
    for (std::size_t i = 0; i < args.size(); ++i) {
      if (i) s += ";";
      s += key(args[i]);
    }
    return s + ")";
  };
  switch (kind) {
    case AtomKind::Sin: {
      Poly& u = args[0];
      if (u.zero()) return {};
      if (lead_sign(u) < 0) {
        u = -u;
        return -Poly::var(intern(kind, args, k("sin"), leaf));
      }
      return Poly::var(intern(kind, args, k("sin"), leaf));
    }
    case AtomKind::Cos: {
      Poly& u = args[0];
      if (u.zero()) return Poly::constant(1);
      if (lead_sign(u) < 0) u = -u;
      return Poly::var(intern(kind, args, k("cos"), leaf));
    }
    case AtomKind::Sqrt: {
      Poly& u = args[0];
      if (u.is_const()) {
        Coeff r;
        if (rational_sqrt(u.const_value(), r)) return Poly::constant(r);
      } else if (u.terms.size() == 1) {
        const auto& [m, c] = *u.terms.begin();
        Coeff r;
        bool even = std::all_of(m.begin(), m.end(), [](const auto& f) { return f.second % 2 == 0; });
        if (even && rational_sqrt(c, r)) {
          Poly out = Poly::constant(r);
          for (const auto& [v, e] : m) {
            int h = e / 2;
            Poly base = Poly::var(v);
            if (h % 2 == 1) base = atom_poly(AtomKind::Abs, {Poly::var(v)}, Expr());
            out = out * pow(h % 2 == 1 ? base * pow(Poly::var(v), h - 1) : Poly::var(v), h % 2 == 1 ? 1 : h);
          }
          return out;
        }
      }
      return Poly::var(intern(kind, args, k("sqrt"), leaf));
    }
    case AtomKind::Abs: {
      Poly& u = args[0];
      if (u.is_const()) return Poly::constant(abs(u.const_value()));
      if (lead_sign(u) < 0) u = -u;
      return Poly::var(intern(kind, args, k("abs"), leaf));
    }
    case AtomKind::Sgn: {
      Poly& u = args[0];
      if (u.is_const()) return Poly::constant(sgn(u.const_value()));
      if (lead_sign(u) < 0) {
        u = -u;
        return -Poly::var(intern(kind, args, k("sgn"), leaf));
      }
      return Poly::var(intern(kind, args, k("sgn"), leaf));
    }
    case AtomKind::Min:
    case AtomKind::Max: {
      bool is_min = kind == AtomKind::Min;
      if (args[0] == args[1]) return args[0];
      if (args[0].is_const() && args[1].is_const()) {
        Coeff a = args[0].const_value(), b = args[1].const_value();
        return Poly::constant(is_min ? std::min(a, b) : std::max(a, b));
      }
      if (poly_name(args[1]) < poly_name(args[0])) std::swap(args[0], args[1]);
      return Poly::var(intern(kind, args, k(is_min ? "min" : "max"), leaf));
    }
    case AtomKind::Inv: {
      Poly& w = args[0];
      if (w.is_const()) {
        if (w.zero()) throw Error(ErrorKind::DivByZero, "division by zero");
        return Poly::constant(1 / w.const_value());
      }
      Coeff c = leading(w)->second;
      w = scale(w, 1 / c);
      return scale(Poly::var(intern(kind, args, k("inv"), leaf)), 1 / c);
    }
    case AtomKind::Acos:
      if (args[0].is_const() && args[0].const_value() == 1) return {};
      return Poly::var(intern(kind, args, k("acos"), leaf));
    case AtomKind::Atan2: return Poly::var(intern(kind, args, k("atan2"), leaf));
    case AtomKind::Wrap: return Poly::var(intern(kind, args, k("wrap"), leaf));
    case AtomKind::Log:
      if (args[0].is_const() && args[0].const_value() == 1) return {};
      return Poly::var(intern(kind, args, k("log"), leaf));
    default: break;
  }
  throw Error(ErrorKind::UnsupportedNode, "unexpected atom kind");
}

std::vector<Poly> Context::convert(const Expr& e) {
  const ExprNode& n = e.node();
  Shape s = n.shape;
  auto one = [](Poly p) { return std::vector<Poly>{std::move(p)}; };
  if (n.sort == Sort::Set) throw Error(ErrorKind::UnsupportedNode, "set-valued term " + to_string(e));
  switch (n.op) {
    case Op::Const: {
      std::vector<Poly> out;
      for (double x : n.value.data) {
        if (!std::isfinite(x)) throw Error(ErrorKind::NonFiniteState, "non-finite constant");
        out.push_back(Poly::constant(Coeff(x)));
      }
      return out;
    }
    case Op::Param: {
      if (s.is_scalar()) return one(Poly::var(intern(AtomKind::Param, {}, "param:" + n.name, e)));
      std::vector<Poly> out;
      for (std::size_t i = 1; i <= s.rows; ++i)
        for (std::size_t j = 1; j <= s.cols; ++j) {
          std::string k = "param:" + n.name + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
          out.push_back(Poly::var(intern(AtomKind::Param, {}, k, ex::index(e, i, j))));
        }
      return out;
    }
    case Op::Var:
    case Op::Bound: {
      AtomKind kind = n.op == Op::Var ? AtomKind::Var : AtomKind::Bound;
      std::string prefix = n.op == Op::Var ? "var:" : "bound:";
      if (n.sort == Sort::Mode || s.is_scalar()) return one(Poly::var(intern(kind, {}, prefix + n.name, e)));
      std::vector<Poly> out;
      for (std::size_t i = 1; i <= s.rows; ++i)
        for (std::size_t j = 1; j <= s.cols; ++j) {
          Expr leaf = ex::index(e, i, j);
          std::string k = prefix + n.name + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
          out.push_back(Poly::var(intern(kind, {}, k, leaf)));
        }
      return out;
    }
    case Op::ModeLit: return one(Poly::constant(Coeff(mode_code(n.name))));
    case Op::Neg: {
      auto a = convert(n.args[0]);
      for (auto& p : a) p = -p;
      return a;
    }
    case Op::Add:
    case Op::Sub: {
      auto a = convert(n.args[0]);
      auto b = convert(n.args[1]);
      for (std::size_t k = 0; k < a.size(); ++k) a[k] = n.op == Op::Add ? a[k] + b[k] : a[k] - b[k];
      return a;
    }
    case Op::Mul: return one(trig_reduce(convert_scalar(n.args[0]) * convert_scalar(n.args[1])));
    case Op::ScalarMul: {
      Poly k = convert_scalar(n.args[0]);
      auto m = convert(n.args[1]);
      for (auto& p : m) p = trig_reduce(k * p);
      return m;
    }
    case Op::Div: {
      Poly d = convert_scalar(n.args[1]);
      auto a = convert(n.args[0]);
      Poly inv = atom_poly(AtomKind::Inv, {d}, Expr());
      for (auto& p : a) p = p * inv;
      return a;
    }
    case Op::Dot: {
      auto a = convert(n.args[0]);
      auto b = convert(n.args[1]);
      Poly sum;
      for (std::size_t k = 0; k < a.size(); ++k) sum = sum + a[k] * b[k];
      return one(trig_reduce(sum));
    }
    case Op::Norm: {
      auto a = convert(n.args[0]);
      Poly sum;
      for (const auto& p : a) sum = sum + p * p;
      return one(atom_poly(AtomKind::Sqrt, {trig_reduce(sum)}, Expr()));
    }
    case Op::Transpose: {
      auto a = convert(n.args[0]);
      Shape in = n.args[0].shape();
      std::vector<Poly> out(a.size());
      for (std::size_t i = 0; i < in.rows; ++i)
        for (std::size_t j = 0; j < in.cols; ++j) out[j * in.rows + i] = a[i * in.cols + j];
      return out;
    }
    case Op::MatLit: {
      std::vector<Poly> out;
      for (const auto& a : n.args) out.push_back(convert_scalar(a));
      return out;
    }
    case Op::Index: {
      auto a = convert(n.args[0]);
      return one(a[(n.row - 1) * n.args[0].shape().cols + (n.col - 1)]);
    }
    case Op::Cond: {
      auto a = convert(n.args[0]);
      auto b = convert(n.args[1]);
      std::string pk = pred_key(n.pred);
      Pred shown = rewrite(n.pred, [&](const Expr& x) { return x; });
      std::vector<Poly> out;
      for (std::size_t k = 0; k < a.size(); ++k) {
        if (a[k] == b[k]) {
          out.push_back(a[k]);
          continue;
        }
        std::string key_s = "cond(" + pk + ";" + key(a[k]) + ";" + key(b[k]) + ")";
        auto it = by_key_.find(key_s);
        if (it != by_key_.end()) {
          out.push_back(Poly::var(it->second));
          continue;
        }
        Expr leaf = ex::cond(shown, to_expr(a[k]), to_expr(b[k]));
        out.push_back(Poly::var(intern(AtomKind::Opaque, {a[k], b[k]}, key_s, leaf)));
      }
      return out;
    }
    case Op::SetMin: {
      std::string canon = "$" + std::to_string(bound_depth_);
      ++bound_depth_;
      Poly body = convert_scalar(rename_bound(n.args[0], n.name, canon));
      --bound_depth_;
      std::string key_s = "minover(" + n.lens->name + ";" + key(body) + ")";
      auto it = by_key_.find(key_s);
      if (it != by_key_.end()) return one(Poly::var(it->second));
      Expr leaf = ex::setmin(n.name, *n.lens, to_expr(convert_scalar(n.args[0])));
      return one(Poly::var(intern(AtomKind::Opaque, {}, key_s, leaf)));
    }
    default: return one(convert_fn(e));
  }
}

Poly Context::convert_fn(const Expr& e) {
  const ExprNode& n = e.node();
  auto arg = [&](std::size_t k) { return convert_scalar(n.args[k]); };
  switch (n.op) {
    case Op::Sin: return atom_poly(AtomKind::Sin, {arg(0)}, Expr());
    case Op::Cos: return atom_poly(AtomKind::Cos, {arg(0)}, Expr());
    case Op::Sqrt: return atom_poly(AtomKind::Sqrt, {arg(0)}, Expr());
    case Op::Abs: return atom_poly(AtomKind::Abs, {arg(0)}, Expr());
    case Op::Sgn: return atom_poly(AtomKind::Sgn, {arg(0)}, Expr());
    case Op::Min: return atom_poly(AtomKind::Min, {arg(0), arg(1)}, Expr());
    case Op::Max: return atom_poly(AtomKind::Max, {arg(0), arg(1)}, Expr());
    case Op::Acos: return atom_poly(AtomKind::Acos, {arg(0)}, Expr());
    case Op::Atan2: return atom_poly(AtomKind::Atan2, {arg(0), arg(1)}, Expr());
    case Op::Wrap: return atom_poly(AtomKind::Wrap, {arg(0)}, Expr());
    case Op::Log: return atom_poly(AtomKind::Log, {arg(0)}, Expr());
    default: break;
  }
  throw Error(ErrorKind::UnsupportedNode, "cannot normalise " + to_string(e));
}

Poly Context::convert_scalar(const Expr& e) {
  auto v = convert(e);
  if (v.size() != 1) throw Error(ErrorKind::ShapeMismatch, "expected a scalar: " + to_string(e));
  return trig_reduce(v[0]);
}

std::string Context::pred_key(const Pred& p) {
  const PredNode& n = p.node();
  switch (n.op) {
    case PredOp::True: return "T";
    case PredOp::False: return "F";
    case PredOp::Cmp: {
      Expr l = n.lhs, r = n.rhs;
      CmpOp op = n.cmp;
      if (op == CmpOp::Ge || op == CmpOp::Gt) {
        std::swap(l, r);
        op = op == CmpOp::Ge ? CmpOp::Le : CmpOp::Lt;
      }
      auto a = convert(l);
      auto b = convert(r);
      std::string out = std::string(to_string(op)) + "[";
      for (std::size_t k = 0; k < a.size(); ++k) {
        Poly d = trig_reduce(a[k] - b[k]);
        if ((op == CmpOp::Eq || op == CmpOp::Ne) && lead_sign(d) < 0) d = -d;
        if (k) out += ",";
        out += key(d);
      }
      return out + "]";
    }
    case PredOp::And: return "(&" + pred_key(n.args[0]) + "," + pred_key(n.args[1]) + ")";
    case PredOp::Or: return "(|" + pred_key(n.args[0]) + "," + pred_key(n.args[1]) + ")";
    case PredOp::Implies: return "(>" + pred_key(n.args[0]) + "," + pred_key(n.args[1]) + ")";
    case PredOp::Not: return "(~" + pred_key(n.args[0]) + ")";
    case PredOp::Exists:
    case PredOp::Forall: {
      std::string canon = "$" + std::to_string(bound_depth_);
      ++bound_depth_;
      std::string body = pred_key(rename_bound(n.args[0], n.bound, canon));
      --bound_depth_;
      return std::string(n.op == PredOp::Exists ? "E{" : "A{") + n.set->name + ":" + body + "}";
    }
  }
  return "?";
}

Expr Context::atom_expr(VarId v) {
  auto k = static_cast<std::size_t>(v);
  if (atom_exprs_[k]) return atom_exprs_[k];
  const Atom& a = atoms_[k];
  std::vector<Poly> args = a.args;  // copy: to_expr may grow atoms_
  auto x = [&](std::size_t i) { return to_expr(args[i]); };
  Expr out;
  switch (a.kind) {
    case AtomKind::Var:
    case AtomKind::Param:
    case AtomKind::Bound:
    case AtomKind::Opaque: out = a.leaf; break;
    case AtomKind::Fresh: out = ex::param("_z" + std::to_string(v), MatVal::scalar(0)); break;
    case AtomKind::Sin: out = ex::sin(x(0)); break;
    case AtomKind::Cos: out = ex::cos(x(0)); break;
    case AtomKind::Sqrt: out = ex::sqrt(x(0)); break;
    case AtomKind::Norm: out = ex::sqrt(x(0)); break;
    case AtomKind::Inv: out = ex::div(ex::constant(1), x(0)); break;
    case AtomKind::Abs: out = ex::abs(x(0)); break;
    case AtomKind::Sgn: out = ex::sgn(x(0)); break;
    case AtomKind::Min: out = ex::min(x(0), x(1)); break;
    case AtomKind::Max: out = ex::max(x(0), x(1)); break;
    case AtomKind::Acos: out = ex::acos(x(0)); break;
    case AtomKind::Atan2: out = ex::atan2(x(0), x(1)); break;
    case AtomKind::Wrap: out = ex::wrap(x(0)); break;
    case AtomKind::Log: out = ex::log(x(0)); break;
  }
  atom_exprs_[k] = out;
  return out;
}

Expr Context::to_expr(const Poly& p) {
  if (p.zero()) return ex::constant(0);
  std::vector<std::pair<Monomial, Coeff>> terms(p.terms.begin(), p.terms.end());
  std::stable_sort(terms.begin(), terms.end(),
                   [&](const auto& a, const auto& b) { return compare(a.first, b.first) > 0; });
  Expr acc;
  for (const auto& [m, c] : terms) {
    Coeff mag = abs(c);
    Expr t;
    Monomial fs = m;
    std::sort(fs.begin(), fs.end(), [&](const auto& a, const auto& b) {
      return higher(atoms_[static_cast<std::size_t>(a.first)], atoms_[static_cast<std::size_t>(b.first)]);
    });
    for (const auto& [v, e] : fs) {
      Expr f = atom_expr(v);
      for (int i = 0; i < e; ++i) t = t ? ex::mul(t, f) : f;
    }
    if (!t)
      t = ex::constant(mag.get_d());
    else if (mag != 1)
      t = ex::mul(ex::constant(mag.get_d()), t);
    if (!acc)
      acc = c < 0 ? ex::neg(t) : t;
    else
      acc = c < 0 ? ex::sub(acc, t) : ex::add(acc, t);
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Groebner bases

Poly reduce(const Context& ctx, const Poly& p, const std::vector<Poly>& basis, std::size_t max_terms) {
  Poly rem = p, out;
  std::vector<std::pair<Monomial, Coeff>> leads;
  leads.reserve(basis.size());
  for (const auto& g : basis) {
    auto it = ctx.leading(g);
    leads.emplace_back(it->first, it->second);
  }
  while (!rem.zero()) {
    if (rem.terms.size() > max_terms) return out + rem;
    auto lt = ctx.leading(rem);
    Monomial m = lt->first;
    Coeff c = lt->second;
    bool hit = false;
    for (std::size_t k = 0; k < basis.size(); ++k) {
      if (!mono_divides(leads[k].first, m)) continue;
      rem = rem - mul_term(basis[k], mono_div(m, leads[k].first), c / leads[k].second);
      hit = true;
      break;
    }
    if (!hit) {
      add_term(out, m, c);
      rem.terms.erase(m);
    }
  }
  return out;
}

namespace {

Poly monic(const Context& ctx, const Poly& p) { return scale(p, 1 / ctx.leading(p)->second); }

}  // namespace

Basis groebner(Context& ctx, std::vector<Poly> gens, const GroebnerLimits& lim) {
  Basis b;
  for (auto& g : gens) {
    if (g.zero()) continue;
    if (g.is_const()) {
      b.inconsistent = true;
      b.polys = {Poly::constant(1)};
      return b;
    }
    Poly r = reduce(ctx, g, b.polys);
    if (r.zero()) continue;
    if (r.is_const()) {
      b.inconsistent = true;
      b.polys = {Poly::constant(1)};
      return b;
    }
    b.polys.push_back(monic(ctx, r));
  }
  using Pair = std::tuple<int, std::size_t, std::size_t>;
  std::priority_queue<Pair, std::vector<Pair>, std::greater<>> pairs;
  auto lead = [&](std::size_t k) { return ctx.leading(b.polys[k])->first; };
  auto push_pairs = [&](std::size_t k) {
    for (std::size_t i = 0; i < k; ++i)
      pairs.emplace(mono_degree(mono_lcm(lead(i), lead(k))), i, k);
  };
  for (std::size_t k = 1; k < b.polys.size(); ++k) push_pairs(k);
  std::size_t processed = 0;
  while (!pairs.empty()) {
    if (processed++ >= lim.max_pairs || b.polys.size() >= lim.max_basis) {
      b.complete = false;
      break;
    }
    auto [deg, i, j] = pairs.top();
    pairs.pop();
    Monomial li = lead(i), lj = lead(j);
    Monomial l = mono_lcm(li, lj);
    if (mono_degree(l) == mono_degree(li) + mono_degree(lj)) continue;  // coprime leads
    Poly s = mul_term(b.polys[i], mono_div(l, li), 1) - mul_term(b.polys[j], mono_div(l, lj), 1);
    Poly r = reduce(ctx, s, b.polys, lim.max_terms);
    if (r.zero()) continue;
    if (r.terms.size() > lim.max_terms) {
      b.complete = false;
      continue;
    }
    if (r.is_const()) {
      b.inconsistent = true;
      b.polys = {Poly::constant(1)};
      return b;
    }
    b.polys.push_back(monic(ctx, r));
    push_pairs(b.polys.size() - 1);
  }
  return b;
}

}  // namespace helmproof::poly
