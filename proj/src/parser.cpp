#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "helmproof/model.hpp"

namespace helmproof {

// ---------------------------------------------------------------------------
// Model lookups

namespace {

template <class T>
const T* lookup(const std::vector<std::pair<std::string, T>>& v, const std::string& name) {
  for (const auto& [k, x] : v)
    if (k == name) return &x;
  return nullptr;
}

}  // namespace

const Program& Model::program(const std::string& name) const {
  if (const auto* p = lookup(programs, name)) return *p;
  throw Error(ErrorKind::UnknownProgram, "no program named '" + name + "'");
}

bool Model::has_program(const std::string& name) const { return lookup(programs, name) != nullptr; }

const Pred& Model::pred(const std::string& name) const {
  if (const auto* p = lookup(preds, name)) return *p;
  throw Error(ErrorKind::UnknownLens, "no predicate named '" + name + "'");
}

const Expr& Model::expr(const std::string& name) const {
  if (const auto* p = lookup(exprs, name)) return *p;
  throw Error(ErrorKind::UnknownLens, "no expression named '" + name + "'");
}

const TripleDecl& Model::triple(const std::string& name) const {
  for (const auto& t : triples)
    if (t.name == name) return t;
  throw Error(ErrorKind::UnknownProgram, "no triple named '" + name + "'");
}

const MatVal& Model::constant(const std::string& name) const {
  if (const auto* p = lookup(consts, name)) return *p;
  throw Error(ErrorKind::UnknownLens, "no constant named '" + name + "'");
}

Expr Model::param(const std::string& name) const { return ex::param(name, constant(name)); }

Model Model::from_space(SpacePtr sp) {
  Model m;
  m.space = std::move(sp);
  return m;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// Lexer

namespace {

enum class Tok { Ident, Number, String, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double num = 0;
  int line = 1, col = 1;
};

std::vector<Token> lex(std::string_view src) {
  static const char* multi[] = {":=", "->", "[]", "/\\", "\\/", "=>", "<=", ">=", "!=", "=="};
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#' || (c == '/' && i + 1 < src.size() && src[i + 1] == '/')) {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.col = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) ||
               (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src.substr(i, j - i));
      t.num = std::stod(t.text);
      advance(j - i);
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != '"') throw Error(ErrorKind::ParseError, "unterminated string", line, col);
      t.kind = Tok::String;
      t.text = std::string(src.substr(i + 1, j - i - 1));
      advance(j - i + 1);
    } else {
      t.kind = Tok::Punct;
      for (const char* m : multi) {
        std::size_t n = std::char_traits<char>::length(m);
        if (src.substr(i, n) == m) {
          t.text = m;
          break;
        }
      }
      if (t.text.empty()) {
        static const std::string singles = "+-*/^()[]{},;:=<>~?'|.";
        if (singles.find(c) == std::string::npos)
          throw Error(ErrorKind::ParseError, std::string("unexpected character '") + c + "'", line, col);
        t.text = std::string(1, c);
      }
      if (t.text == "==") t.text = "=";
      advance(t.text.size() == 1 && c != '=' ? 1 : std::max<std::size_t>(t.text.size(), 1));
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.col = col;
  out.push_back(end);
  return out;
}

const std::set<std::string>& keywords() {
  static const std::set<std::string> k = {
      "state", "cont",  "disc",   "real", "angle", "mode",      "set",   "const", "assume", "expr",  "pred",
      "prog",  "triple", "pre",   "post", "cut",   "invariant", "ghost", "skip",  "if",     "then",  "else",
      "fi",    "ode",    "star",  "inv",  "true",  "false",     "exists", "forall", "in",   "scenario", "model",
      "init",  "horizon", "dt",   "epsilon", "column", "watch", "at",   "ctrl",  "dyn"};
  return k;
}

const std::map<std::string, int>& functions() {
  static const std::map<std::string, int> f = {
      {"sin", 1},  {"cos", 1},  {"acos", 1}, {"sqrt", 1},      {"log", 1},   {"sgn", 1},   {"abs", 1},
      {"wrap", 1}, {"norm", 1}, {"ang", 1},  {"transpose", 1}, {"min", 2},   {"max", 2},   {"atan2", 2},
      {"dot", 2},  {"cond", 3}, {"minover", 2}, {"old", 1}};
  return f;
}

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  Parser(std::string_view text, Model& model) : toks_(lex(text)), m_(model) {
    if (m_.space) space_ = m_.space;
    collect_modes();
  }

  // Entry points ----------------------------------------------------------

  void model_file(const ConstOverrides& overrides) {
    overrides_ = &overrides;
    if (at_end()) fail(ErrorKind::ParseError, "empty model", peek());
    while (!at_end()) top_item();
    if (!m_.space) m_.space = register_space({});
  }

  Expr expr_only() {
    Expr e = expr();
    expect_end();
    return e;
  }

  Pred pred_only() {
    Pred p = pred();
    expect_end();
    return p;
  }

  Program prog_only() {
    Program p = prog();
    expect_end();
    return p;
  }

  Expr matrix_only() {
    const Token& t = peek();
    if (!is_punct("[")) fail(ErrorKind::ParseError, "matrix literal must start with '['", t);
    Expr e = primary();
    expect_end();
    return e;
  }

  void scenario_file(Scenario& sc, bool header_only, const std::string& base_dir, const ConstOverrides& extra);

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  Model& m_;
  SpacePtr space_;
  std::vector<std::pair<std::string, Shape>> bound_;
  std::set<std::string> modes_;
  const ConstOverrides* overrides_ = nullptr;
  TripleDecl* triple_ = nullptr;

  // Token helpers ---------------------------------------------------------

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at_end() const { return peek().kind == Tok::End; }
  const Token& next() {
    const Token& t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool is_punct(const char* p, std::size_t k = 0) const {
    return peek(k).kind == Tok::Punct && peek(k).text == p;
  }
  bool is_word(const char* w, std::size_t k = 0) const { return peek(k).kind == Tok::Ident && peek(k).text == w; }
  bool accept(const char* p) {
    if (is_punct(p)) {
      next();
      return true;
    }
    return false;
  }
  bool accept_word(const char* w) {
    if (is_word(w)) {
      next();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(ErrorKind k, const std::string& msg, const Token& at) const {
    throw Error(k, msg, at.line, at.col);
  }

  std::string describe(const Token& t) const {
    if (t.kind == Tok::End) return "end of input";
    return "'" + t.text + "'";
  }

  void expect(const char* p) {
    if (!accept(p)) fail(ErrorKind::ParseError, std::string("expected '") + p + "' but found " + describe(peek()), peek());
  }
  void expect_word(const char* w) {
    if (!accept_word(w))
      fail(ErrorKind::ParseError, std::string("expected '") + w + "' but found " + describe(peek()), peek());
  }
  void expect_end() {
    if (!at_end()) fail(ErrorKind::ParseError, "unexpected " + describe(peek()), peek());
  }
  const Token& ident() {
    if (peek().kind != Tok::Ident) fail(ErrorKind::ParseError, "expected a name but found " + describe(peek()), peek());
    return next();
  }
  std::size_t integer() {
    const Token& t = peek();
    if (t.kind != Tok::Number || t.num != std::floor(t.num) || t.num < 0)
      fail(ErrorKind::ParseError, "expected a non-negative integer but found " + describe(t), t);
    next();
    return static_cast<std::size_t>(t.num);
  }

  // Name handling ---------------------------------------------------------

  void collect_modes() {
    if (!space_) return;
    for (const auto& l : space_->lenses())
      for (const auto& s : l.modes) modes_.insert(s);
  }

  bool name_taken(const std::string& n) const {
    if (space_ && space_->find(n)) return true;
    return lookup(m_.consts, n) || lookup(m_.exprs, n) || lookup(m_.preds, n) || lookup(m_.programs, n) ||
           modes_.count(n) ||
           std::any_of(m_.triples.begin(), m_.triples.end(), [&](const TripleDecl& t) { return t.name == n; });
  }

  void fresh_name(const Token& t) {
    if (keywords().count(t.text) || functions().count(t.text) || t.text == "pi")
      fail(ErrorKind::ParseError, "'" + t.text + "' is reserved", t);
    if (name_taken(t.text)) fail(ErrorKind::DuplicateName, "'" + t.text + "' is already defined", t);
  }

  const Lens& need_space_lens(const Token& t) {
    if (!space_) fail(ErrorKind::UnknownLens, "no state declared before use of '" + t.text + "'", t);
    const Lens* l = space_->find(t.text);
    if (!l) fail(ErrorKind::UnknownLens, "unknown variable '" + t.text + "'", t);
    return *l;
  }

  // Expressions -------------------------------------------------------------

  Expr located(const Token& at, const std::function<Expr()>& f) {
    try {
      return f();
    } catch (const Error& e) {
      if (e.line() > 0) throw;
      throw Error(e.kind(), e.message(), at.line, at.col);
    }
  }

  Expr expr() {
    Expr lhs = term();
    while (is_punct("+") || is_punct("-")) {
      const Token& op = next();
      Expr rhs = term();
      lhs = located(op, [&] { return op.text == "+" ? ex::add(lhs, rhs) : ex::sub(lhs, rhs); });
    }
    return lhs;
  }

  Expr term() {
    Expr lhs = unary();
    while (is_punct("*") || is_punct("/")) {
      const Token& op = next();
      Expr rhs = unary();
      lhs = located(op, [&] { return op.text == "*" ? ex::mul(lhs, rhs) : ex::div(lhs, rhs); });
    }
    return lhs;
  }

  Expr unary() {
    if (is_punct("-")) {
      const Token& op = next();
      Expr a = unary();
      if (a.op() == Op::Const) {
        MatVal v = a.node().value;
        for (auto& x : v.data) x = -x;
        return ex::constant(v);
      }
      return located(op, [&] { return ex::neg(a); });
    }
    if (is_punct("+")) {
      next();
      return unary();
    }
    return power();
  }

  Expr power() {
    Expr base = postfix();
    if (is_punct("^")) {
      const Token& op = next();
      std::size_t n = integer();
      if (n == 0) return ex::constant(1);
      return located(op, [&] {
        Expr out = base;
        for (std::size_t k = 1; k < n; ++k) out = ex::mul(out, base);
        return out;
      });
    }
    return base;
  }

  Expr postfix() {
    Expr e = primary();
    while (is_punct("[")) {
      const Token& open = next();
      std::size_t i = integer(), j = 0;
      bool two = accept(",");
      if (two) j = integer();
      expect("]");
      e = located(open, [&] {
        if (two) return ex::index(e, i, j);
        Shape s = e.shape();
        if (s.rows == 1) return ex::index(e, 1, i);
        if (s.cols == 1) return ex::index(e, i, 1);
        throw Error(ErrorKind::IndexOutOfRange, "single index into a " + to_string(s) + " matrix");
      });
    }
    return e;
  }

  bool starts_atom() const {
    const Token& t = peek();
    return t.kind == Tok::Ident || t.kind == Tok::Number || is_punct("(") || is_punct("[");
  }

  Expr primary() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      next();
      return ex::constant(t.num);
    }
    if (accept("(")) {
      Expr e = expr();
      expect(")");
      return e;
    }
    if (is_punct("[")) return matrix();
    if (is_punct("[]")) fail(ErrorKind::ParseError, "empty matrix literal", t);
    if (t.kind != Tok::Ident) fail(ErrorKind::ParseError, "expected an expression but found " + describe(t), t);
    next();
    const std::string& name = t.text;
    for (auto it = bound_.rbegin(); it != bound_.rend(); ++it)
      if (it->first == name) return ex::bound(name, it->second);
    if (auto f = functions().find(name); f != functions().end()) return call(t, f->second);
    if (space_)
      if (const Lens* l = space_->find(name)) return ex::var(*l);
    if (const auto* c = lookup(m_.consts, name)) return ex::param(name, *c);
    if (const auto* e = lookup(m_.exprs, name)) return *e;
    if (modes_.count(name)) return ex::mode(name);
    if (name == "pi") return ex::constant(std::numbers::pi);
    fail(ErrorKind::UnknownLens, "unknown name '" + name + "'", t);
  }

  Expr matrix() {
    const Token& open = next();  // '['
    if (is_punct("[")) {
      std::vector<std::vector<Expr>> rows;
      std::vector<Token> row_tok;
      do {
        row_tok.push_back(peek());
        expect("[");
        std::vector<Expr> row;
        do row.push_back(expr());
        while (accept(","));
        expect("]");
        rows.push_back(std::move(row));
      } while (accept(","));
      expect("]");
      std::size_t cols = rows[0].size();
      std::vector<Expr> cells;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != cols)
          fail(ErrorKind::RaggedRows,
               "row " + std::to_string(r + 1) + " has " + std::to_string(rows[r].size()) + " entries, expected " +
                   std::to_string(cols),
               row_tok[r]);
        for (auto& c : rows[r]) cells.push_back(c);
      }
      return located(open, [&] { return ex::matlit(rows.size(), cols, cells); });
    }
    std::vector<Expr> cells;
    do cells.push_back(expr());
    while (accept(","));
    expect("]");
    return located(open, [&] { return ex::row(cells); });
  }

  Expr call(const Token& fn, int arity) {
    const std::string& f = fn.text;
    if (f == "cond") {
      expect("(");
      Pred c = pred();
      expect(",");
      Expr a = expr();
      expect(",");
      Expr b = expr();
      expect(")");
      return located(fn, [&] { return ex::cond(c, a, b); });
    }
    if (f == "minover") {
      expect("(");
      const Token& b = ident();
      expect_word("in");
      const Token& set_tok = ident();
      const Lens& set = need_space_lens(set_tok);
      expect(",");
      bound_.emplace_back(b.text, Shape{1, 2});
      Expr body = expr();
      bound_.pop_back();
      expect(")");
      return located(fn, [&] { return ex::setmin(b.text, set, body); });
    }
    if (f == "old") return old_ref(fn);
    std::vector<Expr> args;
    if (accept("(")) {
      do args.push_back(expr());
      while (accept(","));
      expect(")");
    } else if (arity == 1 && starts_atom()) {
      args.push_back(postfix());
    } else {
      fail(ErrorKind::ParseError, "expected arguments for '" + f + "'", peek());
    }
    if (static_cast<int>(args.size()) != arity)
      fail(ErrorKind::ParseError,
           "'" + f + "' takes " + std::to_string(arity) + " argument(s), got " + std::to_string(args.size()), fn);
    return located(fn, [&]() -> Expr {
      if (f == "sin") return ex::sin(args[0]);
      if (f == "cos") return ex::cos(args[0]);
      if (f == "acos") return ex::acos(args[0]);
      if (f == "sqrt") return ex::sqrt(args[0]);
      if (f == "log") return ex::log(args[0]);
      if (f == "sgn") return ex::sgn(args[0]);
      if (f == "abs") return ex::abs(args[0]);
      if (f == "wrap") return ex::wrap(args[0]);
      if (f == "norm") return ex::norm(args[0]);
      if (f == "ang") return ex::ang(args[0]);
      if (f == "transpose") return ex::transpose(args[0]);
      if (f == "min") return ex::min(args[0], args[1]);
      if (f == "max") return ex::max(args[0], args[1]);
      if (f == "atan2") return ex::atan2(args[0], args[1]);
      return ex::dot(args[0], args[1]);
    });
  }

  Expr old_ref(const Token& fn) {
    if (!triple_) fail(ErrorKind::ParseError, "old(...) is only allowed inside a triple", fn);
    expect("(");
    const Token& v = ident();
    const Lens& l = need_space_lens(v);
    expect(")");
    std::string gname = "old_" + l.name;
    if (const Lens* g = space_->find(gname)) return ex::var(*g);
    return ex::var(add_ghost(gname, ex::var(l), v));
  }

  Lens add_ghost(const std::string& name, const Expr& value, const Token& at) {
    if (value.sort() != Sort::Real) fail(ErrorKind::ShapeMismatch, "ghost values must be real", at);
    if (space_->find(name)) fail(ErrorKind::DuplicateName, "'" + name + "' is already defined", at);
    LensDecl d{name, LensKind::Discrete, Sort::Real, value.shape()};
    space_ = space_->extended({d});
    triple_->space = space_;
    Lens g = space_->lens(name);
    triple_->ghosts.push_back({g, value});
    return g;
  }

  // Predicates ------------------------------------------------------------

  Pred pred() {
    Pred lhs = disjunction();
    if (accept("=>")) {
      Pred rhs = pred();
      return pr::implies(lhs, rhs);
    }
    return lhs;
  }

  Pred disjunction() {
    Pred lhs = conjunction();
    while (accept("\\/")) lhs = pr::disj(lhs, conjunction());
    return lhs;
  }

  Pred conjunction() {
    Pred lhs = negation();
    while (accept("/\\")) lhs = pr::conj(lhs, negation());
    return lhs;
  }

  Pred negation() {
    if (accept("~")) return pr::neg(negation());
    return atom_pred();
  }

  static bool is_cmp(const Token& t) {
    if (t.kind != Tok::Punct) return false;
    return t.text == "=" || t.text == "!=" || t.text == "<" || t.text == "<=" || t.text == ">" || t.text == ">=";
  }

  bool continues_expr() const {
    const Token& t = peek();
    if (is_cmp(t)) return true;
    return t.kind == Tok::Punct && (t.text == "+" || t.text == "-" || t.text == "*" || t.text == "/" ||
                                    t.text == "^" || t.text == "[");
  }

  Pred atom_pred() {
    const Token& t = peek();
    if (accept_word("true")) return pr::truth();
    if (accept_word("false")) return pr::falsity();
    if (is_word("exists") || is_word("forall")) {
      bool ex = next().text == "exists";
      const Token& b = ident();
      expect_word("in");
      const Token& set_tok = ident();
      const Lens& set = need_space_lens(set_tok);
      if (set.sort != Sort::Set) fail(ErrorKind::ShapeMismatch, "'" + set.name + "' is not a set", set_tok);
      expect(".");
      bound_.emplace_back(b.text, Shape{1, 2});
      Pred body = pred();
      bound_.pop_back();
      return ex ? pr::exists(b.text, set, body) : pr::forall(b.text, set, body);
    }
    if (t.kind == Tok::Ident && !continues_expr_after_ident())
      if (const auto* p = lookup(m_.preds, t.text)) {
        next();
        return *p;
      }
    if (is_punct("(")) {
      std::size_t save = pos_;
      auto saved_bound = bound_;
      try {
        next();
        Pred p = pred();
        expect(")");
        if (!continues_expr()) return p;
      } catch (const Error&) {
      }
      pos_ = save;
      bound_ = saved_bound;
    }
    Expr lhs = expr();
    const Token& op = peek();
    if (!is_cmp(op)) fail(ErrorKind::ParseError, "expected a comparison but found " + describe(op), op);
    next();
    Expr rhs = expr();
    CmpOp c = op.text == "=" ? CmpOp::Eq
              : op.text == "!=" ? CmpOp::Ne
              : op.text == "<"  ? CmpOp::Lt
              : op.text == "<=" ? CmpOp::Le
              : op.text == ">"  ? CmpOp::Gt
                                : CmpOp::Ge;
    try {
      return pr::cmp(lhs, c, rhs);
    } catch (const Error& e) {
      throw Error(e.kind(), e.message(), op.line, op.col);
    }
  }

  bool continues_expr_after_ident() const {
    const Token& t = peek(1);
    if (is_cmp(t)) return true;
    return t.kind == Tok::Punct &&
           (t.text == "+" || t.text == "-" || t.text == "*" || t.text == "/" || t.text == "^" || t.text == "[");
  }

  // Programs --------------------------------------------------------------

  bool is_guarded_alt() const {
    int depth = 0;
    for (std::size_t k = pos_; k < toks_.size(); ++k) {
      const Token& t = toks_[k];
      if (t.kind == Tok::End) return false;
      if (t.kind == Tok::Punct) {
        if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
        if (t.text == ")" || t.text == "]" || t.text == "}") {
          if (--depth < 0) return false;
        }
        if (depth == 0 && (t.text == ";" || t.text == "[]")) return false;
        if (depth == 0 && t.text == "->") return true;
      }
      if (t.kind == Tok::Ident && depth == 0 &&
          (t.text == "then" || t.text == "else" || t.text == "fi" || t.text == "if" || t.text == "ode" ||
           t.text == "star" || t.text == "skip"))
        return false;
    }
    return false;
  }

  Program prog() {
    std::vector<GuardedAlt> alts;
    bool guarded = false;
    do {
      if (is_guarded_alt()) {
        guarded = true;
        Pred g = pred();
        expect("->");
        alts.push_back({g, seq()});
      } else {
        const Token& t = peek();
        Program body = seq();
        if (!guarded && !is_punct("[]") && alts.empty()) return body;
        fail(ErrorKind::ParseError, "alternative without a guard", t);
      }
    } while (accept("[]"));
    return hp::choice(std::move(alts));
  }

  bool starts_statement(std::size_t k) const {
    const Token& t = peek(k);
    if (t.kind == Tok::Punct) return t.text == "?" || t.text == "(";
    if (t.kind != Tok::Ident) return false;
    if (t.text == "skip" || t.text == "if" || t.text == "ode" || t.text == "star") return true;
    if (keywords().count(t.text)) return false;
    const Token& n = peek(k + 1);
    if (n.kind == Tok::Punct && (n.text == ":=" || n.text == "[")) return true;
    return lookup(m_.programs, t.text) != nullptr;
  }

  Program seq() {
    std::vector<Program> parts{statement()};
    while (is_punct(";") && starts_statement(1)) {
      next();
      parts.push_back(statement());
    }
    return hp::seq(std::move(parts));
  }

  Program statement() {
    const Token& t = peek();
    if (accept_word("skip")) return hp::skip();
    if (accept("?")) return hp::test(pred());
    if (accept_word("if")) {
      Pred c = pred();
      expect_word("then");
      Program a = prog();
      Program b = hp::skip();
      if (accept_word("else")) b = prog();
      expect_word("fi");
      return hp::ite(c, a, b);
    }
    if (accept_word("ode")) return ode_block();
    if (accept_word("star")) {
      expect("{");
      Program body = prog();
      expect("}");
      Pred inv;
      if (accept_word("inv")) inv = pred();
      return hp::star(body, inv);
    }
    if (accept("(")) {
      Program p = prog();
      expect(")");
      return p;
    }
    if (t.kind != Tok::Ident) fail(ErrorKind::ParseError, "expected a statement but found " + describe(t), t);
    if (const auto* p = lookup(m_.programs, t.text)) {
      if (!(peek(1).kind == Tok::Punct && peek(1).text == ":=")) {
        next();
        return *p;
      }
    }
    next();
    const Lens* target = &need_space_lens(t);
    Lens elem;
    if (is_punct("[")) {
      const Token& open = next();
      std::size_t i = integer(), j = 1;
      if (accept(",")) j = integer();
      else if (target->shape.rows == 1) std::swap(i, j);
      expect("]");
      try {
        elem = element_of(*target, i, j);
      } catch (const Error& e) {
        fail(e.kind(), e.message(), open);
      }
      target = &elem;
    }
    const Token& op = peek();
    expect(":=");
    if (accept("*")) return hp::havoc(*target);
    Expr v = expr();
    try {
      return hp::assign(*target, v);
    } catch (const Error& e) {
      fail(e.kind(), e.message(), op);
    }
  }

  Program ode_block() {
    expect("{");
    VectorField F;
    do {
      const Token& v = ident();
      const Lens& l = need_space_lens(v);
      expect("'");
      expect("=");
      Expr rhs = expr();
      try {
        F.bind(l, rhs);
      } catch (const Error& e) {
        fail(e.kind(), e.message(), v);
      }
    } while (accept(","));
    Pred dom = pr::truth();
    if (accept("|")) dom = pred();
    expect("}");
    return hp::ode(std::move(F), dom);
  }

  // Model items -------------------------------------------------------------

  void top_item() {
    const Token& t = peek();
    if (accept_word("state")) return state_block(t);
    if (accept_word("const")) {
      const Token& n = ident();
      fresh_name(n);
      expect("=");
      Expr e = expr();
      expect(";");
      MatVal v;
      if (auto it = overrides_->find(n.text); it != overrides_->end()) {
        v = it->second;
      } else {
        try {
          v = eval_expr(e, HybridState(space_ ? space_ : register_space({})));
        } catch (const Error& err) {
          fail(err.kind(), "constant '" + n.text + "': " + err.message(), n);
        }
      }
      m_.consts.emplace_back(n.text, v);
      return;
    }
    if (accept_word("assume")) {
      m_.assumptions.push_back(pred());
      expect(";");
      return;
    }
    if (accept_word("expr")) {
      const Token& n = ident();
      fresh_name(n);
      expect("=");
      Expr e = expr();
      expect(";");
      m_.exprs.emplace_back(n.text, e);
      return;
    }
    if (accept_word("pred")) {
      const Token& n = ident();
      fresh_name(n);
      expect("=");
      Pred p = pred();
      expect(";");
      m_.preds.emplace_back(n.text, p);
      return;
    }
    if (accept_word("prog")) {
      const Token& n = ident();
      fresh_name(n);
      expect("=");
      Program p = prog();
      expect(";");
      m_.programs.emplace_back(n.text, p);
      return;
    }
    if (accept_word("triple")) return triple_block();
    fail(ErrorKind::ParseError, "expected a declaration but found " + describe(t), t);
  }

  void state_block(const Token& at) {
    if (space_) fail(ErrorKind::DuplicateName, "state declared twice", at);
    expect("{");
    std::vector<LensDecl> decls;
    std::set<std::string> seen;
    while (!accept("}")) {
      const Token& kt = peek();
      LensKind kind;
      if (accept_word("cont")) kind = LensKind::Continuous;
      else if (accept_word("disc")) kind = LensKind::Discrete;
      else fail(ErrorKind::ParseError, "expected 'cont' or 'disc' but found " + describe(kt), kt);
      std::vector<Token> names;
      do names.push_back(ident());
      while (accept(","));
      expect(":");
      LensDecl d;
      d.kind = kind;
      const Token& ty = peek();
      if (accept_word("real")) {
        d.sort = Sort::Real;
        if (accept("[")) {
          std::size_t r = integer();
          expect(",");
          std::size_t c = integer();
          expect("]");
          d.shape = {r, c};
        }
      } else if (accept_word("angle")) {
        d.angle = true;
      } else if (accept_word("mode")) {
        d.sort = Sort::Mode;
        expect("{");
        do {
          const Token& s = ident();
          if (modes_.count(s.text) || keywords().count(s.text))
            fail(ErrorKind::DuplicateName, "mode symbol '" + s.text + "' already used", s);
          d.modes.push_back(s.text);
          modes_.insert(s.text);
        } while (accept(","));
        expect("}");
      } else if (accept_word("set")) {
        d.sort = Sort::Set;
      } else {
        fail(ErrorKind::ParseError, "expected a type but found " + describe(ty), ty);
      }
      expect(";");
      if (kind == LensKind::Continuous && d.sort != Sort::Real)
        fail(ErrorKind::ShapeMismatch, "continuous variables must be real", kt);
      for (const auto& n : names) {
        if (keywords().count(n.text) || functions().count(n.text) || n.text == "pi")
          fail(ErrorKind::ParseError, "'" + n.text + "' is reserved", n);
        if (!seen.insert(n.text).second || name_taken(n.text))
          fail(ErrorKind::DuplicateName, "variable '" + n.text + "' declared twice", n);
        if (d.sort == Sort::Real && d.shape.size() == 0)
          fail(ErrorKind::ZeroDimension, "variable '" + n.text + "' has an empty shape", n);
        LensDecl one = d;
        one.name = n.text;
        decls.push_back(one);
      }
    }
    space_ = register_space(decls);
    m_.space = space_;
  }

  void triple_block() {
    const Token& n = ident();
    fresh_name(n);
    if (!space_) fail(ErrorKind::UnknownLens, "triple declared before the state", n);
    TripleDecl td;
    td.name = n.text;
    td.space = space_;
    td.line = n.line;
    SpacePtr outer = space_;
    triple_ = &td;
    expect("{");
    while (!accept("}")) {
      const Token& k = peek();
      if (accept_word("ghost")) {
        const Token& g = ident();
        fresh_name(g);
        expect(":=");
        Expr v = expr();
        expect(";");
        add_ghost(g.text, v, g);
      } else if (accept_word("pre")) {
        td.pre = pred();
        expect(";");
      } else if (accept_word("prog")) {
        td.prog = prog();
        expect(";");
      } else if (accept_word("post")) {
        td.post = pred();
        expect(";");
      } else if (accept_word("cut")) {
        td.cuts.push_back(pred());
        expect(";");
      } else if (accept_word("invariant")) {
        td.invariant = pred();
        expect(";");
      } else {
        fail(ErrorKind::ParseError, "expected a triple clause but found " + describe(k), k);
      }
    }
    triple_ = nullptr;
    space_ = outer;
    if (!td.pre || !td.prog || !td.post)
      fail(ErrorKind::ParseError, "triple '" + td.name + "' needs pre, prog and post", n);
    m_.triples.push_back(std::move(td));
  }

 public:
  // Scenario helpers ------------------------------------------------------

  Value scenario_value(const HybridState& st) {
    if (accept("{")) {
      std::vector<Point> pts;
      if (!accept("}")) {
        do {
          const Token& at = peek();
          Expr e = expr();
          if (e.shape() != Shape{1, 2}) fail(ErrorKind::ShapeMismatch, "set elements are 1x2 points", at);
          MatVal v = eval_expr(e, st);
          pts.push_back({v.data[0], v.data[1]});
        } while (accept(","));
        expect("}");
      }
      return make_point_set(std::move(pts));
    }
    const Token& at = peek();
    Expr e = expr();
    try {
      return eval_value(e, st);
    } catch (const Error& err) {
      fail(err.kind(), err.message(), at);
    }
  }

  void skip_statement() {
    int depth = 0;
    while (!at_end()) {
      const Token& t = next();
      if (t.kind != Tok::Punct) continue;
      if (t.text == "(" || t.text == "[" || t.text == "{") ++depth;
      if (t.text == ")" || t.text == "]" || t.text == "}") --depth;
      if (t.text == ";" && depth <= 0) return;
    }
  }

  double number_expr() {
    const Token& at = peek();
    Expr e = expr();
    try {
      return eval_scalar(e, HybridState(space_ ? space_ : register_space({})));
    } catch (const Error& err) {
      fail(err.kind(), err.message(), at);
    }
  }

  friend Scenario parse_scenario(std::string_view, const std::string&, const ConstOverrides&);
};

void Parser::scenario_file(Scenario& sc, bool header_only, const std::string& base_dir, const ConstOverrides& extra) {
  if (at_end()) fail(ErrorKind::ParseError, "empty scenario", peek());
  expect_word("scenario");
  sc.name = ident().text;
  expect("{");
  HybridState st = header_only ? HybridState(register_space({})) : HybridState(m_.space);
  while (!accept("}")) {
    const Token& k = peek();
    if (at_end()) fail(ErrorKind::ParseError, "unterminated scenario block", k);
    if (header_only) {
      if (accept_word("model")) {
        const Token& p = peek();
        if (p.kind != Tok::String) fail(ErrorKind::ParseError, "expected a quoted model path", p);
        next();
        std::filesystem::path mp(p.text);
        sc.model_path = mp.is_absolute() ? mp.string() : (std::filesystem::path(base_dir) / mp).string();
        expect(";");
      } else if (accept_word("set")) {
        const Token& n = ident();
        expect("=");
        const Token& at = peek();
        Expr e = expr();
        expect(";");
        try {
          if (!extra.count(n.text)) sc.overrides[n.text] = eval_expr(e, st);
        } catch (const Error& err) {
          fail(err.kind(), err.message(), at);
        }
      } else {
        skip_statement();
      }
      continue;
    }
    if (accept_word("model") || accept_word("set")) {
      skip_statement();
    } else if (accept_word("ctrl")) {
      sc.ctrl = ident().text;
      m_.program(sc.ctrl);
      expect(";");
    } else if (accept_word("dyn")) {
      sc.dyn = ident().text;
      m_.program(sc.dyn);
      expect(";");
    } else if (accept_word("init")) {
      const Token& n = ident();
      const Lens& l = need_space_lens(n);
      expect(":=");
      Value v = scenario_value(st);
      expect(";");
      try {
        st = st.put(l, v);
      } catch (const Error& err) {
        fail(err.kind(), err.message(), n);
      }
    } else if (accept_word("horizon")) {
      sc.horizon = number_expr();
      expect(";");
    } else if (accept_word("dt")) {
      sc.dt = number_expr();
      expect(";");
    } else if (accept_word("epsilon")) {
      sc.epsilon = number_expr();
      expect(";");
    } else if (accept_word("column")) {
      const Token& n = ident();
      expect("=");
      sc.columns.emplace_back(n.text, expr());
      expect(";");
    } else if (accept_word("watch")) {
      const Token& n = ident();
      expect("=");
      sc.watches.emplace_back(n.text, pred());
      expect(";");
    } else if (accept_word("at")) {
      double t = number_expr();
      expect(":");
      const Token& n = ident();
      const Lens& l = need_space_lens(n);
      expect(":=");
      Value v = scenario_value(st);
      expect(";");
      sc.schedule.push_back({t, l, v});
    } else {
      fail(ErrorKind::ParseError, "expected a scenario clause but found " + describe(k), k);
    }
  }
  expect_end();
  if (!header_only) sc.init = st;
}

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points

Model parse_model(std::string_view text, const ConstOverrides& overrides, const std::string& origin) {
  Model m;
  m.origin = origin;
  Parser p(text, m);
  p.model_file(overrides);
  return m;
}

Model load_model(const std::string& path, const ConstOverrides& overrides) {
  return parse_model(read_file(path), overrides, path);
}

Expr parse_expr(std::string_view text, const Model& ctx) {
  Model m = ctx;
  Parser p(text, m);
  return p.expr_only();
}

Pred parse_pred(std::string_view text, const Model& ctx) {
  Model m = ctx;
  Parser p(text, m);
  return p.pred_only();
}

Program parse_program(std::string_view text, const Model& ctx) {
  Model m = ctx;
  Parser p(text, m);
  return p.prog_only();
}

Expr parse_matrix(std::string_view text, const Model* ctx) {
  Model m = ctx ? *ctx : Model{};
  Parser p(text, m);
  return p.matrix_only();
}

Scenario parse_scenario(std::string_view text, const std::string& base_dir, const ConstOverrides& extra) {
  Scenario sc;
  {
    Model none;
    Parser head(text, none);
    head.scenario_file(sc, true, base_dir, extra);
  }
  if (sc.model_path.empty()) throw Error(ErrorKind::ParseError, "scenario names no model");
  ConstOverrides all = sc.overrides;
  for (const auto& [k, v] : extra) all[k] = v;
  sc.overrides = all;
  sc.model = load_model(sc.model_path, all);
  Parser body(text, sc.model);
  body.scenario_file(sc, false, base_dir, extra);
  return sc;
}

Scenario load_scenario(const std::string& path, const ConstOverrides& extra) {
  std::string text = read_file(path);
  return parse_scenario(text, std::filesystem::path(path).parent_path().string(), extra);
}

}  // namespace helmproof
