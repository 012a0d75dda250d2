#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "helmproof/deriv.hpp"

namespace helmproof {

enum class ProgOp { Skip, Assign, NonDetAssign, Seq, If, Choice, Ode, Star, Test };

struct ProgNode;

class Program {
 public:
  Program() = default;
  explicit Program(std::shared_ptr<const ProgNode> n) : n_(std::move(n)) {}
  explicit operator bool() const noexcept { return static_cast<bool>(n_); }
  const ProgNode& node() const { return *n_; }
  ProgOp op() const;

 private:
  std::shared_ptr<const ProgNode> n_;
};

struct GuardedAlt {
  Pred guard;
  Program body;
};

struct ProgNode {
  ProgOp op = ProgOp::Skip;
  std::optional<Lens> target;    // Assign, NonDetAssign
  Expr value;                    // Assign
  Pred cond;                     // If guard, Test, Ode domain, Star invariant (may be null)
  std::vector<Program> parts;    // Seq parts; If then/else; Star body
  std::vector<GuardedAlt> alts;  // Choice
  VectorField field;             // Ode
};

namespace hp {

Program skip();
/// Errors: ShapeMismatch.
Program assign(const Lens& l, const Expr& e);
Program havoc(const Lens& l);
Program seq(const Program& a, const Program& b);
Program seq(std::vector<Program> ps);
Program ite(const Pred& c, const Program& then_p, const Program& else_p = skip());
Program choice(std::vector<GuardedAlt> alts);
Program ode(VectorField F, const Pred& domain);
Program star(const Program& body, const Pred& invariant = Pred());
Program test(const Pred& p);

}  // namespace hp

std::string to_string(const Program& p);

/// Resolves x := *. Receives the target lens and the current state.
using Chooser = std::function<Value(const Lens&, const HybridState&)>;

/// Keeps the current value (x := * acts as skip).
Chooser keep_chooser();
/// Draws reals uniformly from [lo, hi] per component and modes uniformly,
/// from a seeded generator. Sets keep their value.
Chooser random_chooser(std::uint64_t seed, double lo = -10, double hi = 10);
/// Replays scripted values per lens name in order, then keeps the value.
Chooser scripted_chooser(std::map<std::string, std::vector<Value>> script);

/// Big-step semantics of the discrete fragment. Choice takes the first true
/// guard, otherwise skips. Errors: TestFailed, InvalidProgram (Ode/Star),
/// evaluation errors.
HybridState step_discrete(const Program& p, const HybridState& st, const Chooser& chooser = keep_chooser(),
                          const EvalOptions& opts = {});

struct ModSet {
  std::set<std::string> lenses;
  bool contains(const std::string& name) const { return lenses.count(name) != 0; }
};

/// Over-approximation of written variables (root names).
ModSet mods(const Program& p);
/// True iff p writes none of `vars`.
bool nmods(const Program& p, const std::vector<std::string>& vars);
/// True iff pred reads nothing p may write.
bool nmods_invariance(const Program& p, const Pred& pred);

/// Visits every node of p in pre-order.
void for_each_node(const Program& p, const std::function<void(const Program&)>& f);

}  // namespace helmproof
