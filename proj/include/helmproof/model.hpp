#pragma once

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "helmproof/hprog.hpp"

namespace helmproof {

using ConstOverrides = std::map<std::string, MatVal>;

/// Snapshot variable for a triple: a fresh discrete lens bound to the value
/// of `value` in the pre-state.
struct GhostDecl {
  Lens lens;
  Expr value;
};

struct TripleDecl {
  std::string name;
  SpacePtr space;  // model space plus ghost slots
  Pred pre;
  Program prog;
  Pred post;
  std::vector<Pred> cuts;  // differential cuts, in order
  Pred invariant;          // dI target for an ODE (defaults to post)
  std::vector<GhostDecl> ghosts;
  int line = 0;
};

/// A parsed model file: state space, constants, assumptions and named
/// expressions, predicates, programs and triples (in declaration order).
struct Model {
  SpacePtr space;
  std::vector<std::pair<std::string, MatVal>> consts;
  std::vector<Pred> assumptions;
  std::vector<std::pair<std::string, Expr>> exprs;
  std::vector<std::pair<std::string, Pred>> preds;
  std::vector<std::pair<std::string, Program>> programs;
  std::vector<TripleDecl> triples;
  std::string origin;

  /// Errors: UnknownProgram.
  const Program& program(const std::string& name) const;
  /// Errors: UnknownLens.
  const Pred& pred(const std::string& name) const;
  const Expr& expr(const std::string& name) const;
  const TripleDecl& triple(const std::string& name) const;
  const MatVal& constant(const std::string& name) const;
  Expr param(const std::string& name) const;
  const Lens& lens(const std::string& name) const { return space->lens(name); }
  bool has_program(const std::string& name) const;

  /// A model with only a state space (for ad-hoc parsing).
  static Model from_space(SpacePtr sp);
};

/// Errors: ParseError, RaggedRows, ShapeMismatch, UnknownLens, DuplicateName,
/// InvalidProgram, IndexOutOfRange (all located).
Model parse_model(std::string_view text, const ConstOverrides& overrides = {}, const std::string& origin = "");
/// Errors: IoError plus parse errors.
Model load_model(const std::string& path, const ConstOverrides& overrides = {});

Expr parse_expr(std::string_view text, const Model& ctx);
Pred parse_pred(std::string_view text, const Model& ctx);
Program parse_program(std::string_view text, const Model& ctx);
/// Matrix literal "[[a, b], [c, d]]" or "[a, b]"; entries are expressions
/// over ctx (constants only when ctx is null). Errors: RaggedRows, ParseError.
Expr parse_matrix(std::string_view text, const Model* ctx = nullptr);

// ---------------------------------------------------------------------------
// Scenario files

/// Timed discrete write applied by the simulator before the control step of
/// the first cycle starting at or after `time`.
struct ScheduledWrite {
  double time = 0;
  Lens lens;
  Value value;
};

struct Scenario {
  std::string name;
  std::string model_path;
  Model model;
  ConstOverrides overrides;
  std::string ctrl = "Ctrl";
  std::string dyn = "Dyn";
  HybridState init{std::make_shared<StateSpace>()};
  double horizon = 35;
  double dt = 0.01;
  double epsilon = 0.1;
  std::vector<std::pair<std::string, Expr>> columns;  // derived CSV columns
  std::vector<std::pair<std::string, Pred>> watches;  // event predicates
  std::vector<ScheduledWrite> schedule;
};

/// Model paths are resolved relative to base_dir. `extra` overrides take
/// precedence over the scenario's own constant settings.
Scenario parse_scenario(std::string_view text, const std::string& base_dir, const ConstOverrides& extra = {});
Scenario load_scenario(const std::string& path, const ConstOverrides& extra = {});

std::string read_file(const std::string& path);

}  // namespace helmproof
