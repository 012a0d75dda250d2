#pragma once

// Symbolic closure of verification conditions: a propositional tableau over
// the connectives, leaf-level substitution and case splits on cond guards,
// then ideal membership and sign reasoning on the polynomial layer.

#include <string>
#include <vector>

#include "helmproof/expr.hpp"

namespace helmproof::prover {

struct Limits {
  int max_leaves = 512;
  int max_cond_splits = 8;
  int sign_depth = 2;
};

struct Outcome {
  bool proved = false;
  std::string residue;  // first open goal of the first open leaf, normalised
  int leaves = 0;
};

/// Proves hyps => goal. Never throws on evaluation-type failures; terms it
/// cannot normalise are dropped (hypotheses) or left open (goals).
Outcome prove(const std::vector<Pred>& hyps, const Pred& goal, const Limits& lim = {});

}  // namespace helmproof::prover
