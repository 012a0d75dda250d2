#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "helmproof/model.hpp"

namespace helmproof {

/// {pre} prog {post}, with the proof hints carried by a triple declaration.
struct HoareTriple {
  std::string name;
  SpacePtr space;
  Pred pre;
  Program prog;
  Pred post;
  std::vector<Pred> cuts;  // differential cuts for the ODE, in order
  Pred invariant;          // dI target for the ODE; null means post
  std::vector<GhostDecl> ghosts;
};

HoareTriple make_triple(const TripleDecl& d);
HoareTriple make_triple(std::string name, SpacePtr space, Pred pre, Program prog, Pred post);

/// Verification condition: a closed formula over the state, valid for all
/// parameter values satisfying `assumptions`.
struct VC {
  std::string id;      // "<triple>#<k>", k from 1 in generation order
  std::string origin;  // rule and position that produced it
  Pred formula;
  std::vector<Pred> assumptions;
  SpacePtr space;
};

// ---------------------------------------------------------------------------
// Rules

/// Collects side obligations emitted while computing preconditions.
class VcSink {
 public:
  VcSink(std::string triple, std::vector<Pred> assumptions, SpacePtr space);

  void emit(const std::string& origin, const Pred& formula);
  /// Fresh discrete lens of the same sort and shape as l.
  Lens fresh_copy(const Lens& l);

  const SpacePtr& space() const { return space_; }
  std::vector<VC> take();

  // ODE hints for the triple being processed
  std::vector<Pred> cuts;
  Pred invariant;

 private:
  std::string triple_;
  std::vector<Pred> assumptions_;
  SpacePtr space_;
  std::vector<VC> vcs_;
  int havocs_ = 0;
};

/// Weakest precondition. Assign substitutes; If and first-match Choice split
/// on the guards; Test is implication; havoc renames to a fresh lens; Star
/// needs its invariant (consecution and exit go to the sink); an ODE yields
/// B => (cuts /\ J) and sends the dI/dC obligations to the sink.
/// Errors: MissingInvariant, NotDifferentiable, ShapeMismatch.
Pred wp(const Program& p, const Pred& post, VcSink& sink);

/// Main VC (pre => wp) first, then the side obligations.
std::vector<VC> vc_gen(const HoareTriple& t, const std::vector<Pred>& assumptions);

/// Differential induction: B => L_F(candidate), plus side conditions.
/// Errors: NotDifferentiable (offending node in the message), InvalidProgram.
std::vector<VC> dI(const Pred& candidate, const Program& ode, const SpacePtr& space,
                   const std::vector<Pred>& assumptions = {}, const std::string& origin = "dI");

/// Differential cut: lemma over <F|B>, target over <F|B /\ lemma>.
std::vector<VC> dC(const Pred& lemma, const Pred& target, const Program& ode, const SpacePtr& space,
                   const std::vector<Pred>& assumptions = {}, const std::string& origin = "dC");

// ---------------------------------------------------------------------------
// Discharge

enum class Verdict { ProvedSymbolic, RefutedWithWitness, Unknown };
const char* to_string(Verdict v) noexcept;

struct DischargeResult {
  Verdict verdict = Verdict::Unknown;
  std::string detail;  // open residue, or the witness
  std::optional<HybridState> witness;
};

/// Sampling bounds: scalars in [lo, hi] unless overridden by lens name,
/// angle lenses in (-pi, pi], sets of 0..max_points points.
struct SampleBox {
  double lo = -10;
  double hi = 10;
  std::map<std::string, std::pair<double, double>> ranges;
  std::size_t max_points = 3;
};

struct DischargeOptions {
  SampleBox box;
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  bool symbolic = true;
  bool sampling = true;
};

/// Stage 1 symbolic closure, stage 2 refutation sampling. Errors: none for
/// states that fail to evaluate (they are skipped).
DischargeResult discharge(const VC& vc, const DischargeOptions& opts = {});

/// Random state in the box with hypothesis equalities of the form
/// lens = term solved forward. Used by stage 2.
HybridState sample_state(const VC& vc, const SampleBox& box, std::mt19937_64& rng);

/// Evaluation with hypotheses read exactly and conclusions with slack tol.
bool holds_loosely(const Pred& p, const HybridState& st, double tol = 1e-6);

/// SMT-LIB 2 script asserting the negation (unsat means valid).
/// Errors: UnsupportedTheory (quantifiers over sets, minover).
std::string export_smtlib(const VC& vc);

// ---------------------------------------------------------------------------
// Sessions

struct TripleReport {
  HoareTriple triple;
  std::string rule;  // "vcgen", "nmods", "compose"
  std::vector<VC> vcs;
  std::vector<DischargeResult> results;
  bool proved = false;  // every VC ProvedSymbolic
};

/// Structural rule: {P} prog {P} when prog does not write P's lenses.
std::optional<TripleReport> nmods_triple(const HoareTriple& t);

/// {P} A {Q} and {Q'} B {R} give {P} A;B {R}; when Q and Q' differ
/// structurally a bridging VC Q => Q' is added.
TripleReport compose(const TripleReport& a, const TripleReport& b, const std::vector<Pred>& assumptions,
                     const DischargeOptions& opts = {});

TripleReport check_triple(const HoareTriple& t, const std::vector<Pred>& assumptions,
                          const DischargeOptions& opts = {});

class ProofSession {
 public:
  explicit ProofSession(std::string model_path = "") : model_path_(std::move(model_path)) {}

  const TripleReport& add(TripleReport r);
  const std::vector<TripleReport>& reports() const { return reports_; }
  const std::string& model_path() const { return model_path_; }

  std::string to_json() const;
  std::string to_text() const;

  /// Stored VC summary read back from JSON (formulas are regenerated from
  /// the model when needed).
  struct Entry {
    std::string triple;
    std::string id;
    std::string origin;
    std::string formula;
    std::string verdict;
  };
  static std::pair<std::string, std::vector<Entry>> read_json(const std::string& text);

 private:
  std::string model_path_;
  std::vector<TripleReport> reports_;
};

}  // namespace helmproof
