#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "helmproof/model.hpp"
#include "helmproof/proof.hpp"

namespace helmproof {

enum class DomainPolicy { StopOnViolation, ErrorOnViolation };

struct SimConfig {
  double dt = 0.01;       // integrator step, s
  double epsilon = 0.1;   // control period, s (cap on local time per ODE run)
  double horizon = 35;    // total time, s
  Chooser chooser = keep_chooser();
  DomainPolicy domain_policy = DomainPolicy::StopOnViolation;
  /// cond guards within this distance of zero take the zero branch
  double zero_tol = 1e-9;
  /// relative slack for equalities in evolution domains
  double domain_tol = 1e-6;
  std::vector<std::pair<std::string, Pred>> watches;  // event when a watch becomes true
  std::vector<ScheduledWrite> schedule;

  /// Errors: InvalidProgram unless 0 < dt <= epsilon and 0 <= horizon.
  void validate() const;
};

enum class ExitReason { DomainExit, TimeLimit };
const char* to_string(ExitReason r) noexcept;

struct OdeRun {
  HybridState state;
  ExitReason reason = ExitReason::TimeLimit;
  double elapsed = 0;
  /// States after each accepted step (the start state excluded), with local times.
  std::vector<std::pair<double, HybridState>> path;
};

/// Classical RK4 on the continuous coordinates with discrete slots frozen.
/// A step leaving the domain is bisected to dt/16 and the last in-domain
/// state is kept. `limit` caps local time (defaults to cfg.epsilon).
/// Errors: evaluation errors, NonFiniteState, InvalidProgram (not an ODE),
/// DomainError (start outside the domain under ErrorOnViolation).
OdeRun integrate_ode(const Program& ode, const HybridState& st, const SimConfig& cfg,
                     std::optional<double> limit = std::nullopt);

struct Event {
  double time = 0;
  std::string tag;     // "mode", "domain", "watch"
  std::string detail;  // "MOM->HCM", watch name, ...
  bool operator==(const Event&) const = default;
};

struct Trajectory {
  std::vector<std::pair<double, HybridState>> samples;
  std::vector<Event> events;
  std::size_t cycles = 0;
};

/// (ctrl ; dyn)* until the horizon: scheduled writes, one discrete control
/// step, the discrete prefix of dyn, then its ODE for at most epsilon.
/// A sample per integrator step, an event per mode change and per watch
/// rising edge. Errors: step and integration errors prefixed with the
/// cycle index; NoProgress when a cycle cannot advance time.
Trajectory run_loop(const Program& ctrl, const Program& dyn, const HybridState& st0, const SimConfig& cfg);

/// Config taken from a scenario (dt, epsilon, horizon, watches, schedule).
SimConfig config_of(const Scenario& sc);
Trajectory run_scenario(const Scenario& sc, const SimConfig& cfg);

// ---------------------------------------------------------------------------
// Export

struct Column {
  std::string name;
  Expr expr;  // scalar
};

/// Header: time, continuous coordinates, mode and real scalar discrete
/// slots, derived columns. Numbers with 9 significant digits.
/// Columns whose evaluation fails are left empty.
std::string trajectory_csv(const Trajectory& tr, const std::vector<Column>& derived = {});
std::string events_csv(const Trajectory& tr);
/// One JSON object per line: samples {"t", "cont", "disc"}, then events.
std::string trajectory_jsonl(const Trajectory& tr);
/// Errors: ParseError on malformed lines, ShapeMismatch against the space.
Trajectory read_trajectory_jsonl(const std::string& text, const SpacePtr& space);

/// Writes path (and path + ".events.csv" for csv). Errors: IoError.
void export_trajectory(const Trajectory& tr, const std::string& path, const std::string& format,
                       const std::vector<Column>& derived = {});

// ---------------------------------------------------------------------------
// Execution of whole programs and triples

/// Reachable end states of p from st: ODE nodes contribute every state of
/// the integrated flow, Star unrolls up to `unroll` times, failing tests
/// drop the run. Errors: evaluation errors.
std::vector<HybridState> execute(const Program& p, const HybridState& st, const SimConfig& cfg,
                                 std::size_t unroll = 3);

struct ValidationReport {
  std::size_t runs = 0;
  std::size_t checks = 0;      // post evaluations
  std::size_t violations = 0;
  std::size_t skipped = 0;     // pre false or evaluation failure
  std::optional<HybridState> counterexample;
};

/// Runs t.prog from each state satisfying t.pre (after binding ghosts) and
/// checks t.post at every reachable end state with tolerance tol.
ValidationReport validate_triple(const HoareTriple& t, const std::vector<HybridState>& pre_states,
                                 const SimConfig& cfg, double tol = 1e-6);

}  // namespace helmproof
