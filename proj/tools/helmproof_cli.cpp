// helmproof: parse, simulate and verify hybrid programs.
//
// Exit codes: 0 success, 1 verification failure or model error,
// 2 usage or I/O error, 3 internal error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "helmproof/amv.hpp"
#include "helmproof/proof.hpp"
#include "helmproof/sim.hpp"

using namespace helmproof;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;
constexpr int kInternal = 3;

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::IoError:
    case ErrorKind::UnknownProgram:
    case ErrorKind::UnknownVc: return kUsage;
    default: return kFailed;
  }
}

void report(const Error& e) {
  std::cerr << "error: " << to_string(e.kind());
  if (e.line() > 0) std::cerr << " at " << e.line() << ':' << e.col();
  std::cerr << ": " << e.message() << '\n';
}

ConstOverrides parse_sets(const std::vector<std::string>& sets) {
  ConstOverrides o;
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw CLI::ValidationError("--set", "expected NAME=VALUE, got " + s);
    o[s.substr(0, eq)] = eval_expr(parse_matrix(s.substr(eq + 1)), HybridState(register_space({})));
  }
  return o;
}

std::uint64_t effective_seed(std::uint64_t seed) {
  if (const char* env = std::getenv("HELMPROOF_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw Error(ErrorKind::IoError, std::string("HELMPROOF_SEED is not a number: ") + env);
    }
  }
  return seed;
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + path);
  f << body;
  if (!f) throw Error(ErrorKind::IoError, "cannot write " + path);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '{' || c == '}') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string shape_text(const Lens& l) {
  if (l.sort == Sort::Mode) {
    std::string s = "mode {";
    for (std::size_t k = 0; k < l.modes.size(); ++k) s += (k ? ", " : "") + l.modes[k];
    return s + "}";
  }
  if (l.sort == Sort::Set) return "set";
  if (l.angle) return "angle";
  return l.shape.is_scalar() ? "real" : "real" + to_string(l.shape);
}

// ---------------------------------------------------------------------------
// Verbs

int cmd_parse(const std::string& path, const ConstOverrides& sets) {
  Model m = load_model(path, sets);
  std::cout << "model " << path << '\n';
  std::cout << "variables:\n";
  for (const auto& l : m.space->lenses()) {
    if (l.is_element()) continue;
    std::cout << "  " << (l.is_continuous() ? "cont " : "disc ") << l.name << " : " << shape_text(l) << '\n';
  }
  std::cout << "continuous dimension: " << m.space->cont_dim() << '\n';
  if (!m.consts.empty()) {
    std::cout << "constants:\n";
    for (const auto& [n, v] : m.consts) std::cout << "  " << n << " = " << to_string(Value(v)) << '\n';
  }
  if (!m.assumptions.empty()) std::cout << "assumptions: " << m.assumptions.size() << '\n';
  auto list = [](const char* title, const auto& items) {
    if (items.empty()) return;
    std::cout << title << ':';
    for (const auto& it : items) std::cout << ' ' << it.first;
    std::cout << '\n';
  };
  list("expressions", m.exprs);
  list("predicates", m.preds);
  list("programs", m.programs);
  if (!m.triples.empty()) {
    std::cout << "triples:";
    for (const auto& t : m.triples) std::cout << ' ' << t.name;
    std::cout << '\n';
  }
  return kOk;
}

struct SimulateArgs {
  std::string scenario;
  std::optional<double> dt, epsilon, horizon;
  std::string out;
  std::string format = "csv";
  std::uint64_t seed = 1;
  bool random_choices = false;
};

int cmd_simulate(const SimulateArgs& a, const ConstOverrides& sets) {
  if (!std::filesystem::exists(a.scenario)) throw Error(ErrorKind::IoError, "cannot read " + a.scenario);
  Scenario sc = load_scenario(a.scenario, sets);
  SimConfig cfg = config_of(sc);
  if (a.dt) cfg.dt = *a.dt;
  if (a.epsilon) cfg.epsilon = *a.epsilon;
  if (a.horizon) cfg.horizon = *a.horizon;
  if (cfg.epsilon < cfg.dt) cfg.dt = cfg.epsilon;
  if (a.random_choices) cfg.chooser = random_chooser(effective_seed(a.seed));
  Trajectory tr = run_scenario(sc, cfg);

  std::vector<Column> cols;
  for (const auto& [n, e] : sc.columns) cols.push_back({n, e});
  if (!a.out.empty()) {
    export_trajectory(tr, a.out, a.format, cols);
  } else if (a.format == "jsonl") {
    std::cout << trajectory_jsonl(tr);
  } else {
    std::cout << trajectory_csv(tr, cols);
  }
  std::ostream& log = a.out.empty() ? std::cerr : std::cout;
  log << "simulated " << tr.samples.back().first << " s in " << tr.cycles << " cycles, " << tr.samples.size()
      << " samples\n";
  for (const auto& e : tr.events) log << "  t = " << std::setprecision(6) << e.time << "  " << e.tag << ' ' << e.detail << '\n';
  return kOk;
}

struct CheckArgs {
  std::string model;
  std::vector<std::string> triples;
  std::string invariant;
  std::string program = "Dyn";
  std::size_t samples = 2000;
  std::uint64_t seed = 1;
  std::string report;
  bool no_symbolic = false;
};

HoareTriple adhoc_triple(const Model& m, const std::string& inv, const std::string& program) {
  Pred p = parse_pred(inv, m);
  return make_triple("Invariant", m.space, p, m.program(program), p);
}

int cmd_check(const CheckArgs& a, const ConstOverrides& sets, bool vcs_only) {
  Model m = load_model(a.model, sets);
  std::vector<HoareTriple> todo;
  if (!a.invariant.empty()) todo.push_back(adhoc_triple(m, a.invariant, a.program));
  for (const auto& name : a.triples) {
    bool found = false;
    for (const auto& t : m.triples) found |= t.name == name;
    if (!found) throw Error(ErrorKind::UnknownProgram, "no triple named " + name);
    todo.push_back(make_triple(m.triple(name)));
  }
  if (todo.empty())
    for (const auto& t : m.triples) todo.push_back(make_triple(t));
  if (todo.empty()) throw Error(ErrorKind::UnknownProgram, "the model declares no triples; use --triple or --invariant");

  if (vcs_only) {
    for (const auto& t : todo)
      for (const auto& vc : vc_gen(t, m.assumptions))
        std::cout << vc.id << " [" << vc.origin << "]\n  " << to_string(vc.formula) << '\n';
    return kOk;
  }

  DischargeOptions opts;
  opts.samples = a.samples;
  opts.seed = effective_seed(a.seed);
  opts.symbolic = !a.no_symbolic;
  ProofSession session(a.model);
  bool refuted = false;
  for (const auto& t : todo) {
    const TripleReport& r = session.add(check_triple(t, m.assumptions, opts));
    for (const auto& res : r.results) refuted |= res.verdict == Verdict::RefutedWithWitness;
  }
  std::cout << session.to_text();
  if (!a.report.empty()) write_file(a.report, session.to_json());
  return refuted ? kFailed : kOk;
}

int cmd_nmods(const std::string& model, const std::string& program, const std::string& vars, const ConstOverrides& sets) {
  Model m = load_model(model, sets);
  const Program& p = m.program(program);
  std::vector<std::string> names = split_list(vars);
  for (const auto& n : names) m.lens(n);
  ModSet ms = mods(p);
  bool holds = nmods(p, names);
  std::cout << program << " nmods {";
  for (std::size_t k = 0; k < names.size(); ++k) std::cout << (k ? ", " : "") << names[k];
  std::cout << "}: " << (holds ? "holds" : "fails") << "\nmods(" << program << ") = {";
  bool first = true;
  for (const auto& n : ms.lenses) {
    std::cout << (first ? "" : ", ") << n;
    first = false;
  }
  std::cout << "}\n";
  return holds ? kOk : kFailed;
}

struct ExportArgs {
  std::string model;
  std::string session;
  std::string vc_id;
  std::string out;
};

int cmd_export_smt(const ExportArgs& a, const ConstOverrides& sets) {
  std::string model_path = a.model;
  std::vector<ProofSession::Entry> entries;
  if (!a.session.empty()) {
    auto [path, es] = ProofSession::read_json(read_file(a.session));
    entries = std::move(es);
    if (model_path.empty()) model_path = path;
  }
  if (model_path.empty()) throw Error(ErrorKind::IoError, "export-smt needs a model or a session file");
  Model m = load_model(model_path, sets);

  std::string triple = a.vc_id.substr(0, a.vc_id.find('#'));
  std::optional<VC> found;
  auto search = [&](const HoareTriple& t) {
    for (auto& vc : vc_gen(t, m.assumptions))
      if (vc.id == a.vc_id) found = std::move(vc);
  };
  bool named = false;
  for (const auto& t : m.triples) named |= t.name == triple;
  if (named) search(make_triple(m.triple(triple)));
  if (!found && !a.session.empty()) {
    auto j = nlohmann::json::parse(read_file(a.session));
    for (const auto& t : j.value("triples", nlohmann::json::array())) {
      if (t.value("name", "") != triple || found) continue;
      search(make_triple(triple, m.space, parse_pred(t.value("pre", "true"), m),
                         parse_program(t.value("prog", "skip"), m), parse_pred(t.value("post", "true"), m)));
    }
  }
  if (!found) throw Error(ErrorKind::UnknownVc, "no verification condition " + a.vc_id);
  std::string smt = export_smtlib(*found);
  if (a.out.empty())
    std::cout << smt;
  else
    write_file(a.out, smt);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"helmproof: verification and simulation of hybrid programs"};
  app.require_subcommand(1);
  std::vector<std::string> sets;
  app.add_option("--set", sets, "Override a model constant, NAME=VALUE")->take_all();

  std::string parse_path;
  auto* parse = app.add_subcommand("parse", "Parse a model file and summarise it");
  parse->add_option("model", parse_path, "Model file")->required();

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its trajectory");
  simulate->add_option("scenario", sim.scenario, "Scenario file")->required();
  simulate->add_option("--dt", sim.dt, "Integrator step [s]");
  simulate->add_option("--epsilon", sim.epsilon, "Control period [s]");
  simulate->add_option("--horizon", sim.horizon, "Simulated time [s]");
  simulate->add_option("--out,-o", sim.out, "Output file (stdout when omitted)");
  simulate->add_option("--format", sim.format, "csv or jsonl")->check(CLI::IsMember({"csv", "jsonl"}));
  simulate->add_option("--seed", sim.seed, "Seed for nondeterministic choices");
  simulate->add_flag("--random-choices", sim.random_choices, "Resolve x := * randomly instead of keeping values");

  CheckArgs chk;
  auto* check = app.add_subcommand("check", "Generate and discharge verification conditions");
  check->add_option("model", chk.model, "Model file")->required();
  check->add_option("--triple", chk.triples, "Triple name (repeatable; all when omitted)");
  check->add_option("--invariant", chk.invariant, "Ad-hoc invariant of --program");
  check->add_option("--program", chk.program, "Program for --invariant");
  check->add_option("--samples", chk.samples, "Refutation samples per VC");
  check->add_option("--seed", chk.seed, "Sampling seed");
  check->add_option("--report", chk.report, "Write the proof session as JSON");
  check->add_flag("--no-symbolic", chk.no_symbolic, "Sampling only");

  CheckArgs vca;
  auto* vc = app.add_subcommand("vc", "Print verification conditions without discharging them");
  vc->add_option("model", vca.model, "Model file")->required();
  vc->add_option("--triple", vca.triples, "Triple name (repeatable; all when omitted)");
  vc->add_option("--invariant", vca.invariant, "Ad-hoc invariant of --program");
  vc->add_option("--program", vca.program, "Program for --invariant");

  std::string nm_model, nm_prog, nm_vars;
  auto* nm = app.add_subcommand("nmods", "Check that a program does not modify variables");
  nm->add_option("model", nm_model, "Model file")->required();
  nm->add_option("--program", nm_prog, "Program name")->required();
  nm->add_option("--vars", nm_vars, "Comma-separated variable names")->required();

  ExportArgs ex;
  auto* smt = app.add_subcommand("export-smt", "Write one verification condition as SMT-LIB");
  smt->add_option("model", ex.model, "Model file (defaults to the session's model)");
  smt->add_option("--session", ex.session, "Session file written by check --report");
  smt->add_option("--vc-id", ex.vc_id, "Verification condition id, e.g. Collinearity#2")->required();
  smt->add_option("--out,-o", ex.out, "Output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    ConstOverrides o = parse_sets(sets);
    if (*parse) return cmd_parse(parse_path, o);
    if (*simulate) return cmd_simulate(sim, o);
    if (*check) return cmd_check(chk, o, false);
    if (*vc) return cmd_check(vca, o, true);
    if (*nm) return cmd_nmods(nm_model, nm_prog, nm_vars, o);
    if (*smt) return cmd_export_smt(ex, o);
  } catch (const Error& e) {
    report(e);
    return exit_code(e.kind());
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kUsage;
}
