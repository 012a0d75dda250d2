#include "helmproof/sim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace helmproof {

namespace {

using nlohmann::json;

EvalOptions field_opts(const SimConfig& cfg) {
  EvalOptions o;
  o.cond_zero_tol = cfg.zero_tol;
  return o;
}

EvalOptions domain_opts(const SimConfig& cfg) {
  EvalOptions o = field_opts(cfg);
  o.eq_tol = cfg.domain_tol;
  return o;
}

HybridState rk4(const VectorField& F, const HybridState& st, double h, const EvalOptions& opts) {
  std::span<const double> x = st.cont();
  const std::size_t n = x.size();
  auto shifted = [&](const std::vector<double>& k, double c) {
    std::vector<double> y(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) y[i] += c * k[i];
    return st.with_cont(std::move(y));
  };
  std::vector<double> k1 = eval_field(F, st, opts);
  std::vector<double> k2 = eval_field(F, shifted(k1, h / 2), opts);
  std::vector<double> k3 = eval_field(F, shifted(k2, h / 2), opts);
  std::vector<double> k4 = eval_field(F, shifted(k3, h), opts);
  std::vector<double> y(x.begin(), x.end());
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += h * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]) / 6;
    if (!std::isfinite(y[i]))
      throw Error(ErrorKind::NonFiniteState, "non-finite value in " + st.space()->coord_name(i));
  }
  return st.with_cont(std::move(y));
}

bool in_domain(const Pred& domain, const HybridState& st, const EvalOptions& opts) {
  return !domain || eval_pred(domain, st, opts);
}

Error at_cycle(const Error& e, std::size_t cycle, double time) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "cycle %zu (t = %.9g): ", cycle, time);
  return Error(e.kind(), buf + e.message(), e.line(), e.col());
}

// dyn = prefix ; ode
std::pair<Program, Program> split_dyn(const Program& dyn) {
  if (dyn.op() == ProgOp::Ode) return {hp::skip(), dyn};
  if (dyn.op() == ProgOp::Seq) {
    const auto& parts = dyn.node().parts;
    if (!parts.empty() && parts.back().op() == ProgOp::Ode) {
      std::vector<Program> prefix(parts.begin(), parts.end() - 1);
      return {prefix.empty() ? hp::skip() : hp::seq(std::move(prefix)), parts.back()};
    }
  }
  throw Error(ErrorKind::InvalidProgram, "dynamics must have the form assignments ; ode");
}

std::string fmt9(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

json value_json(const Value& v) {
  if (const auto* m = std::get_if<MatVal>(&v)) {
    if (m->rows == 1 && m->cols == 1) return m->data[0];
    json rows = json::array();
    for (std::size_t i = 0; i < m->rows; ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < m->cols; ++j) row.push_back(m->at(i, j));
      rows.push_back(row);
    }
    return rows;
  }
  if (const auto* md = std::get_if<Mode>(&v)) return md->symbol;
  json pts = json::array();
  for (const auto& p : std::get<PointSet>(v)) pts.push_back({p[0], p[1]});
  return pts;
}

Value value_from_json(const json& j, const Lens& l) {
  switch (l.sort) {
    case Sort::Mode: return Mode{j.get<std::string>()};
    case Sort::Set: {
      std::vector<Point> pts;
      for (const auto& p : j) pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      return make_point_set(std::move(pts));
    }
    case Sort::Real: break;
  }
  MatVal m = MatVal::zeros(l.shape);
  if (j.is_number()) {
    if (!l.shape.is_scalar()) throw Error(ErrorKind::ShapeMismatch, "scalar given for " + l.name);
    m.data[0] = j.get<double>();
    return m;
  }
  if (j.size() != m.rows) throw Error(ErrorKind::ShapeMismatch, "row count of " + l.name);
  for (std::size_t i = 0; i < m.rows; ++i) {
    if (j[i].size() != m.cols) throw Error(ErrorKind::ShapeMismatch, "column count of " + l.name);
    for (std::size_t k = 0; k < m.cols; ++k) m.at(i, k) = j[i][k].get<double>();
  }
  return m;
}

}  // namespace

void SimConfig::validate() const {
  if (!(dt > 0) || !(epsilon >= dt) || !(horizon >= 0))
    throw Error(ErrorKind::InvalidProgram, "simulation needs 0 < dt <= epsilon and horizon >= 0");
}

const char* to_string(ExitReason r) noexcept {
  return r == ExitReason::DomainExit ? "domain-exit" : "time-limit";
}

OdeRun integrate_ode(const Program& ode, const HybridState& st, const SimConfig& cfg, std::optional<double> limit) {
  if (ode.op() != ProgOp::Ode) throw Error(ErrorKind::InvalidProgram, "integrate_ode needs an ode node");
  const VectorField& F = ode.node().field;
  const Pred& domain = ode.node().cond;
  const EvalOptions fo = field_opts(cfg), dom = domain_opts(cfg);
  const double cap = limit.value_or(cfg.epsilon);

  OdeRun run{st, ExitReason::TimeLimit, 0, {}};
  if (!in_domain(domain, st, dom)) {
    if (cfg.domain_policy == DomainPolicy::ErrorOnViolation)
      throw Error(ErrorKind::DomainError, "evolution domain violated at the start state");
    run.reason = ExitReason::DomainExit;
    return run;
  }
  while (cap - run.elapsed > cfg.dt * 1e-9) {
    double h = std::min(cfg.dt, cap - run.elapsed);
    HybridState next = rk4(F, run.state, h, fo);
    if (in_domain(domain, next, dom)) {
      run.elapsed += h;
      run.state = next;
      run.path.emplace_back(run.elapsed, run.state);
      continue;
    }
    if (cfg.domain_policy == DomainPolicy::ErrorOnViolation)
      throw Error(ErrorKind::DomainError, "evolution domain violated during integration");
    double lo = 0, hi = h;
    std::optional<HybridState> best;
    while (hi - lo > cfg.dt / 16) {
      double mid = (lo + hi) / 2;
      HybridState probe = rk4(F, run.state, mid, fo);
      if (in_domain(domain, probe, dom)) {
        lo = mid;
        best = std::move(probe);
      } else {
        hi = mid;
      }
    }
    if (best) {
      run.elapsed += lo;
      run.state = *best;
      run.path.emplace_back(run.elapsed, run.state);
    }
    run.reason = ExitReason::DomainExit;
    return run;
  }
  return run;
}

Trajectory run_loop(const Program& ctrl, const Program& dyn, const HybridState& st0, const SimConfig& cfg) {
  cfg.validate();
  auto [prefix, ode] = split_dyn(dyn);
  const EvalOptions fo = field_opts(cfg);
  const SpacePtr& space = st0.space();

  Trajectory tr;
  tr.samples.emplace_back(0.0, st0);
  auto watch_holds = [&](std::size_t k, const HybridState& s) {
    try {
      return eval_pred(cfg.watches[k].second, s, fo);
    } catch (const Error&) {
      return false;
    }
  };
  std::vector<bool> watching;
  for (std::size_t k = 0; k < cfg.watches.size(); ++k) watching.push_back(watch_holds(k, st0));
  auto check_watches = [&](double time, const HybridState& s) {
    for (std::size_t k = 0; k < cfg.watches.size(); ++k) {
      bool now = watch_holds(k, s);
      if (now && !watching[k]) tr.events.push_back({time, "watch", cfg.watches[k].first});
      watching[k] = now;
    }
  };

  std::vector<bool> applied(cfg.schedule.size(), false);
  HybridState st = st0;
  double time = 0;
  while (cfg.horizon - time > cfg.dt * 1e-6) {
    try {
      for (std::size_t k = 0; k < cfg.schedule.size(); ++k)
        if (!applied[k] && cfg.schedule[k].time <= time + cfg.dt * 1e-6) {
          st = st.put(cfg.schedule[k].lens, cfg.schedule[k].value);
          applied[k] = true;
        }
      HybridState before = st;
      st = step_discrete(ctrl, st, cfg.chooser, fo);
      for (const auto& l : space->lenses())
        if (l.sort == Sort::Mode && !l.is_element()) {
          auto a = std::get<Mode>(before.get(l)).symbol, b = std::get<Mode>(st.get(l)).symbol;
          if (a != b) tr.events.push_back({time, "mode", a + "->" + b});
        }
      st = step_discrete(prefix, st, cfg.chooser, fo);
      double cap = std::min(cfg.epsilon, cfg.horizon - time);
      OdeRun run = integrate_ode(ode, st, cfg, cap);
      if (run.elapsed <= 0) throw Error(ErrorKind::NoProgress, "the evolution domain does not admit any time step");
      if (run.reason == ExitReason::DomainExit && run.elapsed < cap - cfg.dt)
        tr.events.push_back({time + run.elapsed, "domain", "early exit"});
      for (const auto& [lt, s] : run.path) {
        tr.samples.emplace_back(time + lt, s);
        check_watches(time + lt, s);
      }
      time += run.elapsed;
      st = run.state;
      ++tr.cycles;
    } catch (const Error& e) {
      throw at_cycle(e, tr.cycles, time);
    }
  }
  return tr;
}

SimConfig config_of(const Scenario& sc) {
  SimConfig cfg;
  cfg.dt = sc.dt;
  cfg.epsilon = sc.epsilon;
  cfg.horizon = sc.horizon;
  cfg.watches = sc.watches;
  cfg.schedule = sc.schedule;
  return cfg;
}

Trajectory run_scenario(const Scenario& sc, const SimConfig& cfg) {
  return run_loop(sc.model.program(sc.ctrl), sc.model.program(sc.dyn), sc.init, cfg);
}

// ---------------------------------------------------------------------------
// Export

std::string trajectory_csv(const Trajectory& tr, const std::vector<Column>& derived) {
  std::ostringstream out;
  if (tr.samples.empty()) return "time\n";
  const SpacePtr& space = tr.samples.front().second.space();
  out << "time";
  for (std::size_t k = 0; k < space->cont_dim(); ++k) out << ',' << space->coord_name(k);
  std::vector<const Lens*> disc;
  for (const auto& l : space->lenses()) {
    if (l.is_continuous() || l.is_element() || l.sort == Sort::Set) continue;
    disc.push_back(&l);
    if (l.sort == Sort::Mode || l.shape.is_scalar()) {
      out << ',' << l.name;
    } else {
      for (std::size_t i = 1; i <= l.shape.rows; ++i)
        for (std::size_t j = 1; j <= l.shape.cols; ++j) out << ',' << l.name << '[' << i << ',' << j << ']';
    }
  }
  for (const auto& c : derived) out << ',' << c.name;
  out << '\n';
  for (const auto& [t, s] : tr.samples) {
    out << fmt9(t);
    for (double x : s.cont()) out << ',' << fmt9(x);
    for (const Lens* l : disc) {
      Value v = s.get(*l);
      if (const auto* md = std::get_if<Mode>(&v)) {
        out << ',' << md->symbol;
      } else {
        for (double x : std::get<MatVal>(v).data) out << ',' << fmt9(x);
      }
    }
    for (const auto& c : derived) {
      out << ',';
      try {
        out << fmt9(eval_scalar(c.expr, s));
      } catch (const Error&) {
      }
    }
    out << '\n';
  }
  return out.str();
}

std::string events_csv(const Trajectory& tr) {
  std::ostringstream out;
  out << "time,tag,detail\n";
  for (const auto& e : tr.events) out << fmt9(e.time) << ',' << e.tag << ',' << e.detail << '\n';
  return out.str();
}

std::string trajectory_jsonl(const Trajectory& tr) {
  std::ostringstream out;
  out << json{{"cycles", tr.cycles}}.dump() << '\n';
  for (const auto& [t, s] : tr.samples) {
    json disc = json::object();
    for (const auto& l : s.space()->lenses())
      if (!l.is_continuous() && !l.is_element()) disc[l.name] = value_json(s.get(l));
    json line;
    line["t"] = t;
    line["cont"] = std::vector<double>(s.cont().begin(), s.cont().end());
    line["disc"] = disc;
    out << line.dump() << '\n';
  }
  for (const auto& e : tr.events)
    out << json{{"event", {{"t", e.time}, {"tag", e.tag}, {"detail", e.detail}}}}.dump() << '\n';
  return out.str();
}

Trajectory read_trajectory_jsonl(const std::string& text, const SpacePtr& space) {
  Trajectory tr;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorKind::ParseError, "malformed trajectory line", lineno);
    try {
      if (j.contains("cycles")) {
        tr.cycles = j["cycles"].get<std::size_t>();
      } else if (j.contains("event")) {
        const json& e = j["event"];
        tr.events.push_back({e.at("t").get<double>(), e.at("tag").get<std::string>(), e.at("detail").get<std::string>()});
      } else {
        auto cont = j.at("cont").get<std::vector<double>>();
        if (cont.size() != space->cont_dim())
          throw Error(ErrorKind::ShapeMismatch, "continuous dimension differs from the state space", lineno);
        HybridState s = HybridState(space).with_cont(std::move(cont));
        for (const auto& [name, v] : j.at("disc").items()) s = s.put(space->lens(name), value_from_json(v, space->lens(name)));
        tr.samples.emplace_back(j.at("t").get<double>(), std::move(s));
      }
    } catch (const json::exception& e) {
      throw Error(ErrorKind::ParseError, e.what(), lineno);
    }
  }
  return tr;
}

void export_trajectory(const Trajectory& tr, const std::string& path, const std::string& format,
                       const std::vector<Column>& derived) {
  auto write = [](const std::string& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + p);
    f << body;
    if (!f) throw Error(ErrorKind::IoError, "cannot write " + p);
  };
  if (format == "csv") {
    write(path, trajectory_csv(tr, derived));
    write(path + ".events.csv", events_csv(tr));
  } else if (format == "jsonl") {
    write(path, trajectory_jsonl(tr));
  } else {
    throw Error(ErrorKind::IoError, "unknown trajectory format " + format);
  }
}

// ---------------------------------------------------------------------------
// Execution

std::vector<HybridState> execute(const Program& p, const HybridState& st, const SimConfig& cfg, std::size_t unroll) {
  const EvalOptions fo = field_opts(cfg);
  const ProgNode& n = p.node();
  switch (p.op()) {
    case ProgOp::Skip: return {st};
    case ProgOp::Assign:
    case ProgOp::NonDetAssign: return {step_discrete(p, st, cfg.chooser, fo)};
    case ProgOp::Test:
      if (eval_pred(n.cond, st, fo)) return {st};
      return {};
    case ProgOp::If:
      return execute(eval_pred(n.cond, st, fo) ? n.parts[0] : n.parts[1], st, cfg, unroll);
    case ProgOp::Choice:
      for (const auto& alt : n.alts)
        if (eval_pred(alt.guard, st, fo)) return execute(alt.body, st, cfg, unroll);
      return {st};
    case ProgOp::Seq: {
      std::vector<HybridState> cur{st};
      for (const auto& part : n.parts) {
        std::vector<HybridState> next;
        for (const auto& s : cur) {
          auto r = execute(part, s, cfg, unroll);
          next.insert(next.end(), r.begin(), r.end());
        }
        cur = std::move(next);
      }
      return cur;
    }
    case ProgOp::Ode: {
      if (!in_domain(n.cond, st, domain_opts(cfg))) return {};
      OdeRun run = integrate_ode(p, st, cfg, cfg.horizon);
      std::vector<HybridState> out{st};
      for (auto& [t, s] : run.path) out.push_back(std::move(s));
      return out;
    }
    case ProgOp::Star: {
      std::vector<HybridState> out{st};
      std::vector<HybridState> frontier{st};
      for (std::size_t k = 0; k < unroll && !frontier.empty(); ++k) {
        std::vector<HybridState> next;
        for (const auto& s : frontier) {
          auto r = execute(n.parts[0], s, cfg, unroll);
          out.insert(out.end(), r.begin(), r.end());
          if (!r.empty()) next.push_back(r.back());
        }
        frontier = std::move(next);
      }
      return out;
    }
  }
  return {st};
}

ValidationReport validate_triple(const HoareTriple& t, const std::vector<HybridState>& pre_states, const SimConfig& cfg,
                                 double tol) {
  ValidationReport rep;
  for (const auto& s0 : pre_states) {
    try {
      HybridState st = s0.space() == t.space ? s0 : s0.rebased(t.space);
      for (const auto& g : t.ghosts) st = st.put(g.lens, eval_value(g.value, st));
      EvalOptions pre_opts;
      pre_opts.eq_tol = 1e-9;
      if (!eval_pred(t.pre, st, pre_opts)) {
        ++rep.skipped;
        continue;
      }
      ++rep.runs;
      for (const auto& out : execute(t.prog, st, cfg)) {
        ++rep.checks;
        if (!holds_loosely(t.post, out, tol)) {
          ++rep.violations;
          if (!rep.counterexample) rep.counterexample = st;
        }
      }
    } catch (const Error& e) {
      if (!is_eval_error(e.kind())) throw;
      ++rep.skipped;
    }
  }
  return rep;
}

}  // namespace helmproof
