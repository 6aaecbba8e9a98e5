#include "blockcheck/engine.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <memory>

#include "blockcheck/ir.hpp"
#include "blockcheck/simulator.hpp"

namespace blockcheck {

namespace {

double now_s() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

std::string app(const std::string & fn, const std::vector<std::string> & args) {
  if (args.empty()) return fn;
  std::string s = "(" + fn;
  for (const auto & a : args) s += " " + a;
  return s + ")";
}

std::string sel_name(uint64_t j) { return "sel@" + std::to_string(j); }
std::string at(const std::string & n, uint64_t j) {
  return smt_symbol(n + "@" + std::to_string(j));
}
std::string at_i(const std::string & n) { return smt_symbol(n + "@i"); }

// One solver session: a subsystem level in one encoding, unrolled step by
// step. next_base / next_ind remember which checks earlier rounds already
// settled so re-invocations with a larger k never repeat a query.
struct Level {
  const SubsystemIR * sub = nullptr;
  unsigned d = 0;  // 1 = objective owner, chain.size() = model root
  bool is_top = false;
  EncMode mode = EncMode::Approx;
  EncodedSystem enc;
  std::unique_ptr<SolverSession> sess;
  uint64_t next_step = 0;
  uint64_t next_base = 0;
  uint64_t next_ind = 1;
  std::optional<uint64_t> base_sat_j;  // below root: init-reachable violation
  bool stuck = false;                  // a check timed out; do not re-burn it
};

struct Alg1Out {
  enum class R { True, False, Maybe } r = R::Maybe;
  uint64_t j = 0;
  std::string reason;
};

class Engine {
 public:
  Engine(const TypedModel & tm, const Property & prop, const CheckerConfig & cfg)
      : cfg_(cfg), tm_(cfg.use_slice ? slice(tm, prop) : tm), prop_(prop),
        ir_(build_ir(tm_, prop_)) {}

  CheckOutcome run() {
    start_ = now_s();
    CheckOutcome out;
    switch (cfg_.engine) {
      case EngineKind::Bmc: out = run_bmc(cfg_.mode); break;
      case EngineKind::Kind: out = run_kind(cfg_.mode); break;
      case EngineKind::Auto: out = run_auto(); break;
    }
    out.property_id = ir_.objective.property_id;
    out.wall_time_s = now_s() - start_;
    for (auto & [m, ch] : chains_)
      for (auto & L : ch) {
        if (!L.sess) continue;
        out.solver_calls += L.sess->checks_issued();
        if (L.is_top) out.root_solver_calls += L.sess->checks_issued();
        out.transcripts.emplace_back(
            (m == EncMode::Exact ? "exact_d" : "approx_d") + std::to_string(L.d),
            L.sess->transcript());
      }
    return out;
  }

 private:
  const CheckerConfig & cfg_;
  TypedModel tm_;
  const Property & prop_;
  IRBuild ir_;
  double start_ = 0;
  std::map<EncMode, std::vector<Level>> chains_;
  bool saw_stub_ = false;
  bool saw_timeout_ = false;

  // Levels from the objective owner (d = 1) up to the model root.
  std::vector<Level> & chain(EncMode m) {
    auto it = chains_.find(m);
    if (it != chains_.end()) return it->second;
    std::vector<Level> ch;
    const auto & op = ir_.objective.owner_path;
    for (size_t n = op.size() + 1; n-- > 0;) {
      std::vector<std::string> p(op.begin(), op.begin() + n);
      const SubsystemIR * sub = ir_.root->find(p);
      if (!sub) throw BlockcheckError("objective scope missing from the IR");
      Level L;
      L.sub = sub;
      L.d = static_cast<unsigned>(ch.size() + 1);
      L.is_top = n == 0;
      L.mode = m;
      L.enc = encode(*sub, ir_.objective, m, tm_.model.bus_types);
      ch.push_back(std::move(L));
    }
    return chains_.emplace(m, std::move(ch)).first->second;
  }

  bool over_budget() const {
    return cfg_.global_budget_s > 0 && now_s() - start_ > cfg_.global_budget_s;
  }

  std::vector<unsigned> schedule() const {
    std::vector<unsigned> ks;
    unsigned cap = std::max(1u, cfg_.max_k);
    unsigned f = std::max(2u, cfg_.k_factor);
    for (unsigned k = 1;;) {
      ks.push_back(std::min(k, cap));
      if (k >= cap) break;
      k = k > cap / f ? cap : k * f;
    }
    return ks;
  }

  // Sessions are created on first use, so a property discharged at a low
  // level never even spawns the outer solvers.
  void ensure_session(Level & L) {
    if (L.sess) return;
    SolverConfig sc;
    sc.argv = cfg_.solver_argv;
    sc.check_timeout_s = cfg_.check_timeout_s;
    bool replay = L.mode == EncMode::Exact &&
                  L.enc.preamble.find("FloatingPoint") != std::string::npos;
    L.sess = std::make_unique<SolverSession>(sc, replay);
    std::string pre = L.enc.preamble;
    while (!pre.empty() && pre.back() == '\n') pre.pop_back();
    L.sess->submit(pre);
    L.sess->submit("(declare-const " + std::string(kGInit) + " Bool)");
    std::vector<std::string> args;
    for (const auto & st : L.enc.states) {
      L.sess->submit("(declare-const " + at_i(st.name) + " " + st.sort.str() + ")");
      args.push_back(at_i(st.name));
    }
    L.sess->submit("(assert (=> " + std::string(kGInit) + " " +
                   app(smt_symbol(L.enc.init_fn), args) + "))");
  }

  // Unroll one more step: fresh constants, the transition instance, and the
  // selector that pins curr_step to this step under check-sat-assuming.
  void extend(Level & L) {
    uint64_t j = L.next_step;
    auto decl = [&](const TransParam & p, const std::string & nm) {
      L.sess->submit("(declare-const " + nm + " " + p.sort.str() + ")");
    };
    std::vector<std::string> args;
    args.push_back(counter_literal(j, L.mode));
    for (const auto & st : L.enc.states)
      args.push_back(j == 0 ? at_i(st.name) : at(st.name, j - 1));
    for (const auto & st : L.enc.states) {
      decl(st, at(st.name, j));
      args.push_back(at(st.name, j));
    }
    for (const auto * grp : {&L.enc.inputs, &L.enc.outputs, &L.enc.skolems})
      for (const auto & p : *grp) {
        decl(p, at(p.name, j));
        args.push_back(at(p.name, j));
      }
    L.sess->submit("(assert " + app(smt_symbol(L.enc.trans_fn), args) + ")");
    L.sess->submit("(declare-const " + sel_name(j) + " Bool)");
    L.sess->submit("(assert (=> " + sel_name(j) + " (= " + kCurrStep + " " +
                   counter_literal(j, L.mode) + ")))");
    L.next_step = j + 1;
  }

  CheckResult base_check(Level & L, uint64_t j) {
    return L.sess->check_sat_assuming(
        {kGInit, sel_name(j), "(not " + std::string(kFlagKind) + ")"});
  }

  CheckResult ind_check(Level & L, uint64_t j) {
    return L.sess->check_sat_assuming({sel_name(j), kFlagKind});
  }

  std::string below_reason(const Level & L) {
    if (L.sub->contains_stub) {
      saw_stub_ = true;
      return "stub-limited";
    }
    return "base case fails below root";
  }

  Alg1Out stuck_out(Level & L, uint64_t j, const std::string & reason) {
    L.stuck = true;
    if (reason == "timeout") saw_timeout_ = true;
    return {Alg1Out::R::Maybe, j, reason};
  }

  // k-induction on one level. Base checks run under the initial-state guard
  // with the hypothesis off; induction checks run with the hypothesis on and
  // no initial-state guard, so the start step is arbitrary.
  Alg1Out kinduction(Level & L, uint64_t k) {
    if (L.stuck) return {Alg1Out::R::Maybe, 0, "timeout"};
    if (L.base_sat_j && !L.is_top)
      return {Alg1Out::R::Maybe, *L.base_sat_j, below_reason(L)};
    ensure_session(L);
    for (uint64_t j = 0; j < k; j++) {
      if (over_budget()) return {Alg1Out::R::Maybe, j, "timeout"};
      while (L.next_step <= j) extend(L);
      if (j > 0 && j >= L.next_ind) {
        auto r = ind_check(L, j);
        if (r.status == CheckStatus::Unknown) return stuck_out(L, j, r.reason);
        L.next_ind = j + 1;
        if (r.unsat()) return {Alg1Out::R::True, j, {}};
      }
      if (j >= L.next_base) {
        auto r = base_check(L, j);
        if (r.status == CheckStatus::Unknown) return stuck_out(L, j, r.reason);
        if (r.sat()) {
          if (L.is_top) return {Alg1Out::R::False, j, {}};
          L.base_sat_j = j;
          return {Alg1Out::R::Maybe, j, below_reason(L)};
        }
        L.next_base = j + 1;
      }
    }
    return {Alg1Out::R::Maybe, k, "max-k"};
  }

  CheckOutcome unknown_outcome(EncMode m) {
    CheckOutcome co;
    co.verdict = Verdict::Unknown;
    co.mode = m;
    co.k = cfg_.max_k;
    co.reason = saw_timeout_ ? "timeout" : saw_stub_ ? "stub-limited" : "max-k";
    return co;
  }

  CheckOutcome run_bmc(EncMode m) {
    Level & top = chain(m).back();
    ensure_session(top);
    for (uint64_t j = 0; j < cfg_.max_k; j++) {
      if (over_budget()) {
        saw_timeout_ = true;
        return unknown_outcome(m);
      }
      while (top.next_step <= j) extend(top);
      if (j < top.next_base) continue;
      auto r = base_check(top, j);
      if (r.status == CheckStatus::Unknown) {
        if (r.reason == "timeout") saw_timeout_ = true;
        CheckOutcome co = unknown_outcome(m);
        co.reason = r.reason;
        return co;
      }
      if (r.sat()) return falsified(top, j, m);
      top.next_base = j + 1;
    }
    return unknown_outcome(m);
  }

  CheckOutcome run_kind(EncMode m) {
    auto & ch = chain(m);
    for (unsigned k : schedule()) {
      unsigned kk = std::max(k, 2u);
      for (auto & L : ch) {
        if (over_budget()) {
          saw_timeout_ = true;
          return unknown_outcome(m);
        }
        auto out = kinduction(L, kk);
        if (out.r == Alg1Out::R::True) {
          CheckOutcome co;
          co.verdict = Verdict::Valid;
          co.mode = m;
          co.d = L.d;
          co.k = kk;
          return co;
        }
        if (out.r == Alg1Out::R::False) return falsified(L, out.j, m);
      }
    }
    return unknown_outcome(m);
  }

  // Falsification hunts with the cheap approximate encoding while the exact
  // k-induction controller works on a proof; the first verdict that holds up
  // wins. An approximate counterexample that fails machine replay is kept as
  // a candidate and only reported if nothing better turns up.
  CheckOutcome run_auto() {
    Level & atop = chain(EncMode::Approx).back();
    auto & ech = chain(EncMode::Exact);
    std::optional<CheckOutcome> candidate;
    bool stop_bmc = false;
    for (unsigned k : schedule()) {
      if (!stop_bmc) ensure_session(atop);
      while (!stop_bmc && atop.next_base < k && atop.next_base < cfg_.max_k) {
        uint64_t j = atop.next_base;
        if (over_budget()) {
          saw_timeout_ = true;
          stop_bmc = true;
          break;
        }
        while (atop.next_step <= j) extend(atop);
        auto r = base_check(atop, j);
        if (r.status == CheckStatus::Unknown) {
          if (r.reason == "timeout") saw_timeout_ = true;
          stop_bmc = true;
          break;
        }
        atop.next_base = j + 1;
        if (r.sat()) {
          auto co = falsified(atop, j, EncMode::Approx);
          if (co.validated.value_or(false)) return co;
          if (!candidate) candidate = std::move(co);
        }
      }
      unsigned kk = std::max(k, 2u);
      for (auto & L : ech) {
        if (over_budget()) {
          saw_timeout_ = true;
          break;
        }
        auto out = kinduction(L, kk);
        if (out.r == Alg1Out::R::True) {
          CheckOutcome co;
          co.verdict = Verdict::Valid;
          co.mode = EncMode::Exact;
          co.d = L.d;
          co.k = kk;
          return co;
        }
        if (out.r == Alg1Out::R::False) return falsified(L, out.j, EncMode::Exact);
      }
      if (over_budget()) break;
    }
    if (candidate) return *candidate;
    return unknown_outcome(EncMode::Exact);
  }

  CheckOutcome falsified(Level & L, uint64_t j, EncMode m) {
    CheckOutcome co;
    co.verdict = Verdict::Falsified;
    co.mode = m;
    co.d = L.d;
    co.k = static_cast<unsigned>(j + 1);
    co.violation_step = static_cast<unsigned>(j);
    try {
      co.cex = extract(L, j);
      co.validated = validate(co.cex, j, m);
    } catch (const std::exception &) {
      // the verdict stands on the solver's model; replay just could not
      // confirm it
      co.validated = false;
    }
    return co;
  }

  // Signed bit-vector values come back as unsigned numerals; map them into
  // the type's range. Approximate values are already semantic.
  static Value fix(const Value & v, const DataType & t, EncMode m) {
    if (m == EncMode::Exact && v.kind == Value::K::Int &&
        (t.kind == DataType::Kind::Int || t.kind == DataType::Kind::UInt))
      return Value::make_int(machine_wrap(v.i, t));
    return v;
  }

  // Rebuilds a structured value from flattened leaves in dtype_flatten order.
  Value rebuild(const DataType & t, const std::vector<Value> & leaves, size_t & li) const {
    switch (t.kind) {
      case DataType::Kind::Bus: {
        Value v;
        v.kind = Value::K::Bus;
        for (const auto & [mn, mt] : tm_.model.bus_types.at(t.bus_name))
          v.members[mn] = rebuild(mt, leaves, li);
        return v;
      }
      case DataType::Kind::Vector:
      case DataType::Kind::Matrix: {
        Value v;
        v.kind = Value::K::Vec;
        unsigned n = t.kind == DataType::Kind::Vector ? t.d1 : t.d1 * t.d2;
        for (unsigned e = 0; e < n; e++) v.elems.push_back(rebuild(t.elem_type(), leaves, li));
        return v;
      }
      default: return leaves[li++];
    }
  }

  Trace extract(Level & L, uint64_t j) {
    std::vector<std::string> terms;
    std::vector<SmtSort> sorts;
    auto query = [&](const TransParam & p, const std::string & nm) {
      if (p.sort.k != SmtSort::K::Named) {
        terms.push_back(nm);
        sorts.push_back(p.sort);
        return;
      }
      for (const auto & [leaf, lt] : dtype_flatten(p.dtype, tm_.model.bus_types)) {
        terms.push_back("(" + smt_symbol(p.dtype.bus_name + "_" + leaf) + " " + nm + ")");
        sorts.push_back(smt_sort_of(lt, L.mode));
      }
    };
    auto walk = [&](auto && visit) {
      for (const auto & st : L.enc.states) visit(st, at_i(st.name));
      for (uint64_t s = 0; s <= j; s++) {
        for (const auto & st : L.enc.states) visit(st, at(st.name, s));
        for (const auto & p : L.enc.inputs) visit(p, at(p.name, s));
        for (const auto & p : L.enc.outputs) visit(p, at(p.name, s));
      }
    };
    walk(query);

    auto vals = L.sess->get_values(terms, sorts);
    size_t vi = 0;
    auto take = [&](const TransParam & p) -> Value {
      if (p.sort.k != SmtSort::K::Named) return fix(vals[vi++], p.dtype, L.mode);
      std::vector<Value> leaves;
      for (const auto & [leaf, lt] : dtype_flatten(p.dtype, tm_.model.bus_types))
        leaves.push_back(fix(vals[vi++], lt, L.mode));
      size_t li = 0;
      return rebuild(p.dtype, leaves, li);
    };
    Trace t;
    t.length = static_cast<unsigned>(j + 1);
    t.violation_step = static_cast<unsigned>(j);
    // must mirror walk() call for call
    for (const auto & st : L.enc.states) t.states[st.name].push_back(take(st));
    for (uint64_t s = 0; s <= j; s++) {
      for (const auto & st : L.enc.states) t.states[st.name].push_back(take(st));
      for (const auto & p : L.enc.inputs) t.inputs[p.name].push_back(take(p));
      for (const auto & p : L.enc.outputs) t.outputs[p.name].push_back(take(p));
    }
    return t;
  }

  const DataType * input_dtype(const std::string & name) const {
    for (const auto & [m, ch] : chains_)
      for (const auto & L : ch)
        if (L.is_top)
          for (const auto & p : L.enc.inputs)
            if (p.name == name) return &p.dtype;
    return nullptr;
  }

  Value to_machine(const Value & v, const DataType & t) const {
    switch (t.kind) {
      case DataType::Kind::Bus: {
        Value o;
        o.kind = Value::K::Bus;
        for (const auto & [mn, mt] : tm_.model.bus_types.at(t.bus_name))
          o.members[mn] = to_machine(v.members.at(mn), mt);
        return o;
      }
      case DataType::Kind::Vector:
      case DataType::Kind::Matrix: {
        Value o;
        o.kind = Value::K::Vec;
        for (const auto & e : v.elems) o.elems.push_back(to_machine(e, t.elem_type()));
        return o;
      }
      case DataType::Kind::Boolean: return v;
      default: return value_cast(v, t, Rounding::NearestEven, false);
    }
  }

  bool replays(const Trace & t, uint64_t j, ArithMode am, bool cast_inputs) const {
    Simulator sim(*ir_.root, ir_.objective, am);
    std::vector<std::map<std::string, Value>> rows(j + 1);
    for (const auto & [nm, vals] : t.inputs) {
      const DataType * dt = cast_inputs ? input_dtype(nm) : nullptr;
      for (size_t s = 0; s <= j; s++) rows[s][nm] = dt ? to_machine(vals[s], *dt) : vals[s];
    }
    Trace rt = sim.simulate(rows, static_cast<unsigned>(j + 1));
    return rt.violation_step && *rt.violation_step == j;
  }

  // Exact counterexamples must replay bit for bit in machine arithmetic.
  // Approximate ones must replay in ideal arithmetic and also survive a
  // machine replay; otherwise they stay candidates.
  std::optional<bool> validate(const Trace & t, uint64_t j, EncMode m) const {
    if (m == EncMode::Exact) return replays(t, j, ArithMode::Machine, false);
    bool ideal_ok = replays(t, j, ArithMode::Ideal, false);
    bool machine_ok = replays(t, j, ArithMode::Machine, true);
    return ideal_ok && machine_ok;
  }
};

}  // namespace

CheckOutcome check_model(const TypedModel & tm, const Property & prop,
                         const CheckerConfig & cfg) {
  return Engine(tm, prop, cfg).run();
}

}  // namespace blockcheck
