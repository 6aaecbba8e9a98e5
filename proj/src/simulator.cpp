#include "blockcheck/simulator.hpp"

#include "blockcheck/diag.hpp"

namespace blockcheck {

namespace {

using ValueMap = std::map<std::string, Value>;

FpBits to_fp(const Value & v, FloatPrec p) {
  switch (v.kind) {
    case Value::K::Float: return v.f.prec == p ? v.f : fp_convert(v.f, p);
    case Value::K::Int: return fp_from_rational(BigRat(v.i), p);
    case Value::K::Rat: return fp_from_rational(v.r, p);
    default: throw BlockcheckError("expected numeric value");
  }
}

BigRat to_rat(const Value & v) { return value_to_rational(v); }

BigInt to_int(const Value & v) {
  if (v.kind == Value::K::Int) return v.i;
  throw BlockcheckError("expected integer value, got " + v.str());
}

// Truncating division; mirrors the printed closed form, which leaves the
// quotient to the solver at zero. Ideal simulation cannot be underspecified,
// so zero is an error here.
BigInt trunc_div(const BigInt & a, const BigInt & b) {
  if (b == 0) throw BlockcheckError("division by zero");
  return a / b;  // cpp_int truncates toward zero
}

struct Interp {
  ArithMode mode;
  const Objective * obj = nullptr;
  std::optional<bool> phi;  // set when the owner's body was reached this step

  bool machine() const { return mode == ArithMode::Machine; }

  Value zero_of_type(const DataType & t) const {
    if (t.kind == DataType::Kind::Float)
      return machine() ? Value::make_float(fp_zero(t.prec, false)) : Value::make_rat(BigRat(0));
    if (t.kind == DataType::Kind::Boolean) return Value::make_bool(false);
    return Value::make_int(0);
  }

  Value constant(const Value & v, const DataType & t) const {
    if (t.kind == DataType::Kind::Boolean) {
      if (v.kind != Value::K::Bool) throw BlockcheckError("boolean constant expected");
      return v;
    }
    if (t.kind == DataType::Kind::Float) {
      if (machine()) {
        if (v.kind == Value::K::Float)
          return v.f.prec == t.prec ? v : Value::make_float(fp_convert(v.f, t.prec));
        return Value::make_float(fp_from_rational(to_rat(v), t.prec));
      }
      return Value::make_rat(to_rat(v));
    }
    return Value::make_int(to_int(v));
  }

  bool cmp(IROp op, const DataType & t, const Value & xv, const Value & yv) const {
    if (t.kind == DataType::Kind::Boolean) {
      bool x = xv.b, y = yv.b;
      if (op == IROp::Eq) return x == y;
      if (op == IROp::Ne) return x != y;
      throw BlockcheckError("ordered comparison on booleans");
    }
    if (t.kind == DataType::Kind::Float && machine()) {
      FpBits x = to_fp(xv, t.prec), y = to_fp(yv, t.prec);
      switch (op) {
        case IROp::Lt: return fp_lt(x, y);
        case IROp::Le: return fp_le(x, y);
        case IROp::Gt: return fp_lt(y, x);
        case IROp::Ge: return fp_le(y, x);
        case IROp::Eq: return fp_eq(x, y);
        case IROp::Ne: return !fp_eq(x, y);
        default: break;
      }
      throw BlockcheckError("bad comparison op");
    }
    BigRat x = to_rat(xv), y = to_rat(yv);
    switch (op) {
      case IROp::Lt: return x < y;
      case IROp::Le: return x <= y;
      case IROp::Gt: return x > y;
      case IROp::Ge: return x >= y;
      case IROp::Eq: return x == y;
      case IROp::Ne: return x != y;
      default: break;
    }
    throw BlockcheckError("bad comparison op");
  }

  Value arith(IROp op, const DataType & t, const Value & xv, const Value & yv) const {
    if (t.kind == DataType::Kind::Float) {
      if (machine()) {
        FpBits x = to_fp(xv, t.prec), y = to_fp(yv, t.prec);
        switch (op) {
          case IROp::Add: return Value::make_float(fp_add(x, y));
          case IROp::Sub: return Value::make_float(fp_sub(x, y));
          case IROp::Mul: return Value::make_float(fp_mul(x, y));
          case IROp::Div: return Value::make_float(fp_div(x, y));
          case IROp::Min: return Value::make_float(fp_min(x, y));
          case IROp::Max: return Value::make_float(fp_max(x, y));
          default: break;
        }
        throw BlockcheckError("bad arithmetic op");
      }
      BigRat x = to_rat(xv), y = to_rat(yv);
      switch (op) {
        case IROp::Add: return Value::make_rat(x + y);
        case IROp::Sub: return Value::make_rat(x - y);
        case IROp::Mul: return Value::make_rat(x * y);
        case IROp::Div:
          if (y == 0) throw BlockcheckError("division by zero");
          return Value::make_rat(x / y);
        case IROp::Min: return Value::make_rat(x < y ? x : y);
        case IROp::Max: return Value::make_rat(x < y ? y : x);
        default: break;
      }
      throw BlockcheckError("bad arithmetic op");
    }
    BigInt x = to_int(xv), y = to_int(yv);
    BigInt r;
    switch (op) {
      case IROp::Add: r = x + y; break;
      case IROp::Sub: r = x - y; break;
      case IROp::Mul: r = x * y; break;
      case IROp::Div: r = 0; break;  // handled below
      case IROp::Min: return Value::make_int(x < y ? x : y);
      case IROp::Max: return Value::make_int(x < y ? y : x);
      default: throw BlockcheckError("bad arithmetic op");
    }
    if (op == IROp::Div)
      return Value::make_int(machine() ? machine_div(x, y, t) : trunc_div(x, y));
    return Value::make_int(machine() ? machine_wrap(r, t) : r);
  }

  Value cast(const Value & v, const DataType & tgt, Rounding r, bool sat) const {
    if (tgt.kind == DataType::Kind::Boolean) {
      if (v.kind == Value::K::Bool) return v;
      if (v.kind == Value::K::Float && fp_is_nan(v.f)) return Value::make_bool(true);
      return Value::make_bool(to_rat(v) != 0);
    }
    if (v.kind == Value::K::Bool) {
      Value one = Value::make_int(v.b ? 1 : 0);
      return cast(one, tgt, r, sat);
    }
    if (machine()) return value_cast(v, tgt, r, sat);
    if (tgt.kind == DataType::Kind::Float) return Value::make_rat(to_rat(v));
    // Ideal integer target: round, clamp when saturating, never wrap.
    BigInt n;
    if (v.kind == Value::K::Int) {
      n = v.i;
    } else {
      BigRat x = to_rat(v);
      switch (r) {
        case Rounding::Floor: n = rat_floor(x); break;
        case Rounding::Ceil: n = rat_ceil(x); break;
        case Rounding::Zero: n = rat_trunc(x); break;
        case Rounding::NearestEven: n = rat_round_even(x); break;
      }
    }
    return Value::make_int(sat ? machine_clamp(n, tgt) : n);
  }

  Value ex(const IRExpr & e, const ValueMap & locals, const ValueMap & pre) const {
    switch (e.k) {
      case IRExpr::K::Const: return constant(e.cval, e.dtype);
      case IRExpr::K::Var: {
        auto it = locals.find(e.name);
        if (it == locals.end()) throw BlockcheckError("unbound variable " + e.name);
        return it->second;
      }
      case IRExpr::K::StateRead: {
        auto it = pre.find(e.name);
        if (it == pre.end()) throw BlockcheckError("unbound state " + e.name);
        return it->second;
      }
      case IRExpr::K::Unary: {
        Value a = ex(*e.a, locals, pre);
        if (e.op == IROp::Not) return Value::make_bool(!a.b);
        const DataType & t = e.dtype;
        if (e.op == IROp::Neg) {
          if (t.kind == DataType::Kind::Float)
            return machine() ? Value::make_float(fp_neg(to_fp(a, t.prec)))
                             : Value::make_rat(-to_rat(a));
          BigInt n = -to_int(a);
          return Value::make_int(machine() ? machine_wrap(n, t) : n);
        }
        if (e.op == IROp::Abs) {
          if (t.kind == DataType::Kind::Float)
            return machine() ? Value::make_float(fp_abs(to_fp(a, t.prec)))
                             : Value::make_rat(abs(to_rat(a)));
          BigInt n = abs(to_int(a));
          return Value::make_int(machine() ? machine_wrap(n, t) : n);
        }
        throw BlockcheckError("bad unary op");
      }
      case IRExpr::K::Binary: {
        Value a = ex(*e.a, locals, pre);
        Value b = ex(*e.b, locals, pre);
        switch (e.op) {
          case IROp::And: return Value::make_bool(a.b && b.b);
          case IROp::Or: return Value::make_bool(a.b || b.b);
          case IROp::Xor: return Value::make_bool(a.b != b.b);
          case IROp::Lt:
          case IROp::Le:
          case IROp::Gt:
          case IROp::Ge:
          case IROp::Eq:
          case IROp::Ne: return Value::make_bool(cmp(e.op, e.a->dtype, a, b));
          default: return arith(e.op, e.dtype, a, b);
        }
      }
      case IRExpr::K::Ite: {
        Value c = ex(*e.a, locals, pre);
        return c.b ? ex(*e.b, locals, pre) : ex(*e.c, locals, pre);
      }
      case IRExpr::K::Cast:
        return cast(ex(*e.a, locals, pre), e.dtype, e.rounding, e.saturate);
      case IRExpr::K::BusMember: {
        Value c = ex(*e.a, locals, pre);
        if (c.kind != Value::K::Bus) throw BlockcheckError("bus member read on non-bus");
        auto it = c.members.find(e.member);
        if (it == c.members.end()) throw BlockcheckError("missing bus member " + e.member);
        return it->second;
      }
    }
    throw BlockcheckError("bad expression");
  }

  bool active_now(const SubsystemIR & s, const ValueMap & pre, const ValueMap & ins) const {
    switch (s.activation.kind) {
      case ActivationKind::None: return true;
      case ActivationKind::Enabled: return ins.at("_en").b;
      case ActivationKind::Triggered: {
        const DataType & tt = s.wrapper_in.back().dtype;
        const Value & tr = ins.at("_tr");
        const Value & prev = pre.at("_trig_prev");
        Value z = zero_of_type(tt);
        bool rising = cmp(IROp::Le, tt, prev, z) && cmp(IROp::Gt, tt, tr, z);
        bool falling = cmp(IROp::Ge, tt, prev, z) && cmp(IROp::Lt, tt, tr, z);
        switch (s.activation.edge) {
          case TriggerEdge::Rising: return rising;
          case TriggerEdge::Falling: return falling;
          case TriggerEdge::Either: return rising || falling;
        }
        return rising;
      }
      case ActivationKind::RateDivided: return to_int(pre.at("_rate_cnt")) == 0;
    }
    return true;
  }

  struct SubResult {
    ValueMap out;
    ValueMap next;
  };

  SubResult eval_sub(const SubsystemIR & s, const ValueMap & pre, const ValueMap & ins) {
    bool owner = obj && obj->phi && s.path == obj->owner_path;
    bool wrapped = s.activation.kind != ActivationKind::None;
    if (owner && wrapped) phi = ex(*obj->phi, ins, pre).b;

    SubResult res;
    if (active_now(s, pre, ins)) {
      ValueMap locals = ins;
      for (const auto & st : s.steps) {
        switch (st.k) {
          case IRStep::K::Local:
          case IRStep::K::SkolemEq:
            locals[st.lhs] = ex(*st.rhs, locals, pre);
            break;
          case IRStep::K::BusMake: {
            Value bus;
            bus.kind = Value::K::Bus;
            for (const auto & [m, e] : st.members) bus.members[m] = ex(*e, locals, pre);
            locals[st.lhs] = bus;
            break;
          }
          case IRStep::K::ChildCall: {
            const SubsystemIR & c = *s.children[st.child];
            const std::string & cid = s.child_ids[st.child];
            ValueMap cpre, cins;
            for (const auto & sd : c.all_states()) cpre[sd.name] = pre.at(cid + "." + sd.name);
            for (const auto & vd : c.vin) cins[vd.name] = locals.at(cid + "." + vd.name);
            for (const auto & vd : c.wrapper_in)
              cins[vd.name] = locals.at(cid + "." + vd.name);
            SubResult cr = eval_sub(c, cpre, cins);
            for (const auto & vd : c.vout) locals[cid + "." + vd.name] = cr.out.at(vd.name);
            for (auto & [n, v] : cr.next) res.next[cid + "." + n] = std::move(v);
            break;
          }
          case IRStep::K::OutputEq: {
            Value v = ex(*st.rhs, locals, pre);
            locals[st.lhs] = v;
            res.out[st.lhs] = std::move(v);
            break;
          }
          case IRStep::K::StateNextEq:
            res.next[st.lhs] = ex(*st.rhs, locals, pre);
            break;
        }
      }
      if (owner && !wrapped) phi = ex(*obj->phi, locals, pre).b;
      // Holds pick up the fresh outputs.
      for (size_t i = 0; i < s.vout.size() && wrapped; i++)
        res.next[s.wrapper_states[i].name] = res.out.at(s.vout[i].name);
    } else {
      for (size_t i = 0; i < s.vout.size(); i++) {
        res.out[s.vout[i].name] = pre.at(s.wrapper_states[i].name);
        res.next[s.wrapper_states[i].name] = pre.at(s.wrapper_states[i].name);
      }
      for (const auto & sd : s.states) res.next[sd.name] = pre.at(sd.name);
    }
    if (s.activation.kind == ActivationKind::Triggered) res.next["_trig_prev"] = ins.at("_tr");
    if (s.activation.kind == ActivationKind::RateDivided) {
      BigInt cnt = to_int(pre.at("_rate_cnt"));
      res.next["_rate_cnt"] =
          Value::make_int(cnt >= s.activation.divisor - 1 ? BigInt(0) : cnt + 1);
    }
    return res;
  }
};

}  // namespace

Simulator::Simulator(const SubsystemIR & root, const Objective & obj, ArithMode mode)
    : root_(root), obj_(obj), mode_(mode) {}

std::map<std::string, Value> Simulator::initial_state() const {
  Interp in{mode_, nullptr, {}};
  ValueMap st;
  for (const auto & sd : root_.all_states()) st[sd.name] = in.constant(sd.init, sd.dtype);
  return st;
}

Simulator::StepResult Simulator::step(std::map<std::string, Value> & state,
                                      const std::map<std::string, Value> & inputs) const {
  Interp in{mode_, &obj_, {}};
  ValueMap ins;
  for (const auto & vd : root_.vin) {
    auto it = inputs.find(vd.name);
    if (it == inputs.end()) throw BlockcheckError("missing input " + vd.name);
    ins[vd.name] = it->second;
  }
  Interp::SubResult r = in.eval_sub(root_, state, ins);
  for (const auto & sd : root_.all_states()) {
    auto it = r.next.find(sd.name);
    if (it == r.next.end()) throw BlockcheckError("state not updated: " + sd.name);
    state[sd.name] = it->second;
  }
  StepResult out;
  out.outputs = std::move(r.out);
  out.phi = in.phi;
  return out;
}

Trace Simulator::simulate(const std::vector<std::map<std::string, Value>> & input_rows,
                          unsigned n) const {
  if (input_rows.size() < n) throw BlockcheckError("input trace shorter than requested steps");
  Trace t;
  t.length = n;
  ValueMap state = initial_state();
  for (const auto & [k, v] : state) t.states[k].push_back(v);
  for (unsigned j = 0; j < n; j++) {
    StepResult r = step(state, input_rows[j]);
    for (const auto & vd : root_.vin) t.inputs[vd.name].push_back(input_rows[j].at(vd.name));
    for (const auto & [k, v] : r.outputs) t.outputs[k].push_back(v);
    for (const auto & [k, v] : state) t.states[k].push_back(v);
    if (!t.violation_step && r.phi && !*r.phi) t.violation_step = j;
  }
  return t;
}

}  // namespace blockcheck
