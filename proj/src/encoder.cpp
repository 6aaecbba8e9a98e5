#include "blockcheck/encoder.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace blockcheck {

namespace {

std::string sym(const std::string & s) { return smt_symbol(s); }

std::string conj(const std::vector<std::string> & cs) {
  if (cs.empty()) return "true";
  if (cs.size() == 1) return cs[0];
  return app("and", cs);
}

std::string letn(const std::vector<std::pair<std::string, std::string>> & bs,
                 const std::string & body) {
  std::string out = body;
  for (auto it = bs.rbegin(); it != bs.rend(); ++it) out = let1(it->first, it->second, out);
  return out;
}

std::string eq2(const std::string & a, const std::string & b) { return app("=", {a, b}); }

// Terms cheap to duplicate: atoms and literal forms. Everything else gets a
// let binding when an operand is used more than once.
bool is_simple_term(const std::string & s) {
  if (s.find('(') == std::string::npos) return true;
  if (s.rfind("(fp ", 0) == 0 || s.rfind("(_ ", 0) == 0 || s.rfind("(/ ", 0) == 0) return true;
  if (s.rfind("(- ", 0) == 0 && s.size() > 3 && s[3] >= '0' && s[3] <= '9') return true;
  return false;
}

unsigned float_eb(FloatPrec p) { return fp_eb(p); }
unsigned float_sb(FloatPrec p) { return fp_sb(p); }

const char * rm_name(Rounding r) {
  switch (r) {
    case Rounding::Floor: return "RTN";
    case Rounding::NearestEven: return "RNE";
    case Rounding::Zero: return "RTZ";
    case Rounding::Ceil: return "RTP";
  }
  return "RNE";
}

BigInt int_of_value(const Value & v) {
  switch (v.kind) {
    case Value::K::Bool: return BigInt(v.b ? 1 : 0);
    case Value::K::Int: return v.i;
    case Value::K::Rat:
      if (denominator(v.r) != 1)
        throw BlockcheckError("non-integer literal " + v.str() + " for an integer type");
      return numerator(v.r);
    default: throw BlockcheckError("value " + v.str() + " is not an integer");
  }
}

BigRat rat_of_value(const Value & v) {
  switch (v.kind) {
    case Value::K::Bool: return BigRat(v.b ? 1 : 0);
    case Value::K::Int: return BigRat(v.i);
    case Value::K::Rat: return v.r;
    case Value::K::Float:
      if (!fp_is_finite(v.f))
        throw BlockcheckError(
            "the approximate encoding cannot express the non-finite value " + v.str());
      return fp_to_rational(v.f);
    default: throw BlockcheckError("value " + v.str() + " is not numeric");
  }
}

// Largest float <= bound (bound > 0) resp. smallest float >= bound
// (bound < 0). Rounding to nearest can overshoot the integer bound; one step
// toward zero lands on the adjacent representable value.
FpBits fp_toward_zero_bound(const BigInt & bound, FloatPrec p) {
  BigRat r(bound);
  FpBits f = fp_from_rational(r, p);
  if (fp_is_inf(f)) {
    f.bits -= 1;  // back to the largest finite magnitude
    return f;
  }
  BigRat got = fp_to_rational(f);
  bool over = bound > 0 ? got > r : got < r;
  if (over) f.bits -= 1;
  return f;
}

struct Enc {
  Enc(EncMode m, const BusTable & b, const Objective & o) : mode(m), buses(b), obj(o) {}

  EncMode mode;
  const BusTable & buses;
  const Objective & obj;
  std::ostringstream out;
  unsigned fresh = 0;

  bool exact() const { return mode == EncMode::Exact; }

  std::string srt(const DataType & t) { return smt_sort_of(t, mode).str(); }

  std::string tmp() { return "_t" + std::to_string(fresh++); }

  template <class F>
  std::string bind1(const std::string & a, F f) {
    if (is_simple_term(a)) return f(a);
    std::string x = tmp();
    return let1(x, a, f(x));
  }

  template <class F>
  std::string bind2(const std::string & a, const std::string & b, F f) {
    std::vector<std::pair<std::string, std::string>> bs;
    std::string x = a, y = b;
    if (!is_simple_term(a)) {
      x = tmp();
      bs.push_back({x, a});
    }
    if (!is_simple_term(b)) {
      y = tmp();
      bs.push_back({y, b});
    }
    return letn(bs, f(x, y));
  }

  // -- scalars ---------------------------------------------------------------

  std::string zero_lit(const DataType & t) {
    if (t.kind == DataType::Kind::Float)
      return exact() ? print_fp_literal(fp_zero(t.prec, false)) : std::string("0.0");
    return exact() ? print_bv_literal(BigInt(0), t.bits) : std::string("0");
  }

  std::string cmp(IROp op, const DataType & t, const std::string & a, const std::string & b) {
    if (t.kind == DataType::Kind::Boolean) {
      if (op == IROp::Eq) return eq2(a, b);
      if (op == IROp::Ne) return app("distinct", {a, b});
      throw BlockcheckError("ordered comparison on boolean operands");
    }
    if (!exact()) {
      switch (op) {
        case IROp::Lt: return app("<", {a, b});
        case IROp::Le: return app("<=", {a, b});
        case IROp::Gt: return app(">", {a, b});
        case IROp::Ge: return app(">=", {a, b});
        case IROp::Eq: return eq2(a, b);
        case IROp::Ne: return app("distinct", {a, b});
        default: break;
      }
    } else if (t.kind == DataType::Kind::Float) {
      switch (op) {
        case IROp::Lt: return app("fp.lt", {a, b});
        case IROp::Le: return app("fp.leq", {a, b});
        case IROp::Gt: return app("fp.gt", {a, b});
        case IROp::Ge: return app("fp.geq", {a, b});
        case IROp::Eq: return app("fp.eq", {a, b});
        case IROp::Ne: return app("not", {app("fp.eq", {a, b})});
        default: break;
      }
    } else {
      bool sg = t.kind == DataType::Kind::Int;
      switch (op) {
        case IROp::Lt: return app(sg ? "bvslt" : "bvult", {a, b});
        case IROp::Le: return app(sg ? "bvsle" : "bvule", {a, b});
        case IROp::Gt: return app(sg ? "bvsgt" : "bvugt", {a, b});
        case IROp::Ge: return app(sg ? "bvsge" : "bvuge", {a, b});
        case IROp::Eq: return eq2(a, b);
        case IROp::Ne: return app("distinct", {a, b});
        default: break;
      }
    }
    throw BlockcheckError("bad comparison operator");
  }

  std::string arith(IROp op, const DataType & t, const std::string & a, const std::string & b) {
    bool flt = t.kind == DataType::Kind::Float;
    bool sg = t.kind == DataType::Kind::Int;
    switch (op) {
      case IROp::Add:
        return exact() ? (flt ? app("fp.add", {"RNE", a, b}) : app("bvadd", {a, b}))
                       : app("+", {a, b});
      case IROp::Sub:
        return exact() ? (flt ? app("fp.sub", {"RNE", a, b}) : app("bvsub", {a, b}))
                       : app("-", {a, b});
      case IROp::Mul:
        return exact() ? (flt ? app("fp.mul", {"RNE", a, b}) : app("bvmul", {a, b}))
                       : app("*", {a, b});
      case IROp::Div:
        if (exact())
          return flt ? app("fp.div", {"RNE", a, b}) : app(sg ? "bvsdiv" : "bvudiv", {a, b});
        if (flt) return app("/", {a, b});
        return trunc_div(a, b);
      case IROp::Min:
      case IROp::Max: {
        if (exact() && flt) return app(op == IROp::Min ? "fp.min" : "fp.max", {a, b});
        return bind2(a, b, [&](const std::string & x, const std::string & y) {
          return app("ite", {cmp(op == IROp::Min ? IROp::Le : IROp::Ge, t, x, y), x, y});
        });
      }
      default: throw BlockcheckError("bad arithmetic operator");
    }
  }

  // Truncating integer division over Int, matching machine semantics away
  // from zero divisors (the b = 0 case is left to the solver's total
  // division function).
  std::string trunc_div(const std::string & a, const std::string & b) {
    return bind2(a, b, [&](const std::string & x, const std::string & y) {
      std::string sign =
          app("ite", {app("xor", {app("<", {x, "0"}), app("<", {y, "0"})}), "(- 1)", "1"});
      return app("*", {sign, app("div", {app("abs", {x}), app("abs", {y})})});
    });
  }

  std::string unary(const IRExpr & e) {
    std::string a = ex(*e.a);
    const DataType & t = e.dtype;
    switch (e.op) {
      case IROp::Not: return app("not", {a});
      case IROp::Neg:
        if (!exact()) return app("-", {a});
        return t.kind == DataType::Kind::Float ? app("fp.neg", {a}) : app("bvneg", {a});
      case IROp::Abs:
        if (exact()) {
          if (t.kind == DataType::Kind::Float) return app("fp.abs", {a});
          if (t.kind == DataType::Kind::UInt) return a;
          return bind1(a, [&](const std::string & x) {
            return app("ite", {app("bvslt", {x, zero_lit(t)}), app("bvneg", {x}), x});
          });
        }
        if (t.kind == DataType::Kind::Float)
          return bind1(a, [&](const std::string & x) {
            return app("ite", {app(">=", {x, "0.0"}), x, app("-", {x})});
          });
        return app("abs", {a});
      default: throw BlockcheckError("bad unary operator");
    }
  }

  std::string binary(const IRExpr & e) {
    std::string a = ex(*e.a), b = ex(*e.b);
    switch (e.op) {
      case IROp::And: return app("and", {a, b});
      case IROp::Or: return app("or", {a, b});
      case IROp::Xor: return app("xor", {a, b});
      case IROp::Lt:
      case IROp::Le:
      case IROp::Gt:
      case IROp::Ge:
      case IROp::Eq:
      case IROp::Ne: return cmp(e.op, e.a->dtype, a, b);
      default: return arith(e.op, e.dtype, a, b);
    }
  }

  // Round a Real to an Int per the conversion block's rounding mode.
  std::string round_real(const std::string & a, Rounding r) {
    switch (r) {
      case Rounding::Floor: return app("to_int", {a});
      case Rounding::Ceil: return app("-", {app("to_int", {app("-", {a})})});
      case Rounding::Zero:
        return bind1(a, [&](const std::string & x) {
          return app("ite", {app(">=", {x, "0.0"}), app("to_int", {x}),
                             app("-", {app("to_int", {app("-", {x})})})});
        });
      case Rounding::NearestEven:
        return bind1(a, [&](const std::string & x) {
          std::string f = tmp(), fr = tmp();
          std::string up = app("+", {f, "1"});
          std::string tie = app("ite", {eq2(app("mod", {f, "2"}), "0"), f, up});
          std::string pick = app("ite", {app("<", {fr, "0.5"}), f,
                                         app("ite", {app(">", {fr, "0.5"}), up, tie})});
          return let1(f, app("to_int", {x}),
                      let1(fr, app("-", {x, app("to_real", {f})}), pick));
        });
    }
    throw BlockcheckError("bad rounding mode");
  }

  std::string clamp_int_approx(const std::string & a, const DataType & to) {
    std::string lo = print_int_literal(int_min_value(to));
    std::string hi = print_int_literal(int_max_value(to));
    return bind1(a, [&](const std::string & x) {
      return app("ite", {app("<", {x, lo}), lo, app("ite", {app(">", {x, hi}), hi, x})});
    });
  }

  std::string cast(const IRExpr & e) {
    const DataType & from = e.a->dtype;
    const DataType & to = e.dtype;
    std::string a = ex(*e.a);
    if (from == to) return a;

    if (to.kind == DataType::Kind::Boolean) {
      if (from.kind == DataType::Kind::Boolean) return a;
      if (exact() && from.kind == DataType::Kind::Float)
        return app("not", {app("fp.isZero", {a})});
      return app("distinct", {a, zero_lit(from)});
    }
    if (from.kind == DataType::Kind::Boolean)
      return app("ite", {a, smt_literal(Value::make_int(1), to, mode),
                         smt_literal(Value::make_int(0), to, mode)});

    if (to.kind == DataType::Kind::Float) {
      if (!exact()) return from.kind == DataType::Kind::Float ? a : app("to_real", {a});
      std::string fn = "(_ to_fp " + std::to_string(float_eb(to.prec)) + " " +
                       std::to_string(float_sb(to.prec)) + ")";
      if (from.kind == DataType::Kind::UInt)
        fn = "(_ to_fp_unsigned " + std::to_string(float_eb(to.prec)) + " " +
             std::to_string(float_sb(to.prec)) + ")";
      return app(fn, {"RNE", a});
    }

    // integer targets
    if (from.kind == DataType::Kind::Float) {
      if (!exact()) {
        std::string r = round_real(a, e.rounding);
        return e.saturate ? clamp_int_approx(r, to) : r;
      }
      return fp_to_bv(a, from, to, e.rounding, e.saturate);
    }
    return exact() ? resize_bv(a, from, to, e.saturate)
                   : (e.saturate ? clamp_int_approx(a, to) : a);
  }

  std::string fp_to_bv(const std::string & a, const DataType & from, const DataType & to,
                       Rounding r, bool saturate) {
    bool sg = to.kind == DataType::Kind::Int;
    std::string fn = "(_ " + std::string(sg ? "fp.to_sbv" : "fp.to_ubv") + " " +
                     std::to_string(to.bits) + ")";
    std::string conv = app(fn, {rm_name(r), a});
    if (!saturate) return conv;
    BigInt lo = int_min_value(to), hi = int_max_value(to);
    std::string lo_f = print_fp_literal(fp_toward_zero_bound(lo, from.prec));
    std::string hi_f = print_fp_literal(fp_toward_zero_bound(hi, from.prec));
    std::string lo_b = print_bv_literal(lo, to.bits);
    std::string hi_b = print_bv_literal(hi, to.bits);
    // NaN saturates to zero, the usual hardware-style choice.
    return bind1(a, [&](const std::string & x) {
      std::string in_range = app("ite", {app("fp.lt", {x, lo_f}), lo_b,
                                         app("ite", {app("fp.gt", {x, hi_f}), hi_b,
                                                     app(fn, {rm_name(r), x})})});
      return app("ite", {app("fp.isNaN", {x}), print_bv_literal(BigInt(0), to.bits), in_range});
    });
  }

  std::string resize_bv(const std::string & a, const DataType & from, const DataType & to,
                        bool saturate) {
    bool src_signed = from.kind == DataType::Kind::Int;
    std::string v = a;
    if (saturate) {
      BigInt lo = int_min_value(to), hi = int_max_value(to);
      BigInt slo = int_min_value(from), shi = int_max_value(from);
      bool low = lo > slo, high = hi < shi;
      if (low || high) {
        v = bind1(a, [&](const std::string & x) {
          std::string body = x;
          if (high) {
            BigInt h = hi < shi ? hi : shi;
            body = app("ite", {cmp(IROp::Gt, from, x, print_bv_literal(h, from.bits)),
                               print_bv_literal(h, from.bits), body});
          }
          if (low) {
            BigInt l = lo > slo ? lo : slo;
            body = app("ite", {cmp(IROp::Lt, from, x, print_bv_literal(l, from.bits)),
                               print_bv_literal(l, from.bits), body});
          }
          return body;
        });
      }
    }
    if (to.bits > from.bits) {
      std::string fn = "(_ " + std::string(src_signed ? "sign_extend" : "zero_extend") + " " +
                       std::to_string(to.bits - from.bits) + ")";
      return app(fn, {v});
    }
    if (to.bits < from.bits) {
      std::string fn = "(_ extract " + std::to_string(to.bits - 1) + " 0)";
      return app(fn, {v});
    }
    return v;
  }

  std::string ex(const IRExpr & e) {
    switch (e.k) {
      case IRExpr::K::Const: return smt_literal(e.cval, e.dtype, mode);
      case IRExpr::K::Var: return sym(e.name);
      case IRExpr::K::StateRead: return sym(e.name + "@0");
      case IRExpr::K::BusMember:
        return app(sym(e.a->dtype.bus_name + "_" + e.member), {ex(*e.a)});
      case IRExpr::K::Ite: return app("ite", {ex(*e.a), ex(*e.b), ex(*e.c)});
      case IRExpr::K::Unary: return unary(e);
      case IRExpr::K::Binary: return binary(e);
      case IRExpr::K::Cast: return cast(e);
    }
    throw BlockcheckError("bad expression node");
  }

  // -- subsystems ------------------------------------------------------------

  void collect_buses(const SubsystemIR & s, std::set<std::string> & names) {
    auto scan = [&](const std::vector<VarDecl> & vs) {
      for (const auto & v : vs)
        if (v.dtype.kind == DataType::Kind::Bus) names.insert(v.dtype.bus_name);
    };
    scan(s.vin);
    scan(s.wrapper_in);
    scan(s.vout);
    scan(s.skolems);
    for (const auto & c : s.children) collect_buses(*c, names);
  }

  void emit_bus_decls(const std::set<std::string> & names) {
    for (const auto & n : names) {
      out << "(declare-sort " << sym(n) << " 0)\n";
      for (const auto & [leaf, lt] : dtype_flatten(DataType::bus(n), buses))
        out << "(declare-fun " << sym(n + "_" + leaf) << " (" << sym(n) << ") " << srt(lt)
            << ")\n";
    }
  }

  std::string activation_cond(const SubsystemIR & s) {
    switch (s.activation.kind) {
      case ActivationKind::Enabled: return "_en";
      case ActivationKind::Triggered: {
        DataType tt = s.wrapper_in.back().dtype;
        std::string prev = sym("_trig_prev@0");
        std::string z = zero_lit(tt);
        std::string rising = app("and", {cmp(IROp::Le, tt, prev, z), cmp(IROp::Gt, tt, "_tr", z)});
        std::string falling = app("and", {cmp(IROp::Ge, tt, prev, z), cmp(IROp::Lt, tt, "_tr", z)});
        switch (s.activation.edge) {
          case TriggerEdge::Rising: return rising;
          case TriggerEdge::Falling: return falling;
          case TriggerEdge::Either: return app("or", {rising, falling});
        }
        return rising;
      }
      case ActivationKind::RateDivided: {
        DataType ct = DataType::uint_t(32);
        return eq2(sym("_rate_cnt@0"), smt_literal(Value::make_int(0), ct, mode));
      }
      default: return "true";
    }
  }

  std::string marker_update(const SubsystemIR & s) {
    if (s.activation.kind == ActivationKind::Triggered)
      return eq2(sym("_trig_prev@1"), "_tr");
    if (s.activation.kind == ActivationKind::RateDivided) {
      DataType ct = DataType::uint_t(32);
      std::string cnt = sym("_rate_cnt@0");
      std::string limit = smt_literal(Value::make_int(s.activation.divisor - 1), ct, mode);
      std::string zero = smt_literal(Value::make_int(0), ct, mode);
      std::string one = smt_literal(Value::make_int(1), ct, mode);
      std::string next = app("ite", {cmp(IROp::Ge, ct, cnt, limit), zero,
                                     exact() ? app("bvadd", {cnt, one}) : app("+", {cnt, one})});
      return eq2(sym("_rate_cnt@1"), next);
    }
    return "";
  }

  const DataType * skolem_type(const SubsystemIR & s, const std::string & name) {
    for (const auto & v : s.skolems)
      if (v.name == name) return &v.dtype;
    return nullptr;
  }

  void emit_sub(const SubsystemIR & s, const std::string & nm) {
    for (size_t i = 0; i < s.children.size(); i++)
      emit_sub(*s.children[i], nm + "." + s.child_ids[i]);

    auto alls = s.all_states();

    // init
    std::vector<std::string> ip;
    for (const auto & sd : alls) ip.push_back("(" + sym(sd.name) + " " + srt(sd.dtype) + ")");
    std::vector<std::string> ic;
    for (const auto & sd : s.wrapper_states)
      ic.push_back(eq2(sym(sd.name), smt_literal(sd.init, sd.dtype, mode)));
    for (size_t i = 0; i < s.own_state_count; i++)
      ic.push_back(eq2(sym(s.states[i].name), smt_literal(s.states[i].init,
                                                          s.states[i].dtype, mode)));
    for (size_t c = 0; c < s.children.size(); c++) {
      std::vector<std::string> args;
      for (const auto & sd : s.children[c]->all_states())
        args.push_back(sym(s.child_ids[c] + "." + sd.name));
      ic.push_back(app(sym("init_" + nm + "." + s.child_ids[c]), args));
    }
    out << "(define-fun " << sym("init_" + nm) << " (";
    for (size_t i = 0; i < ip.size(); i++) out << (i ? " " : "") << ip[i];
    out << ") Bool " << conj(ic) << ")\n";

    // trans
    std::vector<std::string> tp;
    tp.push_back("(" + std::string(kCounterParam) + " " + counter_sort().str() + ")");
    for (const auto & sd : alls)
      tp.push_back("(" + sym(sd.name + "@0") + " " + srt(sd.dtype) + ")");
    for (const auto & sd : alls)
      tp.push_back("(" + sym(sd.name + "@1") + " " + srt(sd.dtype) + ")");
    for (const auto & vd : s.vin) tp.push_back("(" + sym(vd.name) + " " + srt(vd.dtype) + ")");
    for (const auto & vd : s.wrapper_in)
      tp.push_back("(" + sym(vd.name) + " " + srt(vd.dtype) + ")");
    for (const auto & vd : s.vout) tp.push_back("(" + sym(vd.name) + " " + srt(vd.dtype) + ")");
    for (const auto & vd : s.skolems)
      tp.push_back("(" + sym(vd.name) + " " + srt(vd.dtype) + ")");

    std::vector<std::pair<std::string, std::string>> lets;
    std::vector<std::string> conjs;
    for (const auto & st : s.steps) {
      switch (st.k) {
        case IRStep::K::Local: lets.push_back({sym(st.lhs), ex(*st.rhs)}); break;
        case IRStep::K::SkolemEq:
        case IRStep::K::OutputEq: conjs.push_back(eq2(sym(st.lhs), ex(*st.rhs))); break;
        case IRStep::K::StateNextEq:
          conjs.push_back(eq2(sym(st.lhs + "@1"), ex(*st.rhs)));
          break;
        case IRStep::K::BusMake: {
          const DataType * bt = skolem_type(s, st.lhs);
          if (!bt) throw BlockcheckError("bus carrier '" + st.lhs + "' is not declared");
          for (const auto & [mname, mex] : st.members)
            conjs.push_back(
                eq2(app(sym(bt->bus_name + "_" + mname), {sym(st.lhs)}), ex(*mex)));
          break;
        }
        case IRStep::K::ChildCall: {
          const SubsystemIR & ch = *s.children[st.child];
          const std::string & cid = s.child_ids[st.child];
          std::vector<std::string> args{kCounterParam};
          for (const auto & sd : ch.all_states())
            args.push_back(sym(cid + "." + sd.name + "@0"));
          for (const auto & sd : ch.all_states())
            args.push_back(sym(cid + "." + sd.name + "@1"));
          for (const auto & vd : ch.vin) args.push_back(sym(cid + "." + vd.name));
          for (const auto & vd : ch.wrapper_in) args.push_back(sym(cid + "." + vd.name));
          for (const auto & vd : ch.vout) args.push_back(sym(cid + "." + vd.name));
          for (const auto & vd : ch.skolems) args.push_back(sym(cid + "." + vd.name));
          conjs.push_back(app(sym("trans_" + nm + "." + cid), args));
          break;
        }
      }
    }

    bool owner = obj.phi && s.path == obj.owner_path;
    std::string bug, hyp;
    if (owner) {
      std::string phi = ex(*obj.phi);
      std::string lt = exact() ? "bvult" : "<";
      bug = "(=> (= " + std::string(kCounterParam) + " " + kCurrStep + ") (not " + phi + "))";
      hyp = "(=> " + std::string(kFlagKind) + " (=> (" + lt + " " + kCounterParam + " " +
            kCurrStep + ") " + phi + "))";
    }

    std::string body;
    if (s.activation.kind == ActivationKind::None) {
      if (owner) {
        conjs.push_back(bug);
        conjs.push_back(hyp);
      }
      body = letn(lets, conj(conjs));
    } else {
      std::vector<std::string> act = conjs;
      for (size_t i = 0; i < s.vout.size(); i++)
        act.push_back(eq2(sym(s.wrapper_states[i].name + "@1"), sym(s.vout[i].name)));
      std::string active = letn(lets, conj(act));

      std::vector<std::string> ina;
      for (size_t i = 0; i < s.vout.size(); i++) {
        ina.push_back(eq2(sym(s.vout[i].name), sym(s.wrapper_states[i].name + "@0")));
        ina.push_back(
            eq2(sym(s.wrapper_states[i].name + "@1"), sym(s.wrapper_states[i].name + "@0")));
      }
      for (const auto & sd : s.states)
        ina.push_back(eq2(sym(sd.name + "@1"), sym(sd.name + "@0")));
      std::string inactive = conj(ina);

      std::vector<std::string> top;
      top.push_back(app("ite", {activation_cond(s), active, inactive}));
      std::string mk = marker_update(s);
      if (!mk.empty()) top.push_back(mk);
      if (owner) {
        top.push_back(bug);
        top.push_back(hyp);
      }
      body = conj(top);
    }

    out << "(define-fun " << sym("trans_" + nm) << " (";
    for (size_t i = 0; i < tp.size(); i++) out << (i ? " " : "") << tp[i];
    out << ") Bool " << body << ")\n";
  }

  SmtSort counter_sort() const {
    return mode == EncMode::Exact ? SmtSort::bitvec(32) : SmtSort::int_s();
  }
};

}  // namespace

SmtSort smt_sort_of(const DataType & t, EncMode mode) {
  switch (t.kind) {
    case DataType::Kind::Boolean: return SmtSort::boolean();
    case DataType::Kind::UInt:
    case DataType::Kind::Int:
      return mode == EncMode::Exact ? SmtSort::bitvec(t.bits) : SmtSort::int_s();
    case DataType::Kind::Float:
      return mode == EncMode::Exact ? SmtSort::float_s(fp_eb(t.prec), fp_sb(t.prec))
                                    : SmtSort::real();
    case DataType::Kind::Bus: return SmtSort::named(t.bus_name);
    default: throw BlockcheckError("composite type '" + print_dtype(t) + "' has no SMT sort");
  }
}

std::string smt_literal(const Value & v, const DataType & t, EncMode mode) {
  switch (t.kind) {
    case DataType::Kind::Boolean: {
      bool b = false;
      switch (v.kind) {
        case Value::K::Bool: b = v.b; break;
        case Value::K::Int: b = v.i != 0; break;
        case Value::K::Rat: b = v.r != 0; break;
        case Value::K::Float: b = !fp_is_zero(v.f); break;
        default: throw BlockcheckError("value " + v.str() + " is not boolean");
      }
      return b ? "true" : "false";
    }
    case DataType::Kind::UInt:
    case DataType::Kind::Int: {
      BigInt n = int_of_value(v);
      return mode == EncMode::Exact ? print_bv_literal(n, t.bits) : print_int_literal(n);
    }
    case DataType::Kind::Float: {
      if (mode == EncMode::Approx) return print_real_literal(rat_of_value(v));
      if (v.kind == Value::K::Float) return print_fp_literal(fp_convert(v.f, t.prec));
      return print_fp_literal(fp_from_rational(rat_of_value(v), t.prec));
    }
    default:
      throw BlockcheckError("no scalar literal for type '" + print_dtype(t) + "'");
  }
}

std::string counter_literal(uint64_t j, EncMode mode) {
  if (mode == EncMode::Exact) return "(_ bv" + std::to_string(j) + " 32)";
  return std::to_string(j);
}

EncodedSystem encode(const SubsystemIR & root, const Objective & obj, EncMode mode,
                     const BusTable & buses) {
  Enc enc(mode, buses, obj);

  std::set<std::string> bus_names;
  enc.collect_buses(root, bus_names);

  EncodedSystem sys;
  sys.mode = mode;
  sys.counter = enc.counter_sort();
  sys.logic = mode == EncMode::Exact ? (bus_names.empty() ? "QF_FPBV" : "ALL") : "ALL";
  sys.init_fn = "init_" + root.name;
  sys.trans_fn = "trans_" + root.name;

  enc.out << "(set-logic " << sys.logic << ")\n";
  enc.emit_bus_decls(bus_names);
  enc.out << "(declare-const " << kCurrStep << " " << sys.counter.str() << ")\n";
  enc.out << "(declare-const " << kFlagKind << " Bool)\n";
  enc.emit_sub(root, root.name);
  sys.preamble = enc.out.str();

  for (const auto & sd : root.all_states())
    sys.states.push_back({sd.name, smt_sort_of(sd.dtype, mode), sd.dtype});
  for (const auto & vd : root.vin)
    sys.inputs.push_back({vd.name, smt_sort_of(vd.dtype, mode), vd.dtype});
  for (const auto & vd : root.wrapper_in)
    sys.inputs.push_back({vd.name, smt_sort_of(vd.dtype, mode), vd.dtype});
  for (const auto & vd : root.vout)
    sys.outputs.push_back({vd.name, smt_sort_of(vd.dtype, mode), vd.dtype});
  for (const auto & vd : root.skolems)
    sys.skolems.push_back({vd.name, smt_sort_of(vd.dtype, mode), vd.dtype});
  return sys;
}

}  // namespace blockcheck
