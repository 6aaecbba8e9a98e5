#include "blockcheck/value.hpp"

#include "blockcheck/diag.hpp"

namespace blockcheck {

std::string Value::str() const {
  switch (kind) {
    case K::Bool: return b ? "true" : "false";
    case K::Int: return i.str();
    case K::Rat: return print_rational(r);
    case K::Float: {
      if (fp_is_nan(f)) return "nan";
      if (fp_is_inf(f)) return fp_sign(f) ? "-inf" : "inf";
      return print_rational(fp_to_rational(f)) + (fp_sign(f) && fp_is_zero(f) ? " (-0)" : "");
    }
    case K::Vec: {
      std::string s = "[";
      for (size_t k = 0; k < elems.size(); k++) s += (k ? "," : "") + elems[k].str();
      return s + "]";
    }
    case K::Bus: {
      std::string s = "{";
      bool first = true;
      for (const auto & [n, v] : members) {
        if (!first) s += ",";
        first = false;
        s += n + "=" + v.str();
      }
      return s + "}";
    }
  }
  return "?";
}

bool Value::same_as(const Value & o) const {
  if (kind != o.kind) return false;
  switch (kind) {
    case K::Bool: return b == o.b;
    case K::Int: return i == o.i;
    case K::Rat: return r == o.r;
    case K::Float: return fp_same_value(f, o.f);
    case K::Vec: {
      if (elems.size() != o.elems.size()) return false;
      for (size_t k = 0; k < elems.size(); k++)
        if (!elems[k].same_as(o.elems[k])) return false;
      return true;
    }
    case K::Bus: {
      if (members.size() != o.members.size()) return false;
      for (const auto & [n, v] : members) {
        auto it = o.members.find(n);
        if (it == o.members.end() || !v.same_as(it->second)) return false;
      }
      return true;
    }
  }
  return false;
}

BigRat value_to_rational(const Value & v) {
  switch (v.kind) {
    case Value::K::Int: return BigRat(v.i);
    case Value::K::Rat: return v.r;
    case Value::K::Float: return fp_to_rational(v.f);
    case Value::K::Bool: return v.b ? 1 : 0;
    default: throw BlockcheckError("value_to_rational on structured value");
  }
}

BigInt machine_wrap(const BigInt & v, const DataType & t) {
  BigInt m = pow2(t.bits);
  BigInt r = v % m;
  if (r < 0) r += m;
  if (t.kind == DataType::Kind::Int && r >= pow2(t.bits - 1)) r -= m;
  return r;
}

BigInt machine_clamp(const BigInt & v, const DataType & t) {
  BigInt lo = int_min_value(t), hi = int_max_value(t);
  if (v < lo) return lo;
  if (v > hi) return hi;
  return v;
}

BigInt machine_div(const BigInt & a, const BigInt & b, const DataType & t) {
  if (b == 0) {
    // bvudiv x 0 = all-ones; bvsdiv x 0 = (x >= 0 ? -1 : 1).
    if (t.kind == DataType::Kind::UInt) return int_max_value(t);
    return a >= 0 ? BigInt(-1) : BigInt(1);
  }
  BigInt q = a / b;  // cpp_int division truncates toward zero
  return machine_wrap(q, t);
}

Value value_cast(const Value & v, const DataType & target, Rounding rounding, bool saturate) {
  if (!v.is_scalar() || !target.is_scalar())
    throw BlockcheckError("value_cast on structured value or type");
  if (target.kind == DataType::Kind::Boolean) {
    if (v.kind == Value::K::Bool) return v;
    if (v.kind == Value::K::Float && fp_is_nan(v.f)) return Value::make_bool(true);
    return Value::make_bool(value_to_rational(v) != 0);
  }
  if (v.kind == Value::K::Bool)
    return value_cast(Value::make_int(v.b ? 1 : 0), target, rounding, saturate);

  if (target.kind == DataType::Kind::Float) {
    if (v.kind == Value::K::Float) {
      if (fp_is_nan(v.f)) return Value::make_float(fp_nan(target.prec));
      if (fp_is_inf(v.f)) return Value::make_float(fp_inf(target.prec, fp_sign(v.f)));
      return Value::make_float(fp_from_rational(fp_to_rational(v.f), target.prec,
                                                fp_sign(v.f) && fp_is_zero(v.f)));
    }
    return Value::make_float(fp_from_rational(value_to_rational(v), target.prec));
  }

  // Integer target.
  if (v.kind == Value::K::Float && fp_is_nan(v.f))
    throw BlockcheckError("NaN cast to integer type");
  BigRat x;
  if (v.kind == Value::K::Float && fp_is_inf(v.f)) {
    // Infinity clamps under saturation; wraps from the range edge otherwise.
    return Value::make_int(fp_sign(v.f) ? int_min_value(target) : int_max_value(target));
  }
  x = value_to_rational(v);
  BigInt rounded;
  switch (rounding) {
    case Rounding::Floor: rounded = rat_floor(x); break;
    case Rounding::Ceil: rounded = rat_ceil(x); break;
    case Rounding::Zero: rounded = rat_trunc(x); break;
    case Rounding::NearestEven: rounded = rat_round_even(x); break;
  }
  return Value::make_int(saturate ? machine_clamp(rounded, target)
                                  : machine_wrap(rounded, target));
}

}  // namespace blockcheck
