#pragma once

#include <map>
#include <string>
#include <vector>

#include "blockcheck/dtype.hpp"

namespace blockcheck {

// Runtime value. Machine integers carry their semantic value (already within
// range); floats are raw bit patterns; Rat is the ideal-arithmetic carrier.
struct Value {
  enum class K { Bool, Int, Rat, Float, Vec, Bus } kind = K::Rat;
  bool b = false;
  BigInt i;
  BigRat r;
  FpBits f;
  std::vector<Value> elems;               // Vec (row-major for matrices)
  std::map<std::string, Value> members;   // Bus

  static Value make_bool(bool v) {
    Value x;
    x.kind = K::Bool;
    x.b = v;
    return x;
  }
  static Value make_int(BigInt v) {
    Value x;
    x.kind = K::Int;
    x.i = std::move(v);
    return x;
  }
  static Value make_rat(BigRat v) {
    Value x;
    x.kind = K::Rat;
    x.r = std::move(v);
    return x;
  }
  static Value make_float(FpBits v) {
    Value x;
    x.kind = K::Float;
    x.f = v;
    return x;
  }

  bool is_scalar() const { return kind != K::Vec && kind != K::Bus; }
  std::string str() const;
  bool same_as(const Value & o) const;  // structural; floats via fp_same_value
};

enum class Rounding { Floor, NearestEven, Zero, Ceil };

// Shared conversion semantics for DataTypeConversion blocks, the simulator,
// and constant lowering. Float targets round RNE; integer targets round per
// mode then wrap mod 2^n or clamp.
// NaN to an integer target throws (the simulator's contract).
Value value_cast(const Value & v, const DataType & target, Rounding rounding, bool saturate);

// Exact rational view of a scalar numeric value (finite floats only).
BigRat value_to_rational(const Value & v);

// Machine-integer arithmetic matching the bit-vector operators: wrap mod 2^n,
// division truncates toward zero, division by zero follows bvudiv/bvsdiv.
BigInt machine_wrap(const BigInt & v, const DataType & t);
BigInt machine_clamp(const BigInt & v, const DataType & t);
BigInt machine_div(const BigInt & a, const BigInt & b, const DataType & t);

}  // namespace blockcheck
