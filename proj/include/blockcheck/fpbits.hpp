#pragma once

#include <cstdint>
#include <string>

#include "blockcheck/rational.hpp"

namespace blockcheck {

enum class FloatPrec { Half, Single, Double };

// Exponent / significand widths (significand counts the hidden bit).
unsigned fp_eb(FloatPrec p);
unsigned fp_sb(FloatPrec p);
unsigned fp_width(FloatPrec p);
int fp_bias(FloatPrec p);

// IEEE-754 value as a raw bit pattern; the only float representation used
// outside the simulator's machine-mode hot path.
struct FpBits {
  FloatPrec prec = FloatPrec::Double;
  uint64_t bits = 0;

  bool operator==(const FpBits &) const = default;
};

bool fp_sign(FpBits v);
uint64_t fp_exp_field(FpBits v);
uint64_t fp_sig_field(FpBits v);
bool fp_is_nan(FpBits v);
bool fp_is_inf(FpBits v);
bool fp_is_zero(FpBits v);
bool fp_is_finite(FpBits v);

FpBits fp_zero(FloatPrec p, bool negative);
FpBits fp_inf(FloatPrec p, bool negative);
FpBits fp_nan(FloatPrec p);

// Round-to-nearest-even conversion from an exact rational. Overflow goes to
// the right infinity; zero keeps the requested sign.
FpBits fp_from_rational(const BigRat & r, FloatPrec p, bool negative_zero = false);

// Exact value of a finite pattern. Throws on NaN/infinity.
BigRat fp_to_rational(FpBits v);

// Host interop (bit_cast; half has no host type).
FpBits fp_from_double(double d);
FpBits fp_from_float(float f);
double fp_bits_to_double(FpBits v);  // pre: prec == Double
float fp_bits_to_float(FpBits v);    // pre: prec == Single

// Machine arithmetic, IEEE-754 RNE in the pattern's own precision.
// Half runs through single (exact widening; the double rounding is harmless
// for these operations at these widths).
FpBits fp_add(FpBits a, FpBits b);
FpBits fp_sub(FpBits a, FpBits b);
FpBits fp_mul(FpBits a, FpBits b);
FpBits fp_div(FpBits a, FpBits b);
FpBits fp_neg(FpBits a);
FpBits fp_abs(FpBits a);
// SMT-LIB fp.min/fp.max: a NaN operand yields the other one.
FpBits fp_min(FpBits a, FpBits b);
FpBits fp_max(FpBits a, FpBits b);

// IEEE comparisons (false when either side is NaN).
bool fp_lt(FpBits a, FpBits b);
bool fp_le(FpBits a, FpBits b);
bool fp_eq(FpBits a, FpBits b);

// Identity in the SMT FloatingPoint sense: all NaNs are one value, +0 and -0
// are distinct.
bool fp_same_value(FpBits a, FpBits b);

// Cast between precisions (RNE).
FpBits fp_convert(FpBits v, FloatPrec target);

}  // namespace blockcheck
