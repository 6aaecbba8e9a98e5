#include "blockcheck/fpbits.hpp"

#include <bit>
#include <cmath>

#include "blockcheck/diag.hpp"

namespace blockcheck {

unsigned fp_eb(FloatPrec p) {
  switch (p) {
    case FloatPrec::Half: return 5;
    case FloatPrec::Single: return 8;
    default: return 11;
  }
}

unsigned fp_sb(FloatPrec p) {
  switch (p) {
    case FloatPrec::Half: return 11;
    case FloatPrec::Single: return 24;
    default: return 53;
  }
}

unsigned fp_width(FloatPrec p) { return fp_eb(p) + fp_sb(p); }

int fp_bias(FloatPrec p) { return (1 << (fp_eb(p) - 1)) - 1; }

static uint64_t mask(unsigned n) { return n >= 64 ? ~0ull : ((1ull << n) - 1); }

bool fp_sign(FpBits v) { return (v.bits >> (fp_width(v.prec) - 1)) & 1; }

uint64_t fp_exp_field(FpBits v) {
  return (v.bits >> (fp_sb(v.prec) - 1)) & mask(fp_eb(v.prec));
}

uint64_t fp_sig_field(FpBits v) { return v.bits & mask(fp_sb(v.prec) - 1); }

bool fp_is_nan(FpBits v) {
  return fp_exp_field(v) == mask(fp_eb(v.prec)) && fp_sig_field(v) != 0;
}

bool fp_is_inf(FpBits v) {
  return fp_exp_field(v) == mask(fp_eb(v.prec)) && fp_sig_field(v) == 0;
}

bool fp_is_zero(FpBits v) { return fp_exp_field(v) == 0 && fp_sig_field(v) == 0; }

bool fp_is_finite(FpBits v) { return fp_exp_field(v) != mask(fp_eb(v.prec)); }

FpBits fp_zero(FloatPrec p, bool negative) {
  return {p, negative ? (1ull << (fp_width(p) - 1)) : 0ull};
}

FpBits fp_inf(FloatPrec p, bool negative) {
  uint64_t b = mask(fp_eb(p)) << (fp_sb(p) - 1);
  if (negative) b |= 1ull << (fp_width(p) - 1);
  return {p, b};
}

FpBits fp_nan(FloatPrec p) {
  // Canonical quiet NaN.
  uint64_t b = (mask(fp_eb(p)) << (fp_sb(p) - 1)) | (1ull << (fp_sb(p) - 2));
  return {p, b};
}

FpBits fp_from_rational(const BigRat & r, FloatPrec p, bool negative_zero) {
  if (r == 0) return fp_zero(p, negative_zero);
  bool neg = r < 0;
  BigRat a = neg ? -r : r;
  const unsigned sb = fp_sb(p);
  const int bias = fp_bias(p);
  const int emax = bias;
  const int emin = 1 - bias;

  // e = floor(log2 a), estimated from bit lengths then adjusted so that
  // 2^e <= a < 2^{e+1}.
  BigInt num = numerator(a), den = denominator(a);
  long e = (long)msb(num) - (long)msb(den);
  {
    BigRat lo = e >= 0 ? BigRat(pow2((unsigned)e)) : BigRat(1, pow2((unsigned)-e));
    if (a < lo) {
      e--;
    } else if (a >= lo * 2) {
      e++;
    }
  }

  long shift;  // s = round_even(a * 2^shift)
  bool subnormal = e < emin;
  if (subnormal)
    shift = (long)sb - 1 - emin;
  else
    shift = (long)sb - 1 - e;

  BigRat scaled = a;
  if (shift >= 0)
    scaled *= BigRat(pow2((unsigned)shift));
  else
    scaled /= BigRat(pow2((unsigned)-shift));
  BigInt s = rat_round_even(scaled);

  if (!subnormal && s == pow2(sb)) {
    s = pow2(sb - 1);
    e++;
  }
  if (subnormal && s == pow2(sb - 1)) {
    subnormal = false;
    e = emin;
  }
  if (e > emax) return fp_inf(p, neg);
  if (s == 0) return fp_zero(p, neg);

  uint64_t exp_field, sig_field;
  if (subnormal) {
    exp_field = 0;
    sig_field = (uint64_t)s;
  } else {
    exp_field = (uint64_t)(e + bias);
    sig_field = (uint64_t)(s - pow2(sb - 1));
  }
  uint64_t b = (exp_field << (sb - 1)) | sig_field;
  if (neg) b |= 1ull << (fp_width(p) - 1);
  return {p, b};
}

BigRat fp_to_rational(FpBits v) {
  if (!fp_is_finite(v)) throw BlockcheckError("fp_to_rational on NaN/inf");
  const unsigned sb = fp_sb(v.prec);
  const int bias = fp_bias(v.prec);
  uint64_t ef = fp_exp_field(v), sf = fp_sig_field(v);
  BigInt sig;
  long e;
  if (ef == 0) {
    sig = sf;
    e = 1 - bias - ((long)sb - 1);
  } else {
    sig = BigInt(sf) + pow2(sb - 1);
    e = (long)ef - bias - ((long)sb - 1);
  }
  BigRat r(sig);
  if (e >= 0)
    r *= BigRat(pow2((unsigned)e));
  else
    r /= BigRat(pow2((unsigned)-e));
  return fp_sign(v) ? -r : r;
}

FpBits fp_from_double(double d) { return {FloatPrec::Double, std::bit_cast<uint64_t>(d)}; }

FpBits fp_from_float(float f) { return {FloatPrec::Single, std::bit_cast<uint32_t>(f)}; }

double fp_bits_to_double(FpBits v) { return std::bit_cast<double>(v.bits); }

float fp_bits_to_float(FpBits v) { return std::bit_cast<float>((uint32_t)v.bits); }

// Half <-> float, exact widening / RNE narrowing.
static float half_to_float(FpBits v) {
  if (fp_is_nan(v)) return std::bit_cast<float>(0x7FC00000u);
  if (fp_is_inf(v)) return fp_sign(v) ? -INFINITY : INFINITY;
  if (fp_is_zero(v)) return fp_sign(v) ? -0.0f : 0.0f;
  BigRat r = fp_to_rational(v);
  FpBits f = fp_from_rational(r, FloatPrec::Single);  // exact: half subset of single
  return fp_bits_to_float(f);
}

static FpBits float_to_half(float f) {
  FpBits s = fp_from_float(f);
  if (fp_is_nan(s)) return fp_nan(FloatPrec::Half);
  if (fp_is_inf(s)) return fp_inf(FloatPrec::Half, fp_sign(s));
  if (fp_is_zero(s)) return fp_zero(FloatPrec::Half, fp_sign(s));
  return fp_from_rational(fp_to_rational(s), FloatPrec::Half);
}

template <typename F>
static FpBits binop(FpBits a, FpBits b, F && host) {
  switch (a.prec) {
    case FloatPrec::Double:
      return fp_from_double(host(fp_bits_to_double(a), fp_bits_to_double(b)));
    case FloatPrec::Single:
      return fp_from_float(host(fp_bits_to_float(a), fp_bits_to_float(b)));
    default:
      return float_to_half(host(half_to_float(a), half_to_float(b)));
  }
}

FpBits fp_add(FpBits a, FpBits b) { return binop(a, b, [](auto x, auto y) { return x + y; }); }
FpBits fp_sub(FpBits a, FpBits b) { return binop(a, b, [](auto x, auto y) { return x - y; }); }
FpBits fp_mul(FpBits a, FpBits b) { return binop(a, b, [](auto x, auto y) { return x * y; }); }
FpBits fp_div(FpBits a, FpBits b) { return binop(a, b, [](auto x, auto y) { return x / y; }); }

FpBits fp_neg(FpBits a) {
  a.bits ^= 1ull << (fp_width(a.prec) - 1);
  return a;
}

FpBits fp_abs(FpBits a) {
  a.bits &= ~(1ull << (fp_width(a.prec) - 1));
  return a;
}

FpBits fp_min(FpBits a, FpBits b) {
  if (fp_is_nan(a)) return b;
  if (fp_is_nan(b)) return a;
  if (fp_is_zero(a) && fp_is_zero(b)) return fp_sign(a) ? a : b;
  return fp_lt(b, a) ? b : a;
}

FpBits fp_max(FpBits a, FpBits b) {
  if (fp_is_nan(a)) return b;
  if (fp_is_nan(b)) return a;
  if (fp_is_zero(a) && fp_is_zero(b)) return fp_sign(a) ? b : a;
  return fp_lt(a, b) ? b : a;
}

bool fp_lt(FpBits a, FpBits b) {
  if (fp_is_nan(a) || fp_is_nan(b)) return false;
  if (fp_is_inf(a)) return fp_sign(a) && !(fp_is_inf(b) && fp_sign(b));
  if (fp_is_inf(b)) return !fp_sign(b);
  return fp_to_rational(a) < fp_to_rational(b);
}

bool fp_le(FpBits a, FpBits b) {
  if (fp_is_nan(a) || fp_is_nan(b)) return false;
  return fp_lt(a, b) || fp_eq(a, b);
}

bool fp_eq(FpBits a, FpBits b) {
  if (fp_is_nan(a) || fp_is_nan(b)) return false;
  if (fp_is_inf(a) || fp_is_inf(b))
    return fp_is_inf(a) && fp_is_inf(b) && fp_sign(a) == fp_sign(b);
  return fp_to_rational(a) == fp_to_rational(b);
}

bool fp_same_value(FpBits a, FpBits b) {
  if (a.prec != b.prec) return false;
  if (fp_is_nan(a) || fp_is_nan(b)) return fp_is_nan(a) && fp_is_nan(b);
  return a.bits == b.bits;
}

FpBits fp_convert(FpBits v, FloatPrec target) {
  if (v.prec == target) return v;
  if (fp_is_nan(v)) return fp_nan(target);
  if (fp_is_inf(v)) return fp_inf(target, fp_sign(v));
  if (fp_is_zero(v)) return fp_zero(target, fp_sign(v));
  return fp_from_rational(fp_to_rational(v), target);
}

}  // namespace blockcheck
