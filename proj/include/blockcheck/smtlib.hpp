#pragma once

#include "blockcheck/value.hpp"

namespace blockcheck {

// The sorts the two encodings emit.
struct SmtSort {
  enum class K { Bool, Int, Real, BitVec, Float, Named } k = K::Bool;
  unsigned width = 0;       // BitVec
  unsigned eb = 0, sb = 0;  // Float
  std::string name;         // Named (uninterpreted bus sorts)

  bool operator==(const SmtSort &) const = default;
  std::string str() const;

  static SmtSort boolean() { return {}; }
  static SmtSort int_s() {
    SmtSort s;
    s.k = K::Int;
    return s;
  }
  static SmtSort real() {
    SmtSort s;
    s.k = K::Real;
    return s;
  }
  static SmtSort bitvec(unsigned w) {
    SmtSort s;
    s.k = K::BitVec;
    s.width = w;
    return s;
  }
  static SmtSort float_s(unsigned eb, unsigned sb) {
    SmtSort s;
    s.k = K::Float;
    s.eb = eb;
    s.sb = sb;
    return s;
  }
  static SmtSort named(std::string n) {
    SmtSort s;
    s.k = K::Named;
    s.name = std::move(n);
    return s;
  }
};

// Term building is plain string assembly; these keep call sites short.
std::string app(const std::string & fn, const std::vector<std::string> & args);
std::string let1(const std::string & name, const std::string & bound, const std::string & body);

// Prints a symbol, |quoting| it when it is not a simple symbol. Throws on
// names no SMT-LIB symbol can spell ('|' or backslash).
std::string smt_symbol(const std::string & name);

// Literal printers. Bit-vector literals use the (_ bvN w) form with N the
// unsigned value; floats print as (fp ...) bit triples for every value,
// including zeros, infinities, and NaN.
std::string print_bv_literal(const BigInt & v, unsigned width);
std::string print_fp_literal(const FpBits & v);
std::string print_fp_literal(double v, FloatPrec prec);
// Decimal or (/ p q) rational literal for the Real sort; integral values
// print with a trailing .0.
std::string print_real_literal(const BigRat & r);
std::string print_int_literal(const BigInt & v);

// S-expression reader for solver replies.
struct Sexpr {
  std::string atom;  // set iff leaf
  std::vector<Sexpr> items;
  bool leaf = true;

  std::string str() const;
};

// Parses one s-expression starting at pos (skips leading whitespace);
// advances pos past it. Throws BlockcheckError on malformed input.
Sexpr parse_sexpr(const std::string & text, size_t & pos);
std::vector<Sexpr> parse_sexprs(const std::string & text);

// Interprets a solver model value against the sort it was declared with:
// numerals, decimals, (- x), (/ p q), #b/#x literals, (_ bvN w), fp triples
// with any mix of #b/#x components, and (_ +zero eb sb) style specials.
// Named sorts yield an opaque Rat 0 (their value never matters directly).
Value parse_smt_value(const Sexpr & s, const SmtSort & sort);

}  // namespace blockcheck
