#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <string>

namespace blockcheck {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

// Parses a decimal literal ("1", "-3.7", "0.9", "2e-3", "1/2") exactly.
// Throws BlockcheckError on malformed input.
BigRat parse_rational(const std::string & text);

// Prints exactly: finite decimal when the reduced denominator is 2^a*5^b,
// "p/q" otherwise. Integers print with no point.
std::string print_rational(const BigRat & r);

// Floor/ceil/truncate/round-half-even of a rational to an integer.
BigInt rat_floor(const BigRat & r);
BigInt rat_ceil(const BigRat & r);
BigInt rat_trunc(const BigRat & r);
BigInt rat_round_even(const BigRat & r);

inline BigInt pow2(unsigned n) { return BigInt(1) << n; }

}  // namespace blockcheck
