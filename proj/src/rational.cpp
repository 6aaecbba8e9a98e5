#include "blockcheck/rational.hpp"

#include <cctype>

#include "blockcheck/diag.hpp"

namespace blockcheck {

BigRat parse_rational(const std::string & text) {
  auto bad = [&]() -> BigRat {
    throw BlockcheckError("malformed numeric literal: '" + text + "'");
  };
  size_t i = 0, n = text.size();
  if (n == 0) return bad();
  bool neg = false;
  if (text[i] == '+' || text[i] == '-') {
    neg = text[i] == '-';
    i++;
  }
  auto slash = text.find('/', i);
  if (slash != std::string::npos) {
    BigRat num = parse_rational(text.substr(i, slash - i));
    BigRat den = parse_rational(text.substr(slash + 1));
    if (den == 0) return bad();
    BigRat r = num / den;
    return neg ? -r : r;
  }
  BigInt int_part = 0, frac_part = 0;
  unsigned frac_digits = 0;
  bool any_digit = false;
  while (i < n && std::isdigit((unsigned char)text[i])) {
    int_part = int_part * 10 + (text[i] - '0');
    any_digit = true;
    i++;
  }
  if (i < n && text[i] == '.') {
    i++;
    while (i < n && std::isdigit((unsigned char)text[i])) {
      frac_part = frac_part * 10 + (text[i] - '0');
      frac_digits++;
      any_digit = true;
      i++;
    }
  }
  if (!any_digit) return bad();
  long exp10 = 0;
  if (i < n && (text[i] == 'e' || text[i] == 'E')) {
    i++;
    bool eneg = false;
    if (i < n && (text[i] == '+' || text[i] == '-')) {
      eneg = text[i] == '-';
      i++;
    }
    if (i >= n || !std::isdigit((unsigned char)text[i])) return bad();
    while (i < n && std::isdigit((unsigned char)text[i])) {
      exp10 = exp10 * 10 + (text[i] - '0');
      if (exp10 > 100000) return bad();
      i++;
    }
    if (eneg) exp10 = -exp10;
  }
  if (i != n) return bad();

  BigInt den10 = 1;
  for (unsigned k = 0; k < frac_digits; k++) den10 *= 10;
  BigRat r = BigRat(int_part * den10 + frac_part, den10);
  if (exp10 > 0)
    for (long k = 0; k < exp10; k++) r *= 10;
  else
    for (long k = 0; k < -exp10; k++) r /= 10;
  return neg ? -r : r;
}

std::string print_rational(const BigRat & r) {
  BigInt num = numerator(r), den = denominator(r);
  bool neg = num < 0;
  if (neg) num = -num;
  // Count factors of 2 and 5 in den; decimal iff nothing else remains.
  BigInt d = den;
  unsigned twos = 0, fives = 0;
  while (d % 2 == 0) {
    d /= 2;
    twos++;
  }
  while (d % 5 == 0) {
    d /= 5;
    fives++;
  }
  if (d != 1) {
    std::string s = num.str() + "/" + den.str();
    return neg ? "-" + s : s;
  }
  // Scale to 10^k with k = max(twos, fives).
  unsigned k = twos > fives ? twos : fives;
  BigInt scale = 1;
  for (unsigned i = 0; i < k; i++) scale *= 10;
  BigInt scaled = num * (scale / den);
  std::string digits = scaled.str();
  std::string out;
  if (k == 0) {
    out = digits;
  } else {
    if (digits.size() <= k) digits.insert(0, k + 1 - digits.size(), '0');
    out = digits.substr(0, digits.size() - k) + "." + digits.substr(digits.size() - k);
    // Trim trailing zeros but keep at least one fractional digit.
    while (out.back() == '0' && out[out.size() - 2] != '.') out.pop_back();
  }
  return neg ? "-" + out : out;
}

BigInt rat_floor(const BigRat & r) {
  BigInt num = numerator(r), den = denominator(r);
  BigInt q = num / den;
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

BigInt rat_ceil(const BigRat & r) { return -rat_floor(-r); }

BigInt rat_trunc(const BigRat & r) { return numerator(r) / denominator(r); }

BigInt rat_round_even(const BigRat & r) {
  BigInt fl = rat_floor(r);
  BigRat frac = r - BigRat(fl);
  if (frac < BigRat(1, 2)) return fl;
  if (frac > BigRat(1, 2)) return fl + 1;
  return (fl % 2 == 0) ? fl : fl + 1;
}

}  // namespace blockcheck
