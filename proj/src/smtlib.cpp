#include "blockcheck/smtlib.hpp"

#include "blockcheck/diag.hpp"

namespace blockcheck {

std::string SmtSort::str() const {
  switch (k) {
    case K::Bool: return "Bool";
    case K::Int: return "Int";
    case K::Real: return "Real";
    case K::BitVec: return "(_ BitVec " + std::to_string(width) + ")";
    case K::Float: return "(_ FloatingPoint " + std::to_string(eb) + " " + std::to_string(sb) + ")";
    case K::Named: return name;
  }
  return "Bool";
}

std::string app(const std::string & fn, const std::vector<std::string> & args) {
  if (args.empty()) return fn;
  std::string out = "(" + fn;
  for (const auto & a : args) {
    out += ' ';
    out += a;
  }
  out += ')';
  return out;
}

std::string let1(const std::string & name, const std::string & bound, const std::string & body) {
  return "(let ((" + name + " " + bound + ")) " + body + ")";
}

std::string smt_symbol(const std::string & name) {
  auto simple = [](const std::string & s) {
    if (s.empty()) return false;
    static const std::string extra = "~!@$%^&*_-+=<>.?/";
    if (s[0] >= '0' && s[0] <= '9') return false;
    for (char c : s) {
      bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                extra.find(c) != std::string::npos;
      if (!ok) return false;
    }
    return true;
  };
  if (simple(name)) return name;
  if (name.find('|') != std::string::npos || name.find('\\') != std::string::npos)
    throw BlockcheckError("identifier '" + name + "' cannot be printed as an SMT symbol");
  return "|" + name + "|";
}

std::string print_bv_literal(const BigInt & v, unsigned width) {
  BigInt m = BigInt(1) << width;
  BigInt u = v % m;
  if (u < 0) u += m;
  return "(_ bv" + u.str() + " " + std::to_string(width) + ")";
}

static std::string bits_str(uint64_t v, unsigned n) {
  std::string s(n, '0');
  for (unsigned i = 0; i < n; i++)
    if ((v >> (n - 1 - i)) & 1u) s[i] = '1';
  return s;
}

std::string print_fp_literal(const FpBits & v) {
  unsigned eb = fp_eb(v.prec), sb = fp_sb(v.prec);
  uint64_t sig = fp_sig_field(v);
  uint64_t exp = fp_exp_field(v);
  uint64_t sign = fp_sign(v) ? 1 : 0;
  return "(fp #b" + bits_str(sign, 1) + " #b" + bits_str(exp, eb) + " #b" +
         bits_str(sig, sb - 1) + ")";
}

std::string print_fp_literal(double v, FloatPrec prec) {
  return print_fp_literal(fp_convert(fp_from_double(v), prec));
}

std::string print_real_literal(const BigRat & r) {
  std::string s = print_rational(r);
  // (/ p q) for non-decimal denominators; negatives need the unary form.
  auto slash = s.find('/');
  bool neg = !s.empty() && s[0] == '-';
  std::string body = neg ? s.substr(1) : s;
  if (slash != std::string::npos) {
    slash = body.find('/');
    body = "(/ " + body.substr(0, slash) + " " + body.substr(slash + 1) + ")";
  } else if (body.find('.') == std::string::npos) {
    // Integral values still print in decimal form so the literal is
    // unambiguously a Real in strict parsers.
    body += ".0";
  }
  return neg ? "(- " + body + ")" : body;
}

std::string print_int_literal(const BigInt & v) {
  if (v < 0) {
    BigInt n = -v;
    return "(- " + n.str() + ")";
  }
  return v.str();
}

// ---------------------------------------------------------------------------
// S-expression reader

std::string Sexpr::str() const {
  if (leaf) return atom;
  std::string out = "(";
  for (size_t i = 0; i < items.size(); i++) {
    if (i) out += ' ';
    out += items[i].str();
  }
  return out + ")";
}

static void skip_ws(const std::string & t, size_t & pos) {
  while (pos < t.size()) {
    if (std::isspace((unsigned char)t[pos])) {
      pos++;
    } else if (t[pos] == ';') {
      while (pos < t.size() && t[pos] != '\n') pos++;
    } else {
      break;
    }
  }
}

Sexpr parse_sexpr(const std::string & t, size_t & pos) {
  skip_ws(t, pos);
  if (pos >= t.size()) throw BlockcheckError("unexpected end of solver reply");
  Sexpr s;
  if (t[pos] == '(') {
    pos++;
    s.leaf = false;
    while (true) {
      skip_ws(t, pos);
      if (pos >= t.size()) throw BlockcheckError("unbalanced '(' in solver reply");
      if (t[pos] == ')') {
        pos++;
        return s;
      }
      s.items.push_back(parse_sexpr(t, pos));
    }
  }
  if (t[pos] == ')') throw BlockcheckError("stray ')' in solver reply");
  if (t[pos] == '|') {
    size_t end = t.find('|', pos + 1);
    if (end == std::string::npos) throw BlockcheckError("unterminated quoted symbol");
    s.atom = t.substr(pos, end - pos + 1);
    pos = end + 1;
    return s;
  }
  if (t[pos] == '"') {
    size_t end = pos + 1;
    while (end < t.size()) {
      if (t[end] == '"') {
        if (end + 1 < t.size() && t[end + 1] == '"') {
          end += 2;
          continue;
        }
        break;
      }
      end++;
    }
    if (end >= t.size()) throw BlockcheckError("unterminated string literal");
    s.atom = t.substr(pos, end - pos + 1);
    pos = end + 1;
    return s;
  }
  size_t start = pos;
  while (pos < t.size() && !std::isspace((unsigned char)t[pos]) && t[pos] != '(' &&
         t[pos] != ')' && t[pos] != ';')
    pos++;
  s.atom = t.substr(start, pos - start);
  if (s.atom.empty()) throw BlockcheckError("empty token in solver reply");
  return s;
}

std::vector<Sexpr> parse_sexprs(const std::string & t) {
  std::vector<Sexpr> out;
  size_t pos = 0;
  while (true) {
    skip_ws(t, pos);
    if (pos >= t.size()) break;
    out.push_back(parse_sexpr(t, pos));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Model value interpretation

namespace {

BigInt parse_bits_atom(const std::string & a, unsigned * width_out) {
  // #b0101 or #x1f
  if (a.size() < 3 || a[0] != '#') throw BlockcheckError("not a bit-vector literal: " + a);
  BigInt v = 0;
  unsigned width = 0;
  if (a[1] == 'b') {
    for (size_t i = 2; i < a.size(); i++) {
      v <<= 1;
      if (a[i] == '1')
        v |= 1;
      else if (a[i] != '0')
        throw BlockcheckError("bad binary literal: " + a);
      width++;
    }
  } else if (a[1] == 'x') {
    for (size_t i = 2; i < a.size(); i++) {
      int d;
      char c = (char)std::tolower((unsigned char)a[i]);
      if (c >= '0' && c <= '9')
        d = c - '0';
      else if (c >= 'a' && c <= 'f')
        d = c - 'a' + 10;
      else
        throw BlockcheckError("bad hex literal: " + a);
      v = (v << 4) | d;
      width += 4;
    }
  } else {
    throw BlockcheckError("not a bit-vector literal: " + a);
  }
  if (width_out) *width_out = width;
  return v;
}

BigRat parse_numeric(const Sexpr & s) {
  if (s.leaf) {
    if (s.atom.size() > 1 && s.atom[0] == '#') {
      return BigRat(parse_bits_atom(s.atom, nullptr));
    }
    return parse_rational(s.atom);
  }
  if (!s.items.empty() && s.items[0].leaf) {
    const std::string & h = s.items[0].atom;
    if (h == "-" && s.items.size() == 2) return -parse_numeric(s.items[1]);
    if (h == "/" && s.items.size() == 3)
      return parse_numeric(s.items[1]) / parse_numeric(s.items[2]);
    if (h == "_" && s.items.size() >= 3 && s.items[1].atom.rfind("bv", 0) == 0)
      return BigRat(BigInt(s.items[1].atom.substr(2)));
  }
  throw BlockcheckError("cannot interpret solver value " + s.str());
}

FpBits parse_fp_value(const Sexpr & s, unsigned eb, unsigned sb) {
  FloatPrec prec;
  if (eb == 5 && sb == 11)
    prec = FloatPrec::Half;
  else if (eb == 8 && sb == 24)
    prec = FloatPrec::Single;
  else if (eb == 11 && sb == 53)
    prec = FloatPrec::Double;
  else
    throw BlockcheckError("unsupported floating-point format " + std::to_string(eb) + "/" +
                          std::to_string(sb));

  if (!s.leaf && s.items.size() == 4 && s.items[0].atom == "fp") {
    unsigned w1 = 0, w2 = 0, w3 = 0;
    BigInt sign = parse_bits_atom(s.items[1].atom, &w1);
    BigInt exp = parse_bits_atom(s.items[2].atom, &w2);
    BigInt sig = parse_bits_atom(s.items[3].atom, &w3);
    // Hex components can be wider than the field; mask to the field width.
    exp &= (BigInt(1) << eb) - 1;
    sig &= (BigInt(1) << (sb - 1)) - 1;
    FpBits out;
    out.prec = prec;
    out.bits = (sign.convert_to<uint64_t>() << (eb + sb - 1)) |
               (exp.convert_to<uint64_t>() << (sb - 1)) | sig.convert_to<uint64_t>();
    return out;
  }
  if (!s.leaf && s.items.size() == 4 && s.items[0].atom == "_") {
    const std::string & w = s.items[1].atom;
    if (w == "+zero") return fp_zero(prec, false);
    if (w == "-zero") return fp_zero(prec, true);
    if (w == "+oo") return fp_inf(prec, false);
    if (w == "-oo") return fp_inf(prec, true);
    if (w == "NaN") return fp_nan(prec);
  }
  throw BlockcheckError("cannot interpret floating-point value " + s.str());
}

}  // namespace

Value parse_smt_value(const Sexpr & s, const SmtSort & sort) {
  switch (sort.k) {
    case SmtSort::K::Bool: {
      if (s.leaf && s.atom == "true") return Value::make_bool(true);
      if (s.leaf && s.atom == "false") return Value::make_bool(false);
      throw BlockcheckError("expected boolean, got " + s.str());
    }
    case SmtSort::K::Int: {
      BigRat r = parse_numeric(s);
      if (denominator(r) != 1) throw BlockcheckError("expected integer, got " + s.str());
      return Value::make_int(numerator(r));
    }
    case SmtSort::K::Real: return Value::make_rat(parse_numeric(s));
    case SmtSort::K::BitVec: {
      if (s.leaf && s.atom.size() > 1 && s.atom[0] == '#')
        return Value::make_int(parse_bits_atom(s.atom, nullptr));
      BigRat r = parse_numeric(s);
      return Value::make_int(numerator(r));
    }
    case SmtSort::K::Float: return Value::make_float(parse_fp_value(s, sort.eb, sort.sb));
    case SmtSort::K::Named: return Value::make_rat(0);
  }
  throw BlockcheckError("unhandled sort");
}

}  // namespace blockcheck
