#include "blockcheck/propexpr.hpp"

#include <cctype>

#include "blockcheck/diag.hpp"

namespace blockcheck {

namespace {

struct Parser {
  const std::string & s;
  size_t pos = 0;

  explicit Parser(const std::string & text) : s(text) {}

  void skip_ws() {
    while (pos < s.size() && std::isspace((unsigned char)s[pos])) pos++;
  }
  bool eat(const std::string & tok) {
    skip_ws();
    if (s.compare(pos, tok.size(), tok) == 0) {
      pos += tok.size();
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos < s.size() ? s[pos] : '\0';
  }
  [[noreturn]] void fail(const std::string & what) {
    throw BlockcheckError("property expression: " + what + " at offset " +
                          std::to_string(pos) + " in '" + s + "'");
  }

  PropExprPtr mk(PropExpr::K k, std::vector<PropExprPtr> args = {}) {
    auto e = std::make_shared<PropExpr>();
    e->kind = k;
    e->args = std::move(args);
    return e;
  }

  PropExprPtr parse_expr() { return parse_or(); }

  PropExprPtr parse_or() {
    auto l = parse_and();
    while (eat("||")) l = mk(PropExpr::K::Or, {l, parse_and()});
    return l;
  }

  PropExprPtr parse_and() {
    auto l = parse_cmp();
    while (eat("&&")) l = mk(PropExpr::K::And, {l, parse_cmp()});
    return l;
  }

  PropExprPtr parse_cmp() {
    auto l = parse_sum();
    skip_ws();
    PropExpr::K k;
    if (eat("<=")) k = PropExpr::K::Le;
    else if (eat(">=")) k = PropExpr::K::Ge;
    else if (eat("==")) k = PropExpr::K::EqCmp;
    else if (eat("!=")) k = PropExpr::K::Ne;
    else if (peek() == '<') { pos++; k = PropExpr::K::Lt; }
    else if (peek() == '>') { pos++; k = PropExpr::K::Gt; }
    else return l;
    return mk(k, {l, parse_sum()});
  }

  PropExprPtr parse_sum() {
    auto l = parse_prod();
    while (true) {
      skip_ws();
      if (eat("+")) l = mk(PropExpr::K::Add, {l, parse_prod()});
      else if (peek() == '-') { pos++; l = mk(PropExpr::K::Sub, {l, parse_prod()}); }
      else return l;
    }
  }

  PropExprPtr parse_prod() {
    auto l = parse_atom();
    while (true) {
      skip_ws();
      if (eat("*")) l = mk(PropExpr::K::Mul, {l, parse_atom()});
      else if (eat("/")) l = mk(PropExpr::K::Div, {l, parse_atom()});
      else return l;
    }
  }

  PropExprPtr parse_atom() {
    skip_ws();
    if (eat("!")) return mk(PropExpr::K::Not, {parse_atom()});
    if (eat("(")) {
      auto e = parse_expr();
      if (!eat(")")) fail("expected ')'");
      return e;
    }
    if (eat("true")) {
      auto e = mk(PropExpr::K::BoolLit);
      e->bval = true;
      return e;
    }
    if (eat("false")) {
      auto e = mk(PropExpr::K::BoolLit);
      e->bval = false;
      return e;
    }
    if (eat("sig(")) return parse_ref(PropExpr::K::Sig);
    if (eat("state(")) return parse_ref(PropExpr::K::State);
    char c = peek();
    if (std::isdigit((unsigned char)c) || c == '.') return parse_number(false);
    if (c == '-') {
      pos++;
      char d = peek();
      if (std::isdigit((unsigned char)d) || d == '.') return parse_number(true);
      return mk(PropExpr::K::Neg, {parse_atom()});
    }
    fail("expected atom");
  }

  PropExprPtr parse_number(bool neg) {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() &&
           (std::isdigit((unsigned char)s[pos]) || s[pos] == '.' || s[pos] == 'e' ||
            s[pos] == 'E' ||
            ((s[pos] == '+' || s[pos] == '-') && (s[pos - 1] == 'e' || s[pos - 1] == 'E'))))
      pos++;
    std::string lit = s.substr(start, pos - start);
    auto e = mk(PropExpr::K::Num);
    e->text = (neg ? "-" : "") + lit;
    e->num = parse_rational(e->text);
    return e;
  }

  PropExprPtr parse_ref(PropExpr::K kind) {
    skip_ws();
    size_t start = pos;
    while (pos < s.size() && s[pos] != ')') pos++;
    if (pos >= s.size()) fail("unterminated reference");
    std::string ref = s.substr(start, pos - start);
    pos++;  // ')'
    // Trim and split on '/'. A trailing all-digit segment is the port index.
    std::vector<std::string> segs;
    size_t p = 0;
    while (true) {
      size_t slash = ref.find('/', p);
      std::string seg = ref.substr(p, slash == std::string::npos ? std::string::npos : slash - p);
      size_t a = seg.find_first_not_of(" \t");
      size_t b = seg.find_last_not_of(" \t");
      if (a == std::string::npos) fail("empty reference segment");
      segs.push_back(seg.substr(a, b - a + 1));
      if (slash == std::string::npos) break;
      p = slash + 1;
    }
    auto e = mk(kind);
    e->ref_port = 1;
    if (segs.size() > 1) {
      const std::string & last = segs.back();
      bool digits = !last.empty();
      for (char c : last)
        if (!std::isdigit((unsigned char)c)) digits = false;
      if (digits) {
        e->ref_port = (unsigned)std::stoul(last);
        segs.pop_back();
        if (e->ref_port == 0) fail("port index is 1-based");
      }
    }
    if (segs.empty()) fail("empty reference");
    e->ref_path = segs;
    return e;
  }
};

}  // namespace

PropExprPtr parse_prop_expr(const std::string & text) {
  Parser p(text);
  auto e = p.parse_expr();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing input");
  return e;
}

std::string print_prop_expr(const PropExpr & e) {
  auto bin = [&](const char * op) {
    return "(" + print_prop_expr(*e.args[0]) + " " + op + " " + print_prop_expr(*e.args[1]) + ")";
  };
  switch (e.kind) {
    case PropExpr::K::Num: return e.text.empty() ? print_rational(e.num) : e.text;
    case PropExpr::K::BoolLit: return e.bval ? "true" : "false";
    case PropExpr::K::Sig:
    case PropExpr::K::State: {
      std::string r;
      for (const auto & s : e.ref_path) r += (r.empty() ? "" : "/") + s;
      if (e.kind == PropExpr::K::Sig) r += "/" + std::to_string(e.ref_port);
      return (e.kind == PropExpr::K::Sig ? "sig(" : "state(") + r + ")";
    }
    case PropExpr::K::Not: return "!" + print_prop_expr(*e.args[0]);
    case PropExpr::K::Neg: return "-" + print_prop_expr(*e.args[0]);
    case PropExpr::K::And: return bin("&&");
    case PropExpr::K::Or: return bin("||");
    case PropExpr::K::Lt: return bin("<");
    case PropExpr::K::Le: return bin("<=");
    case PropExpr::K::Gt: return bin(">");
    case PropExpr::K::Ge: return bin(">=");
    case PropExpr::K::EqCmp: return bin("==");
    case PropExpr::K::Ne: return bin("!=");
    case PropExpr::K::Add: return bin("+");
    case PropExpr::K::Sub: return bin("-");
    case PropExpr::K::Mul: return bin("*");
    case PropExpr::K::Div: return bin("/");
  }
  return "?";
}

}  // namespace blockcheck
