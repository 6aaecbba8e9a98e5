#pragma once

#include <memory>
#include <string>
#include <vector>

#include "blockcheck/rational.hpp"

namespace blockcheck {

// Property expression AST per the dialect grammar:
//   expr := or; or := and ("||" and)*; and := cmp ("&&" cmp)*;
//   cmp := sum (("<"|"<="|">"|">="|"=="|"!=") sum)?;
//   sum := prod (("+"|"-") prod)*; prod := atom (("*"|"/") atom)*;
//   atom := number | "true" | "false" | "sig(" ref ")" | "state(" ref ")"
//         | "!" atom | "(" expr ")"
// A ref is "BlockId/port" (port defaults to 1) with optional nested path
// segments "Sub/Block/2", resolved relative to the property scope.
struct PropExpr {
  enum class K {
    Num, BoolLit, Sig, State, Not, And, Or,
    Lt, Le, Gt, Ge, EqCmp, Ne,
    Add, Sub, Mul, Div, Neg
  } kind;
  BigRat num;               // Num
  std::string text;         // Num: original spelling
  bool bval = false;        // BoolLit
  std::vector<std::string> ref_path;  // Sig/State: block path within scope
  unsigned ref_port = 1;              // Sig: outport index (1-based)
  std::vector<std::shared_ptr<PropExpr>> args;
};

using PropExprPtr = std::shared_ptr<PropExpr>;

// Throws BlockcheckError with position info on malformed input.
PropExprPtr parse_prop_expr(const std::string & text);

std::string print_prop_expr(const PropExpr & e);

}  // namespace blockcheck
