#pragma once

#include "blockcheck/ir.hpp"
#include "blockcheck/smtlib.hpp"

namespace blockcheck {

// Which SMT image of the model to print. Approx maps machine ints to
// unbounded Int and floats to Real (ideal arithmetic, no overflow and no
// rounding error); Exact maps them to bit-vectors and IEEE floats.
enum class EncMode { Approx, Exact };

// Global constant names shared between the printed preamble and the checks a
// session issues. curr_step is the step under scrutiny, flag_kind switches
// the induction hypothesis on, g_init guards the initial-state constraint.
inline constexpr const char * kCurrStep = "curr_step";
inline constexpr const char * kFlagKind = "flag_kind";
inline constexpr const char * kGInit = "g_init";
// Reserved counter parameter of every trans function.
inline constexpr const char * kCounterParam = "_c";

struct TransParam {
  std::string name;
  SmtSort sort;
  DataType dtype;
};

// The printed preamble plus everything a session needs to instantiate the
// root transition relation step by step.
struct EncodedSystem {
  EncMode mode = EncMode::Approx;
  std::string logic;
  std::string preamble;  // set-logic, sorts, objective constants, define-funs

  SmtSort counter;
  std::string init_fn, trans_fn;

  // Root signature in printed order (states follow all_states order).
  std::vector<TransParam> states;
  std::vector<TransParam> inputs;   // free external inputs per step
  std::vector<TransParam> outputs;
  std::vector<TransParam> skolems;
};

EncodedSystem encode(const SubsystemIR & root, const Objective & obj, EncMode mode,
                     const BusTable & buses);

// Sort and literal mapping shared by the encoder and the session layer.
SmtSort smt_sort_of(const DataType & t, EncMode mode);
std::string smt_literal(const Value & v, const DataType & t, EncMode mode);
std::string counter_literal(uint64_t j, EncMode mode);

}  // namespace blockcheck
