#pragma once

#include "blockcheck/frontend.hpp"

namespace blockcheck {

// Scalar expression over subsystem variables. Block semantics are lowered to
// these trees once; the encoder prints them per mode and the simulator
// interprets them, so the two always share one meaning.
struct IRExpr;
using IRExprPtr = std::shared_ptr<const IRExpr>;

enum class IROp {
  Add, Sub, Mul, Div, Min, Max,
  And, Or, Xor,
  Lt, Le, Gt, Ge, Eq, Ne,
  Neg, Abs, Not
};

struct IRExpr {
  enum class K { Const, Var, StateRead, Unary, Binary, Ite, Cast, BusMember } k;
  IROp op = IROp::Add;
  // Const: exact value plus the original decimal spelling when one exists.
  Value cval;
  std::string ctext;
  // Var/StateRead: variable name.
  std::string name;
  std::string member;  // BusMember: flattened member path within carrier `a`
  DataType dtype;      // result type
  IRExprPtr a, b, c;   // operands (c: ite else-branch)
  Rounding rounding = Rounding::Floor;  // Cast
  bool saturate = false;                // Cast

  static IRExprPtr constant(Value v, DataType t, std::string text = "");
  static IRExprPtr var(std::string name, DataType t);
  static IRExprPtr state_read(std::string name, DataType t);
  static IRExprPtr unary(IROp op, IRExprPtr a, DataType t);
  static IRExprPtr binary(IROp op, IRExprPtr a, IRExprPtr b, DataType t);
  static IRExprPtr ite(IRExprPtr cond, IRExprPtr then_e, IRExprPtr else_e);
  static IRExprPtr cast(IRExprPtr a, DataType target, Rounding r, bool sat);
  static IRExprPtr bus_member(IRExprPtr carrier, std::string member, DataType t);
};

struct VarDecl {
  std::string name;
  DataType dtype;  // scalar, or bus (carrier variables)
};

struct StateDecl {
  std::string name;
  DataType dtype;
  Value init;
  std::string init_text;  // decimal spelling for exact literal printing
};

enum class ActivationKind { None, Enabled, Triggered, RateDivided };
enum class TriggerEdge { Rising, Falling, Either };

struct Activation {
  ActivationKind kind = ActivationKind::None;
  TriggerEdge edge = TriggerEdge::Rising;
  unsigned divisor = 1;  // RateDivided
};

// One body step, listed in dependency order; the encoder prints Local steps
// as nested lets and everything else as conjuncts, the simulator executes
// them in sequence.
//
// A ChildCall's arguments are implied by naming: the call binds the child's
// inputs, outputs, activation input, and transitive skolems to this
// subsystem's skolems "<childId>.<name>". Input and activation skolems are
// pinned by preceding SkolemEq steps; output skolems are defined by the call.
struct IRStep {
  enum class K { Local, ChildCall, SkolemEq, BusMake, OutputEq, StateNextEq } k;
  std::string lhs;  // Local/SkolemEq/OutputEq/StateNextEq target; BusMake carrier
  IRExprPtr rhs;
  size_t child = 0;  // ChildCall: index into children
  std::vector<std::pair<std::string, IRExprPtr>> members;  // BusMake accessor pins
};

struct SubsystemIR {
  std::string name;                // dotted path; root carries the model name
  std::vector<std::string> path;
  Activation activation;

  std::vector<VarDecl> vin;        // body inputs (flattened ports)
  std::vector<VarDecl> wrapper_in; // activation inputs (_en / _tr)
  std::vector<VarDecl> vout;
  std::vector<StateDecl> wrapper_states;  // hold/counter/prev-trigger vars
  std::vector<StateDecl> states;          // own block states then children's (qualified)
  size_t own_state_count = 0;             // prefix of `states` owned directly
  std::vector<VarDecl> skolems;    // child ports, stubs, unconstrained casts

  std::vector<IRStep> steps;
  std::vector<std::unique_ptr<SubsystemIR>> children;  // order of SubSystem blocks
  std::vector<std::string> child_ids;

  bool contains_stub = false;  // here or below

  // All states the parent must thread: wrapper states then body states.
  std::vector<StateDecl> all_states() const {
    std::vector<StateDecl> out = wrapper_states;
    out.insert(out.end(), states.begin(), states.end());
    return out;
  }
  const SubsystemIR * find(const std::vector<std::string> & p) const;
};

// phi compiled against its owning subsystem's variables.
struct Objective {
  std::vector<std::string> owner_path;
  IRExprPtr phi;
  std::string property_id;
};

// Flat per-block record used by slicing and --emit-ir.
struct BlockRec {
  std::vector<std::string> path;
  std::string id;
  std::string type;
  unsigned rate = 1;
  bool stub = false;
  // Predecessor of each inport: (block key, out port). Activation feeds use
  // port 0.
  std::vector<std::pair<std::string, unsigned>> preds;
};

struct BlockTable {
  std::vector<BlockRec> recs;
  std::map<std::string, size_t> index;  // path_key -> rec
};

BlockTable build_block_table(const TypedModel & tm);

// Backward-reachability slice: returns a filtered TypedModel containing
// exactly the cone of influence of the property's references. Port numbers
// of surviving Inports/Outports are pinned so wiring stays stable.
TypedModel slice(const TypedModel & tm, const Property & prop);

size_t count_blocks(const Model & m);

// Builds the subsystem tree (with rate splitting applied) and the objective.
struct IRBuild {
  std::unique_ptr<SubsystemIR> root;
  Objective objective;
};
IRBuild build_ir(const TypedModel & tm, const Property & prop);

// Debug dump for --emit-ir.
Json ir_to_json(const SubsystemIR & ir);
Json block_table_to_json(const BlockTable & bt);

}  // namespace blockcheck
