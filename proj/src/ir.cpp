#include "blockcheck/ir.hpp"

#include <algorithm>
#include <set>

namespace blockcheck {

// ---------------------------------------------------------------------------
// IRExpr factories

IRExprPtr IRExpr::constant(Value v, DataType t, std::string text) {
  auto e = std::make_shared<IRExpr>();
  e->k = K::Const;
  e->cval = std::move(v);
  e->ctext = std::move(text);
  e->dtype = std::move(t);
  return e;
}

IRExprPtr IRExpr::var(std::string name, DataType t) {
  auto e = std::make_shared<IRExpr>();
  e->k = K::Var;
  e->name = std::move(name);
  e->dtype = std::move(t);
  return e;
}

IRExprPtr IRExpr::state_read(std::string name, DataType t) {
  auto e = std::make_shared<IRExpr>();
  e->k = K::StateRead;
  e->name = std::move(name);
  e->dtype = std::move(t);
  return e;
}

IRExprPtr IRExpr::unary(IROp op, IRExprPtr a, DataType t) {
  auto e = std::make_shared<IRExpr>();
  e->k = K::Unary;
  e->op = op;
  e->a = std::move(a);
  e->dtype = std::move(t);
  return e;
}

IRExprPtr IRExpr::binary(IROp op, IRExprPtr a, IRExprPtr b, DataType t) {
  auto e = std::make_shared<IRExpr>();
  e->k = K::Binary;
  e->op = op;
  e->a = std::move(a);
  e->b = std::move(b);
  e->dtype = std::move(t);
  return e;
}

IRExprPtr IRExpr::ite(IRExprPtr cond, IRExprPtr then_e, IRExprPtr else_e) {
  auto e = std::make_shared<IRExpr>();
  e->k = K::Ite;
  e->a = std::move(cond);
  e->b = std::move(then_e);
  e->c = std::move(else_e);
  e->dtype = e->b->dtype;
  return e;
}

IRExprPtr IRExpr::cast(IRExprPtr a, DataType target, Rounding r, bool sat) {
  auto e = std::make_shared<IRExpr>();
  e->k = K::Cast;
  e->a = std::move(a);
  e->dtype = std::move(target);
  e->rounding = r;
  e->saturate = sat;
  return e;
}

IRExprPtr IRExpr::bus_member(IRExprPtr carrier, std::string member, DataType t) {
  auto e = std::make_shared<IRExpr>();
  e->k = K::BusMember;
  e->a = std::move(carrier);
  e->member = std::move(member);
  e->dtype = std::move(t);
  return e;
}

const SubsystemIR * SubsystemIR::find(const std::vector<std::string> & p) const {
  const SubsystemIR * cur = this;
  for (const auto & seg : p) {
    const SubsystemIR * next = nullptr;
    for (size_t i = 0; i < cur->children.size(); i++)
      if (cur->child_ids[i] == seg) next = cur->children[i].get();
    if (!next) return nullptr;
    cur = next;
  }
  return cur;
}

// ---------------------------------------------------------------------------

namespace {

const Line * find_feed(const Subsystem & sub, const std::string & block, unsigned port,
                       PortKind special = PortKind::None) {
  for (const auto & l : sub.lines)
    for (const auto & d : l.dsts)
      if (d.block == block && d.special == special && (special != PortKind::None || d.port == port))
        return &l;
  return nullptr;
}

std::string sig_base(const std::string & id, unsigned port) {
  return port == 1 ? id : id + "_" + std::to_string(port);
}

bool int_fits(const BigInt & v, const DataType & t) {
  return v >= int_min_value(t) && v <= int_max_value(t);
}

// Scalar literal from a JSON param. Machine-integer parameters are wrapped to
// their type at load time; float parameters keep their ideal rational value,
// so the approximate encoding prints the decimal and the exact encoding
// rounds once at literal-printing time.
std::pair<Value, std::string> scalar_param(const Json & j, const DataType & t) {
  if (j.is_boolean()) {
    bool bv = j.get<bool>();
    if (t.kind == DataType::Kind::Boolean) return {Value::make_bool(bv), bv ? "true" : "false"};
    if (t.kind == DataType::Kind::Float) return {Value::make_rat(bv ? 1 : 0), bv ? "1" : "0"};
    Value v = value_cast(Value::make_bool(bv), t, Rounding::NearestEven, false);
    return {v, bv ? "1" : "0"};
  }
  std::string text = j.is_string() ? j.get<std::string>() : j.dump();
  BigRat r = parse_rational(text);
  if (t.kind == DataType::Kind::Float) return {Value::make_rat(r), print_rational(r)};
  Value v = value_cast(Value::make_rat(r), t, Rounding::NearestEven, false);
  return {v, print_rational(r)};
}

Value zero_of(const DataType & t) {
  switch (t.kind) {
    case DataType::Kind::Boolean: return Value::make_bool(false);
    case DataType::Kind::UInt:
    case DataType::Kind::Int: return Value::make_int(0);
    case DataType::Kind::Float: return Value::make_float(fp_zero(t.prec, false));
    default: throw BlockcheckError("no scalar zero for type " + print_dtype(t));
  }
}

// One data signal: its type plus one expression per flattened scalar element.
// Bus-typed signals carry a single expression of bus sort.
struct Bundle {
  DataType type;
  std::vector<IRExprPtr> elems;
};

struct Builder;

std::unique_ptr<SubsystemIR> build_one(Builder & B, const Subsystem & sub,
                                       std::vector<std::string> path, std::string name,
                                       Activation act, DataType trig_type);
void check_objective_vars(Builder & B, const SubsystemIR & owner);

struct Builder {
  explicit Builder(const TypedModel & t) : tm(t) {}

  const TypedModel & tm;
  Diagnostics diags;
  // Types for blocks introduced by rate splitting, keyed like tm.out_types.
  std::map<std::string, std::vector<DataType>> overlay;

  const Property * prop = nullptr;
  Objective objective;
  bool objective_done = false;

  const std::vector<DataType> * types(const std::vector<std::string> & path,
                                      const std::string & id) {
    std::string key = path_key(path, id);
    auto it = overlay.find(key);
    if (it != overlay.end()) return &it->second;
    return tm.lookup(key);
  }
};

// ---------------------------------------------------------------------------
// Rate splitting: regroup blocks running at rate r > 1 into a synthetic child
// subsystem activated every r-th step. A lone SubSystem block keeps its rate
// attribute and is wrapped directly by the encoder.

Subsystem normalize_rates(Builder & B, const Subsystem & in,
                          const std::vector<std::string> & path) {
  std::set<unsigned> rates;
  for (const auto & b : in.blocks)
    if (b.rate > 1 && b.type != "SubSystem") rates.insert(b.rate);
  for (const auto & b : in.blocks) {
    if (b.rate > 1 && (b.type == "Inport" || b.type == "Outport" || b.port_kind != PortKind::None))
      B.diags.error(path_key(path, b.id), "ports cannot run at a divided rate", "rate");
  }
  if (rates.empty()) return in;

  Subsystem cur = in;
  for (unsigned r : rates) {
    std::set<std::string> group;
    for (const auto & b : cur.blocks)
      if (b.rate == r && b.type != "SubSystem") group.insert(b.id);

    std::string gid = "__rate" + std::to_string(r);
    auto child = std::make_shared<Subsystem>();
    std::vector<std::pair<std::string, unsigned>> in_cross, out_cross;

    for (const auto & l : cur.lines) {
      bool src_in = group.count(l.src_block) > 0;
      for (const auto & d : l.dsts) {
        bool dst_in = group.count(d.block) > 0;
        if (!src_in && dst_in) {
          std::pair<std::string, unsigned> key{l.src_block, l.src_port};
          if (std::find(in_cross.begin(), in_cross.end(), key) == in_cross.end())
            in_cross.push_back(key);
        }
        if (src_in && !dst_in) {
          std::pair<std::string, unsigned> key{l.src_block, l.src_port};
          if (std::find(out_cross.begin(), out_cross.end(), key) == out_cross.end())
            out_cross.push_back(key);
        }
      }
    }

    auto child_path = path;
    child_path.push_back(gid);
    for (unsigned k = 0; k < in_cross.size(); k++) {
      Block p;
      p.id = "__in" + std::to_string(k + 1);
      p.type = "Inport";
      p.params["port"] = k + 1;
      child->blocks.push_back(p);
      auto * ts = B.types(path, in_cross[k].first);
      if (ts && in_cross[k].second <= ts->size())
        B.overlay[path_key(child_path, p.id)] = {(*ts)[in_cross[k].second - 1]};
    }
    std::vector<DataType> gout_types;
    for (const auto & b : cur.blocks) {
      if (!group.count(b.id)) continue;
      Block moved = b;
      moved.rate = 1;
      child->blocks.push_back(moved);
      if (auto * ts = B.types(path, b.id))
        B.overlay[path_key(child_path, b.id)] = *ts;
    }
    for (unsigned m = 0; m < out_cross.size(); m++) {
      Block p;
      p.id = "__out" + std::to_string(m + 1);
      p.type = "Outport";
      p.params["port"] = m + 1;
      child->blocks.push_back(p);
      auto * ts = B.types(path, out_cross[m].first);
      if (ts && out_cross[m].second <= ts->size())
        gout_types.push_back((*ts)[out_cross[m].second - 1]);
      else
        gout_types.push_back(DataType::float_t(FloatPrec::Double));
    }
    B.overlay[path_key(path, gid)] = gout_types;

    // Child wiring: internal lines, inport fan-out, outport taps.
    for (const auto & l : cur.lines) {
      if (!group.count(l.src_block)) continue;
      Line nl;
      nl.src_block = l.src_block;
      nl.src_port = l.src_port;
      for (const auto & d : l.dsts)
        if (group.count(d.block)) nl.dsts.push_back(d);
      std::pair<std::string, unsigned> key{l.src_block, l.src_port};
      auto oit = std::find(out_cross.begin(), out_cross.end(), key);
      if (oit != out_cross.end()) {
        Line::Dst d;
        d.block = "__out" + std::to_string(oit - out_cross.begin() + 1);
        d.port = 1;
        nl.dsts.push_back(d);
      }
      if (!nl.dsts.empty()) child->lines.push_back(nl);
    }
    for (unsigned k = 0; k < in_cross.size(); k++) {
      Line nl;
      nl.src_block = "__in" + std::to_string(k + 1);
      nl.src_port = 1;
      for (const auto & l : cur.lines) {
        if (l.src_block != in_cross[k].first || l.src_port != in_cross[k].second) continue;
        for (const auto & d : l.dsts)
          if (group.count(d.block)) nl.dsts.push_back(d);
      }
      if (!nl.dsts.empty()) child->lines.push_back(nl);
    }

    // Parent rewiring.
    Subsystem next;
    for (const auto & b : cur.blocks)
      if (!group.count(b.id)) next.blocks.push_back(b);
    Block gb;
    gb.id = gid;
    gb.type = "SubSystem";
    gb.rate = r;
    gb.sub = child;
    next.blocks.push_back(gb);

    for (const auto & l : cur.lines) {
      if (group.count(l.src_block)) {
        std::pair<std::string, unsigned> key{l.src_block, l.src_port};
        auto oit = std::find(out_cross.begin(), out_cross.end(), key);
        if (oit == out_cross.end()) continue;
        Line nl;
        nl.src_block = gid;
        nl.src_port = (unsigned)(oit - out_cross.begin() + 1);
        for (const auto & d : l.dsts)
          if (!group.count(d.block)) nl.dsts.push_back(d);
        if (!nl.dsts.empty()) next.lines.push_back(nl);
        continue;
      }
      Line nl;
      nl.src_block = l.src_block;
      nl.src_port = l.src_port;
      bool fed_group = false;
      for (const auto & d : l.dsts) {
        if (group.count(d.block)) {
          fed_group = true;
        } else {
          nl.dsts.push_back(d);
        }
      }
      if (fed_group) {
        std::pair<std::string, unsigned> key{l.src_block, l.src_port};
        auto iit = std::find(in_cross.begin(), in_cross.end(), key);
        Line::Dst d;
        d.block = gid;
        d.port = (unsigned)(iit - in_cross.begin() + 1);
        nl.dsts.push_back(d);
      }
      if (!nl.dsts.empty()) next.lines.push_back(nl);
    }
    cur = next;
  }
  return cur;
}

// ---------------------------------------------------------------------------
// Per-subsystem lowering

struct SubBuilder {
  SubBuilder(Builder & b, const Subsystem & s, std::vector<std::string> p, SubsystemIR & i)
      : B(b), sub(s), path(std::move(p)), ir(i) {}

  Builder & B;
  const Subsystem & sub;
  std::vector<std::string> path;
  SubsystemIR & ir;

  std::map<std::pair<std::string, unsigned>, Bundle> bundles;
  std::set<std::string> done, busy;
  std::vector<std::pair<const Block *, DataType>> deferred_state;  // delay blocks

  std::string where(const std::string & id) const { return path_key(path, id); }

  DataType out_type(const Block & b, unsigned port) {
    auto * ts = B.types(path, b.id);
    if (!ts || port > ts->size()) {
      B.diags.error(where(b.id), "no resolved type for output " + std::to_string(port), "type");
      return DataType::float_t(FloatPrec::Double);
    }
    return (*ts)[port - 1];
  }

  std::vector<std::pair<std::string, DataType>> flatten(const DataType & t) {
    if (t.kind == DataType::Kind::Bus) return {{"", t}};  // carrier stays whole
    return dtype_flatten(t, B.tm.model.bus_types);
  }

  // Names one signal's scalar elements.
  std::vector<std::string> elem_names(const std::string & id, unsigned port, const DataType & t) {
    std::string base = sig_base(id, port);
    std::vector<std::string> out;
    for (const auto & [suffix, et] : flatten(t)) out.push_back(base + suffix);
    return out;
  }

  bool is_leaf(const IRExprPtr & e) {
    return e->k == IRExpr::K::Const || e->k == IRExpr::K::Var || e->k == IRExpr::K::StateRead;
  }

  // Publishes a computed signal: non-leaf elements become let-bound locals.
  Bundle publish(const std::string & id, unsigned port, const DataType & t,
                 std::vector<IRExprPtr> elems) {
    Bundle out;
    out.type = t;
    auto names = elem_names(id, port, t);
    for (size_t i = 0; i < elems.size(); i++) {
      if (is_leaf(elems[i]) || t.kind == DataType::Kind::Bus) {
        out.elems.push_back(elems[i]);
        continue;
      }
      IRStep st;
      st.k = IRStep::K::Local;
      st.lhs = names[i];
      st.rhs = elems[i];
      ir.steps.push_back(std::move(st));
      out.elems.push_back(IRExpr::var(names[i], elems[i]->dtype));
    }
    return out;
  }

  Bundle & demand(const std::string & id, unsigned port) {
    auto key = std::make_pair(id, port);
    auto hit = bundles.find(key);
    if (hit != bundles.end()) return hit->second;
    const Block * b = sub.find_block(id);
    if (!b) {
      B.diags.error(where(id), "line references unknown block", "ref");
      static Bundle dummy;
      return dummy;
    }
    if (!done.count(id)) {
      if (busy.count(id)) {
        B.diags.error(where(id), "algebraic loop through this block", "loop");
        Bundle & slot = bundles[key];
        slot.type = out_type(*b, port);
        for (const auto & [sfx, et] : flatten(slot.type))
          slot.elems.push_back(IRExpr::constant(zero_of(et.is_scalar() ? et : DataType::float_t(FloatPrec::Double)), et));
        return slot;
      }
      busy.insert(id);
      lower(*b);
      busy.erase(id);
      done.insert(id);
    }
    hit = bundles.find(key);
    if (hit == bundles.end()) {
      B.diags.error(where(id), "no signal at output " + std::to_string(port), "ref");
      static Bundle dummy;
      return dummy;
    }
    return hit->second;
  }

  Bundle input(const Block & b, unsigned port, PortKind special = PortKind::None) {
    const Line * l = find_feed(sub, b.id, port, special);
    if (!l) {
      if (special == PortKind::None)
        B.diags.error(where(b.id), "input port " + std::to_string(port) + " is unconnected",
                      "ref");
      else
        B.diags.error(where(b.id), "activation port is unconnected", "ref");
      Bundle dummy;
      dummy.type = DataType::float_t(FloatPrec::Double);
      dummy.elems.push_back(IRExpr::constant(zero_of(dummy.type), dummy.type, "0"));
      return dummy;
    }
    return demand(l->src_block, l->src_port);
  }

  // -- elementwise helpers ---------------------------------------------------

  // Element i of a bundle, broadcasting scalars over wider partners.
  IRExprPtr elem(const Bundle & bn, size_t i) {
    if (bn.elems.empty()) return IRExpr::constant(zero_of(DataType::float_t(FloatPrec::Double)), DataType::float_t(FloatPrec::Double), "0");
    return bn.elems.size() == 1 ? bn.elems[0] : bn.elems[i];
  }

  size_t common_width(const Block & b, const std::vector<Bundle> & ins) {
    size_t w = 1;
    for (const auto & bn : ins) {
      if (bn.elems.size() <= 1) continue;
      if (w != 1 && bn.elems.size() != w)
        B.diags.error(where(b.id), "mismatched signal widths", "type");
      w = std::max(w, bn.elems.size());
    }
    return w;
  }

  IRExprPtr num_const(const BigRat & r, const DataType & t, const std::string & text) {
    Value v = value_cast(Value::make_rat(r), t, Rounding::NearestEven, false);
    return IRExpr::constant(v, t, text);
  }

  // -- block lowering --------------------------------------------------------

  void lower(const Block & b) {
    const std::string & ty = b.type;
    if (ty == "Inport" || ty == "Outport" || ty == "EnablePort" || ty == "TriggerPort") return;

    if (ty == "SubSystem") {
      lower_subsystem(b);
      return;
    }
    if (!is_supported_block_type(ty)) {
      lower_stub(b);
      return;
    }

    if (ty == "Constant") {
      DataType t = out_type(b, 1);
      const Json & v = b.params.contains("value") ? b.params["value"] : Json(0);
      std::vector<IRExprPtr> es;
      auto parts = flatten(t);
      if (t.kind == DataType::Kind::Bus) {
        B.diags.error(where(b.id), "bus-typed constants are not supported", "type");
        return;
      }
      for (size_t i = 0; i < parts.size(); i++) {
        Json jv = v;
        if (v.is_array()) {
          if (t.kind == DataType::Kind::Matrix) {
            unsigned r = (unsigned)(i / t.d2), c = (unsigned)(i % t.d2);
            jv = v[r].is_array() ? v[r][c] : v[r];
          } else {
            jv = v[i % v.size()];
          }
        }
        auto [val, text] = scalar_param(jv, parts[i].second);
        es.push_back(IRExpr::constant(val, parts[i].second, text));
      }
      bundles[{b.id, 1}] = publish(b.id, 1, t, std::move(es));
      return;
    }

    if (ty == "UnitDelay" || ty == "Delay") {
      DataType t = out_type(b, 1);
      unsigned len = ty == "Delay" ? (unsigned)b.params.value("length", 1) : 1u;
      if (len < 1) len = 1;
      const Json init = b.params.contains("init") ? b.params["init"] : Json(0);
      auto parts = flatten(t);
      std::vector<IRExprPtr> es;
      for (unsigned z = 1; z <= len; z++) {
        for (size_t i = 0; i < parts.size(); i++) {
          std::string sname = b.id + parts[i].first;
          if (len > 1) sname += "_z" + std::to_string(z);
          Json jv = init.is_array() ? init[i % init.size()] : init;
          auto [val, text] = scalar_param(jv, parts[i].second);
          ir.states.push_back({sname, parts[i].second, val, text});
          if (z == 1) es.push_back(IRExpr::state_read(sname, parts[i].second));
        }
      }
      bundles[{b.id, 1}] = publish(b.id, 1, t, std::move(es));
      deferred_state.push_back({&b, t});
      return;
    }

    if (ty == "RateTransition") {
      DataType t = out_type(b, 1);
      unsigned n = (unsigned)b.params.value("rate", std::max(b.rate, 1u));
      if (n < 1) n = 1;
      Bundle in = input(b, 1);
      DataType cnt_t = DataType::uint_t(32);
      std::string cname = b.id + "_cnt";
      ir.states.push_back({cname, cnt_t, Value::make_int(0), "0"});
      auto hit = IRExpr::binary(IROp::Eq, IRExpr::state_read(cname, cnt_t),
                                IRExpr::constant(Value::make_int(0), cnt_t, "0"),
                                DataType::boolean());
      auto parts = flatten(t);
      std::vector<IRExprPtr> es;
      for (size_t i = 0; i < parts.size(); i++) {
        std::string sname = b.id + parts[i].first;
        ir.states.push_back({sname, parts[i].second, zero_of(parts[i].second), "0"});
        es.push_back(IRExpr::ite(hit, elem(in, i), IRExpr::state_read(sname, parts[i].second)));
      }
      Bundle out = publish(b.id, 1, t, std::move(es));
      bundles[{b.id, 1}] = out;
      for (size_t i = 0; i < parts.size(); i++) {
        IRStep st;
        st.k = IRStep::K::StateNextEq;
        st.lhs = b.id + parts[i].first;
        st.rhs = out.elems[i];
        ir.steps.push_back(std::move(st));
      }
      IRStep st;
      st.k = IRStep::K::StateNextEq;
      st.lhs = cname;
      auto cread = IRExpr::state_read(cname, cnt_t);
      st.rhs = IRExpr::ite(
          IRExpr::binary(IROp::Ge, cread,
                         IRExpr::constant(Value::make_int(BigInt(n) - 1), cnt_t,
                                          std::to_string(n - 1)),
                         DataType::boolean()),
          IRExpr::constant(Value::make_int(0), cnt_t, "0"),
          IRExpr::binary(IROp::Add, cread, IRExpr::constant(Value::make_int(1), cnt_t, "1"),
                         cnt_t));
      ir.steps.push_back(std::move(st));
      return;
    }

    if (ty == "Mux") {
      unsigned nin = block_in_arity(b);
      std::vector<IRExprPtr> es;
      for (unsigned p = 1; p <= nin; p++) {
        Bundle in = input(b, p);
        for (const auto & e : in.elems) es.push_back(e);
      }
      DataType t = out_type(b, 1);
      Bundle out;
      out.type = t;
      out.elems = std::move(es);  // pure aliasing, no lets
      bundles[{b.id, 1}] = std::move(out);
      return;
    }

    if (ty == "Demux") {
      Bundle in = input(b, 1);
      unsigned nout = block_out_arity(b);
      if (in.elems.size() != nout) {
        B.diags.error(where(b.id), "demux width does not match input", "type");
        return;
      }
      for (unsigned p = 1; p <= nout; p++) {
        Bundle out;
        out.type = out_type(b, p);
        out.elems.push_back(in.elems[p - 1]);
        bundles[{b.id, p}] = std::move(out);
      }
      return;
    }

    if (ty == "BusCreator") {
      lower_bus_creator(b);
      return;
    }
    if (ty == "BusSelector") {
      lower_bus_selector(b);
      return;
    }

    lower_elementwise(b);
  }

  void lower_stub(const Block & b) {
    ir.contains_stub = true;
    unsigned nin = block_in_arity(b);
    for (unsigned p = 1; p <= nin; p++) input(b, p);
    unsigned nout = block_out_arity(b);
    for (unsigned p = 1; p <= nout; p++) {
      DataType t = out_type(b, p);
      Bundle out;
      out.type = t;
      auto names = elem_names(b.id, p, t);
      auto parts = flatten(t);
      for (size_t i = 0; i < parts.size(); i++) {
        DataType et = parts[i].second.kind == DataType::Kind::Bus ? t : parts[i].second;
        ir.skolems.push_back({names[i], et});
        out.elems.push_back(IRExpr::var(names[i], et));
      }
      bundles[{b.id, p}] = std::move(out);
    }
  }

  void lower_bus_creator(const Block & b) {
    DataType t = out_type(b, 1);
    if (t.kind != DataType::Kind::Bus) {
      B.diags.error(where(b.id), "bus creator output must have a bus type", "type");
      return;
    }
    auto members = b.params.value("members", std::vector<std::string>{});
    unsigned nin = block_in_arity(b);
    std::string carrier = sig_base(b.id, 1);
    IRStep mk;
    mk.k = IRStep::K::BusMake;
    mk.lhs = carrier;
    for (unsigned p = 1; p <= nin; p++) {
      Bundle in = input(b, p);
      std::string mname = p <= members.size() ? members[p - 1] : "m" + std::to_string(p);
      auto parts = in.type.kind == DataType::Kind::Bus
                       ? dtype_flatten(in.type, B.tm.model.bus_types)
                       : flatten(in.type);
      if (in.type.kind == DataType::Kind::Bus) {
        // Nested bus input: pin every flattened member through its accessor.
        for (const auto & [sfx, et] : parts)
          mk.members.push_back({mname + "_" + sfx,
                                IRExpr::bus_member(in.elems[0], sfx, et)});
      } else {
        for (size_t i = 0; i < parts.size(); i++)
          mk.members.push_back({mname + parts[i].first, elem(in, i)});
      }
    }
    ir.skolems.push_back({carrier, t});
    ir.steps.push_back(std::move(mk));
    Bundle out;
    out.type = t;
    out.elems.push_back(IRExpr::var(carrier, t));
    bundles[{b.id, 1}] = std::move(out);
  }

  void lower_bus_selector(const Block & b) {
    Bundle in = input(b, 1);
    if (in.type.kind != DataType::Kind::Bus) {
      B.diags.error(where(b.id), "bus selector input must be a bus", "type");
      return;
    }
    auto members = b.params.value("members", std::vector<std::string>{});
    auto & table = B.tm.model.bus_types;
    auto bit = table.find(in.type.bus_name);
    for (unsigned p = 1; p <= members.size(); p++) {
      const std::string & mname = members[p - 1];
      DataType mt;
      bool found = false;
      if (bit != table.end()) {
        for (const auto & [n, mtype] : bit->second)
          if (n == mname) {
            mt = mtype;
            found = true;
          }
      }
      if (!found) {
        B.diags.error(where(b.id), "bus has no member '" + mname + "'", "type");
        continue;
      }
      std::vector<IRExprPtr> es;
      if (mt.kind == DataType::Kind::Bus) {
        B.diags.error(where(b.id), "selecting a nested bus is not supported", "type");
        continue;
      }
      for (const auto & [sfx, et] : dtype_flatten(mt, table))
        es.push_back(IRExpr::bus_member(in.elems[0], sfx.empty() ? mname : mname + sfx, et));
      bundles[{b.id, p}] = publish(b.id, p, mt, std::move(es));
    }
  }

  void lower_elementwise(const Block & b) {
    unsigned nin = block_in_arity(b);
    std::vector<Bundle> ins;
    for (unsigned p = 1; p <= nin; p++) ins.push_back(input(b, p));
    DataType t = out_type(b, 1);
    common_width(b, ins);  // width consistency diagnostics
    auto parts = flatten(t);
    std::vector<IRExprPtr> es;
    for (size_t i = 0; i < parts.size(); i++)
      es.push_back(lower_scalar(b, ins, i, parts[i].second));
    bundles[{b.id, 1}] = publish(b.id, 1, t, std::move(es));
  }

  IRExprPtr lower_scalar(const Block & b, const std::vector<Bundle> & ins, size_t i,
                         const DataType & et) {
    const std::string & ty = b.type;
    auto in = [&](size_t p) { return elem(ins[p], i); };

    if (ty == "Add") {
      std::string signs = b.params.value("signs", "++");
      IRExprPtr acc;
      for (size_t p = 0; p < ins.size(); p++) {
        bool plus = p >= signs.size() || signs[p] == '+';
        if (!acc) {
          acc = plus ? in(p) : IRExpr::unary(IROp::Neg, in(p), et);
        } else {
          acc = IRExpr::binary(plus ? IROp::Add : IROp::Sub, acc, in(p), et);
        }
      }
      return acc;
    }
    if (ty == "Sub") return IRExpr::binary(IROp::Sub, in(0), in(1), et);
    if (ty == "Product") {
      std::string ops = b.params.value("ops", "**");
      IRExprPtr acc;
      for (size_t p = 0; p < ins.size(); p++) {
        bool mul = p >= ops.size() || ops[p] == '*';
        if (!acc) {
          acc = mul ? in(p)
                    : IRExpr::binary(IROp::Div, num_const(1, et, "1"), in(p), et);
        } else {
          acc = IRExpr::binary(mul ? IROp::Mul : IROp::Div, acc, in(p), et);
        }
      }
      return acc;
    }
    if (ty == "Gain") {
      const Json g = b.params.contains("gain") ? b.params["gain"] : Json(1);
      auto [val, text] = scalar_param(g, et);
      return IRExpr::binary(IROp::Mul, IRExpr::constant(val, et, text), in(0), et);
    }
    if (ty == "UnaryMinus") return IRExpr::unary(IROp::Neg, in(0), et);
    if (ty == "Abs") return IRExpr::unary(IROp::Abs, in(0), et);
    if (ty == "MinMax") {
      bool mx = b.params.value("fn", "max") == "max";
      IRExprPtr acc = in(0);
      for (size_t p = 1; p < ins.size(); p++)
        acc = IRExpr::binary(mx ? IROp::Max : IROp::Min, acc, in(p), et);
      return acc;
    }
    if (ty == "Saturate") {
      auto [lo, lo_text] = scalar_param(b.params.contains("lower") ? b.params["lower"] : Json(0), et);
      auto [hi, hi_text] = scalar_param(b.params.contains("upper") ? b.params["upper"] : Json(0), et);
      // min(max(x, lo), hi): a NaN input saturates to the lower bound.
      auto lower = IRExpr::binary(IROp::Max, in(0), IRExpr::constant(lo, et, lo_text), et);
      return IRExpr::binary(IROp::Min, lower, IRExpr::constant(hi, et, hi_text), et);
    }
    if (ty == "Switch") {
      DataType ct = ins[1].type.kind == DataType::Kind::Vector ? ins[1].type.elem_type()
                                                               : ins[1].type;
      IRExprPtr pred;
      if (ct.kind == DataType::Kind::Boolean) {
        pred = in(1);
      } else {
        auto [th, th_text] =
            scalar_param(b.params.contains("threshold") ? b.params["threshold"] : Json(0), ct);
        std::string crit = b.params.value("criteria", ">=");
        IROp op = crit == ">" ? IROp::Gt : crit == "~=0" ? IROp::Ne : IROp::Ge;
        IRExprPtr rhs = crit == "~=0" ? num_const(0, ct, "0") : IRExpr::constant(th, ct, th_text);
        pred = IRExpr::binary(op, in(1), rhs, DataType::boolean());
      }
      return IRExpr::ite(pred, in(0), in(2));
    }
    if (ty == "RelationalOperator" || ty == "CompareToConstant" || ty == "CompareToZero") {
      std::string op = b.params.value("op", ty == "RelationalOperator" ? "==" : "<=");
      IRExprPtr lhs = in(0), rhs;
      if (ty == "RelationalOperator") {
        rhs = elem(ins[1], i);
      } else {
        DataType ot = lhs->dtype;
        BigRat c = ty == "CompareToZero"
                       ? BigRat(0)
                       : parse_rational(b.params.contains("const") ? b.params["const"].dump()
                                                                   : "0");
        return compare_const(op, lhs, c, ot);
      }
      IROp o = op == "<" ? IROp::Lt
               : op == "<=" ? IROp::Le
               : op == ">" ? IROp::Gt
               : op == ">=" ? IROp::Ge
               : op == "~=" ? IROp::Ne
                            : IROp::Eq;
      return IRExpr::binary(o, lhs, rhs, DataType::boolean());
    }
    if (ty == "Logic") {
      std::string op = b.params.value("op", "AND");
      if (op == "NOT") return IRExpr::unary(IROp::Not, in(0), DataType::boolean());
      IROp o = op == "OR" ? IROp::Or : op == "XOR" ? IROp::Xor : IROp::And;
      IRExprPtr acc = in(0);
      for (size_t p = 1; p < ins.size(); p++)
        acc = IRExpr::binary(o, acc, in(p), DataType::boolean());
      return acc;
    }
    if (ty == "DataTypeConversion") {
      std::string rnd = b.params.value("round", "floor");
      Rounding r = rnd == "nearest" ? Rounding::NearestEven
                   : rnd == "zero" ? Rounding::Zero
                   : rnd == "ceil" ? Rounding::Ceil
                                   : Rounding::Floor;
      return IRExpr::cast(in(0), et, r, b.params.value("saturate", false));
    }
    B.diags.error(where(b.id), "no lowering for block type '" + ty + "'", "internal");
    return num_const(0, et.is_scalar() ? et : DataType::float_t(FloatPrec::Double), "0");
  }

  // Comparison against a numeric literal, widening machine-integer operands
  // when the literal does not fit the signal's type.
  IRExprPtr compare_const(const std::string & op, IRExprPtr lhs, const BigRat & c,
                          const DataType & t) {
    IROp o = op == "<" ? IROp::Lt
             : op == "<=" ? IROp::Le
             : op == ">" ? IROp::Gt
             : op == ">=" ? IROp::Ge
             : op == "~=" || op == "!=" ? IROp::Ne
                                        : IROp::Eq;
    DataType ct = t;
    IRExprPtr l = lhs;
    if (t.is_machine_int() && denominator(c) == 1 && !int_fits(numerator(c), t)) {
      ct = widened_int(t, numerator(c));
      l = IRExpr::cast(lhs, ct, Rounding::Zero, false);
    }
    Value cv = value_cast(Value::make_rat(c), ct, Rounding::NearestEven, false);
    return IRExpr::binary(o, l, IRExpr::constant(cv, ct, print_rational(c)),
                          DataType::boolean());
  }

  static DataType widened_int(const DataType & t, const BigInt & v) {
    bool need_sign = t.kind == DataType::Kind::Int || v < 0;
    unsigned bits = t.bits;
    DataType w;
    do {
      bits *= 2;
      if (bits > 64) {
        bits = 128;  // last resort; encoder handles any width
      }
      w = need_sign ? DataType::int_t(bits) : DataType::uint_t(bits);
    } while (!int_fits(v, w) && bits < 128);
    return w;
  }

  // -- subsystem instantiation ----------------------------------------------

  void lower_subsystem(const Block & b) {
    Activation act;
    DataType trig_type;
    const Subsystem & csub = *b.sub;
    for (const auto & cb : csub.blocks) {
      if (cb.port_kind == PortKind::Enable) {
        if (act.kind != ActivationKind::None)
          B.diags.error(where(b.id), "multiple activation kinds on one subsystem", "rate");
        act.kind = ActivationKind::Enabled;
      } else if (cb.port_kind == PortKind::Trigger) {
        if (act.kind != ActivationKind::None)
          B.diags.error(where(b.id), "multiple activation kinds on one subsystem", "rate");
        act.kind = ActivationKind::Triggered;
        std::string edge = cb.params.value("edge", "rising");
        act.edge = edge == "falling" ? TriggerEdge::Falling
                   : edge == "either" ? TriggerEdge::Either
                                      : TriggerEdge::Rising;
      }
    }
    if (b.rate > 1) {
      if (act.kind != ActivationKind::None) {
        B.diags.error(where(b.id), "rate-divided subsystem cannot also have activation ports",
                      "rate");
      } else {
        act.kind = ActivationKind::RateDivided;
        act.divisor = b.rate;
      }
    }

    // Activation expression, computed in this subsystem.
    IRExprPtr act_expr;
    if (act.kind == ActivationKind::Enabled) {
      Bundle en = input(b, 0, PortKind::Enable);
      if (en.elems.size() != 1 || en.type.kind == DataType::Kind::Bus) {
        B.diags.error(where(b.id), "enable signal must be scalar", "type");
      } else if (en.type.kind == DataType::Kind::Boolean) {
        act_expr = en.elems[0];
      } else {
        act_expr = IRExpr::binary(IROp::Gt, en.elems[0], num_const(0, en.type, "0"),
                                  DataType::boolean());
      }
    } else if (act.kind == ActivationKind::Triggered) {
      Bundle tr = input(b, 0, PortKind::Trigger);
      if (tr.elems.size() != 1 || !tr.type.is_numeric_scalar()) {
        B.diags.error(where(b.id), "trigger signal must be a numeric scalar", "type");
        trig_type = DataType::float_t(FloatPrec::Double);
        act_expr = num_const(0, trig_type, "0");
      } else {
        trig_type = tr.type;
        act_expr = tr.elems[0];
      }
    }

    auto child_path = path;
    child_path.push_back(b.id);
    auto child = build_one(B, csub, child_path, b.id, act, trig_type);
    if (child->contains_stub) ir.contains_stub = true;

    std::string pre = b.id + ".";
    size_t child_idx = ir.children.size();

    // Input skolems pinned to the feeding expressions, in child port order.
    // The child's vin was flattened in the same port order with the same
    // types, so the element counts line up pairwise.
    size_t vi = 0;
    unsigned nin = block_in_arity(b);
    for (unsigned p = 1; p <= nin; p++) {
      Bundle feed = input(b, p);
      size_t take = std::min(feed.elems.size(), child->vin.size() - vi);
      for (size_t e = 0; e < take; e++) {
        const auto & vd = child->vin[vi + e];
        ir.skolems.push_back({pre + vd.name, vd.dtype});
        IRStep st;
        st.k = IRStep::K::SkolemEq;
        st.lhs = pre + vd.name;
        st.rhs = elem(feed, e);
        ir.steps.push_back(std::move(st));
      }
      vi += take;
    }
    for (const auto & vd : child->wrapper_in) {
      ir.skolems.push_back({pre + vd.name, vd.dtype});
      IRStep st;
      st.k = IRStep::K::SkolemEq;
      st.lhs = pre + vd.name;
      st.rhs = act_expr;
      ir.steps.push_back(std::move(st));
    }
    for (const auto & vd : child->vout) ir.skolems.push_back({pre + vd.name, vd.dtype});
    for (const auto & vd : child->skolems) ir.skolems.push_back({pre + vd.name, vd.dtype});

    IRStep call;
    call.k = IRStep::K::ChildCall;
    call.child = child_idx;
    ir.steps.push_back(std::move(call));

    // Child outputs become visible signals of this subsystem, re-grouped into
    // one bundle per outport.
    unsigned next_out = 1;
    size_t vo = 0;
    std::vector<std::pair<unsigned, const Block *>> couts;
    for (const auto & cb : csub.blocks) {
      if (cb.type != "Outport") continue;
      unsigned idx = cb.params.value("port", next_out);
      next_out = idx + 1;
      couts.push_back({idx, &cb});
    }
    std::sort(couts.begin(), couts.end(),
              [](const auto & x, const auto & y) { return x.first < y.first; });
    for (const auto & [idx, cb] : couts) {
      Bundle out;
      out.type = child_out_port_type(csub, child_path, *cb);
      size_t n = out.type.kind == DataType::Kind::Bus
                     ? 1
                     : dtype_flatten(out.type, B.tm.model.bus_types).size();
      for (size_t e = 0; e < n && vo < child->vout.size(); e++, vo++)
        out.elems.push_back(IRExpr::var(pre + child->vout[vo].name, child->vout[vo].dtype));
      bundles[{b.id, idx}] = std::move(out);
    }

    ir.children.push_back(std::move(child));
    ir.child_ids.push_back(b.id);
  }

  DataType child_out_port_type(const Subsystem & csub,
                               const std::vector<std::string> & child_path, const Block & outp) {
    const Line * l = find_feed(csub, outp.id, 1);
    if (l) {
      auto * ts = B.types(child_path, l->src_block);
      if (ts && l->src_port <= ts->size()) return (*ts)[l->src_port - 1];
    }
    return DataType::float_t(FloatPrec::Double);
  }

  // -- whole-subsystem driver -----------------------------------------------

  void run(Activation act, const DataType & trig_type) {
    ir.activation = act;

    // Inputs, in port order.
    std::vector<std::pair<unsigned, const Block *>> inports;
    unsigned next = 1;
    for (const auto & b : sub.blocks) {
      if (b.type != "Inport") continue;
      unsigned idx = b.params.value("port", next);
      next = idx + 1;
      inports.push_back({idx, &b});
    }
    std::sort(inports.begin(), inports.end(),
              [](const auto & a, const auto & b2) { return a.first < b2.first; });
    for (const auto & [in_idx, b] : inports) {
      (void)in_idx;
      DataType t = out_type(*b, 1);
      Bundle bn;
      bn.type = t;
      auto names = elem_names(b->id, 1, t);
      auto parts = flatten(t);
      for (size_t i = 0; i < parts.size(); i++) {
        DataType et = parts[i].second.kind == DataType::Kind::Bus ? t : parts[i].second;
        ir.vin.push_back({names[i], et});
        bn.elems.push_back(IRExpr::var(names[i], et));
      }
      bundles[{b->id, 1}] = std::move(bn);
      done.insert(b->id);
    }

    if (act.kind == ActivationKind::Enabled)
      ir.wrapper_in.push_back({"_en", DataType::boolean()});
    if (act.kind == ActivationKind::Triggered) ir.wrapper_in.push_back({"_tr", trig_type});

    // Lower every block; demand recursion orders the steps.
    for (const auto & b : sub.blocks) {
      if (b.type == "Inport" || b.type == "Outport" || b.port_kind != PortKind::None) continue;
      if (!done.count(b.id)) {
        busy.insert(b.id);
        lower(b);
        busy.erase(b.id);
        done.insert(b.id);
      }
    }
    ir.own_state_count = ir.states.size();

    // Outputs, in port order.
    std::vector<std::pair<unsigned, const Block *>> outports;
    next = 1;
    for (const auto & b : sub.blocks) {
      if (b.type != "Outport") continue;
      unsigned idx = b.params.value("port", next);
      next = idx + 1;
      outports.push_back({idx, &b});
    }
    std::sort(outports.begin(), outports.end(),
              [](const auto & a, const auto & b2) { return a.first < b2.first; });
    std::vector<std::pair<const Json *, size_t>> out_inits;
    for (const auto & [idx, b] : outports) {
      (void)idx;
      Bundle feed = input(*b, 1);
      auto names = elem_names(b->id, 1, feed.type);
      const Json * init = b->params.contains("init") ? &b->params["init"] : nullptr;
      for (size_t i = 0; i < feed.elems.size() && i < names.size(); i++) {
        DataType et = feed.type.kind == DataType::Kind::Bus ? feed.type
                                                            : feed.elems[i]->dtype;
        ir.vout.push_back({names[i], et});
        out_inits.push_back({init, i});
        IRStep st;
        st.k = IRStep::K::OutputEq;
        st.lhs = names[i];
        st.rhs = feed.elems[i];
        ir.steps.push_back(std::move(st));
      }
    }

    // Deferred state updates for delays.
    for (const auto & [b, t] : deferred_state) {
      Bundle feed = input(*b, 1);
      unsigned len = b->type == "Delay" ? (unsigned)b->params.value("length", 1) : 1u;
      if (len < 1) len = 1;
      auto parts = flatten(t);
      for (unsigned z = 1; z <= len; z++) {
        for (size_t i = 0; i < parts.size(); i++) {
          std::string sname = b->id + parts[i].first;
          std::string snext = sname;
          if (len > 1) {
            sname += "_z" + std::to_string(z);
            snext = b->id + parts[i].first + "_z" + std::to_string(z + 1);
          }
          IRStep st;
          st.k = IRStep::K::StateNextEq;
          st.lhs = sname;
          st.rhs = z == len ? elem(feed, i)
                            : IRExpr::state_read(snext, parts[i].second);
          ir.steps.push_back(std::move(st));
        }
      }
    }

    // Wrapper state variables for activated subsystems.
    if (act.kind != ActivationKind::None) {
      for (size_t v = 0; v < ir.vout.size(); v++) {
        const auto & vd = ir.vout[v];
        if (vd.dtype.kind == DataType::Kind::Bus) {
          B.diags.error(name_key(), "activated subsystem cannot have bus outputs", "type");
          continue;
        }
        Value init = zero_of(vd.dtype);
        std::string text = "0";
        if (v < out_inits.size() && out_inits[v].first) {
          const Json & j = *out_inits[v].first;
          size_t ei = out_inits[v].second;
          auto [val, tx] = scalar_param(j.is_array() ? j[ei % j.size()] : j, vd.dtype);
          init = val;
          text = tx;
        }
        ir.wrapper_states.push_back({vd.name + "_h", vd.dtype, init, text});
      }
      if (act.kind == ActivationKind::Triggered)
        ir.wrapper_states.push_back({"_trig_prev", trig_type, zero_of(trig_type), "0"});
      if (act.kind == ActivationKind::RateDivided)
        ir.wrapper_states.push_back(
            {"_rate_cnt", DataType::uint_t(32), Value::make_int(0), "0"});
    }

    // Child states, qualified, after this subsystem's own.
    for (size_t c = 0; c < ir.children.size(); c++) {
      for (const auto & sd : ir.children[c]->all_states()) {
        ir.states.push_back(
            {ir.child_ids[c] + "." + sd.name, sd.dtype, sd.init, sd.init_text});
      }
    }
  }

  std::string name_key() const {
    return path.empty() ? ir.name : path_key(path, "");
  }

  // -- objective -------------------------------------------------------------

  IRExprPtr compile_prop(const PropExpr & e) {
    using PK = PropExpr::K;
    switch (e.kind) {
      case PK::BoolLit: return IRExpr::constant(Value::make_bool(e.bval), DataType::boolean(),
                                                e.bval ? "true" : "false");
      case PK::Not:
        return IRExpr::unary(IROp::Not, compile_prop(*e.args[0]), DataType::boolean());
      case PK::And:
      case PK::Or: {
        IRExprPtr acc = compile_prop(*e.args[0]);
        for (size_t i = 1; i < e.args.size(); i++)
          acc = IRExpr::binary(e.kind == PK::And ? IROp::And : IROp::Or, acc,
                               compile_prop(*e.args[i]), DataType::boolean());
        return acc;
      }
      case PK::Lt:
      case PK::Le:
      case PK::Gt:
      case PK::Ge:
      case PK::EqCmp:
      case PK::Ne: {
        auto [a, bnd] = compile_pair(*e.args[0], *e.args[1]);
        IROp op = e.kind == PK::Lt ? IROp::Lt
                  : e.kind == PK::Le ? IROp::Le
                  : e.kind == PK::Gt ? IROp::Gt
                  : e.kind == PK::Ge ? IROp::Ge
                  : e.kind == PK::EqCmp ? IROp::Eq
                                        : IROp::Ne;
        return IRExpr::binary(op, a, bnd, DataType::boolean());
      }
      case PK::Add:
      case PK::Sub:
      case PK::Mul:
      case PK::Div: {
        auto [a, bnd] = compile_pair(*e.args[0], *e.args[1]);
        IROp op = e.kind == PK::Add ? IROp::Add
                  : e.kind == PK::Sub ? IROp::Sub
                  : e.kind == PK::Mul ? IROp::Mul
                                      : IROp::Div;
        return IRExpr::binary(op, a, bnd, a->dtype);
      }
      case PK::Neg: {
        IRExprPtr a = compile_numeric(*e.args[0], std::nullopt);
        return IRExpr::unary(IROp::Neg, a, a->dtype);
      }
      case PK::Num:
        return compile_numeric(e, std::nullopt);
      case PK::Sig:
      case PK::State:
        return compile_ref(e);
    }
    return IRExpr::constant(Value::make_bool(true), DataType::boolean(), "true");
  }

  std::pair<IRExprPtr, IRExprPtr> compile_pair(const PropExpr & a, const PropExpr & b) {
    bool an = is_pure_num(a), bn = is_pure_num(b);
    IRExprPtr ra, rb;
    if (an && !bn) {
      rb = compile_numeric(b, std::nullopt);
      ra = compile_numeric(a, rb->dtype);
    } else {
      ra = compile_numeric(a, std::nullopt);
      rb = compile_numeric(b, ra->dtype);
    }
    harmonize(ra, rb);
    return {ra, rb};
  }

  // Brings both operands to one type. Out-of-range integer literals arrive
  // already widened; the other side follows via an explicit cast.
  void harmonize(IRExprPtr & a, IRExprPtr & b) {
    if (a->dtype == b->dtype) return;
    if (a->dtype.kind == DataType::Kind::Float || b->dtype.kind == DataType::Kind::Float) {
      DataType ft = a->dtype.kind == DataType::Kind::Float ? a->dtype : b->dtype;
      if (a->dtype != ft) a = IRExpr::cast(a, ft, Rounding::NearestEven, false);
      if (b->dtype != ft) b = IRExpr::cast(b, ft, Rounding::NearestEven, false);
      return;
    }
    if (a->dtype.is_machine_int() && b->dtype.is_machine_int()) {
      bool sign = a->dtype.kind == DataType::Kind::Int || b->dtype.kind == DataType::Kind::Int;
      unsigned bits = std::max(a->dtype.bits, b->dtype.bits);
      // A signed result must still hold the full unsigned range.
      if (sign && ((a->dtype.kind == DataType::Kind::UInt && a->dtype.bits == bits) ||
                   (b->dtype.kind == DataType::Kind::UInt && b->dtype.bits == bits)))
        bits *= 2;
      DataType w = sign ? DataType::int_t(bits) : DataType::uint_t(bits);
      if (a->dtype != w) a = IRExpr::cast(a, w, Rounding::Zero, false);
      if (b->dtype != w) b = IRExpr::cast(b, w, Rounding::Zero, false);
      return;
    }
    B.diags.error("property", "operands of mixed incompatible types", "type");
  }

  static bool is_pure_num(const PropExpr & e) {
    using PK = PropExpr::K;
    if (e.kind == PK::Num) return true;
    if (e.kind == PK::Neg || e.kind == PK::Add || e.kind == PK::Sub || e.kind == PK::Mul ||
        e.kind == PK::Div) {
      for (const auto & a : e.args)
        if (!is_pure_num(*a)) return false;
      return true;
    }
    return false;
  }

  IRExprPtr compile_numeric(const PropExpr & e, std::optional<DataType> want) {
    using PK = PropExpr::K;
    if (e.kind == PK::Num) {
      DataType t = want.value_or(DataType::float_t(FloatPrec::Double));
      if (!t.is_numeric_scalar()) t = DataType::float_t(FloatPrec::Double);
      if (t.is_machine_int() && denominator(e.num) == 1 && !int_fits(numerator(e.num), t)) {
        // The literal needs a wider integer type; the caller's operand is
        // widened on use through compare_const-style casting.
        DataType w = widened_int(t, numerator(e.num));
        Value v = value_cast(Value::make_rat(e.num), w, Rounding::NearestEven, false);
        return IRExpr::constant(v, w, e.text.empty() ? print_rational(e.num) : e.text);
      }
      Value v = value_cast(Value::make_rat(e.num), t, Rounding::NearestEven, false);
      return IRExpr::constant(v, t, e.text.empty() ? print_rational(e.num) : e.text);
    }
    if (e.kind == PK::Sig || e.kind == PK::State) return compile_ref(e);
    if (e.kind == PK::Neg) {
      IRExprPtr a = compile_numeric(*e.args[0], want);
      return IRExpr::unary(IROp::Neg, a, a->dtype);
    }
    if (e.kind == PK::Add || e.kind == PK::Sub || e.kind == PK::Mul || e.kind == PK::Div) {
      auto [a, b] = compile_pair(*e.args[0], *e.args[1]);
      IROp op = e.kind == PK::Add ? IROp::Add
                : e.kind == PK::Sub ? IROp::Sub
                : e.kind == PK::Mul ? IROp::Mul
                                    : IROp::Div;
      return IRExpr::binary(op, a, b, a->dtype);
    }
    return compile_prop(e);
  }

  IRExprPtr compile_ref(const PropExpr & e) {
    if (e.kind == PropExpr::K::State) {
      std::string joined;
      for (const auto & seg : e.ref_path) joined += (joined.empty() ? "" : ".") + seg;
      for (const auto & sd : ir.states) {
        bool suffix = sd.name.size() > joined.size() + 1 &&
                      sd.name.compare(sd.name.size() - joined.size() - 1,
                                      joined.size() + 1, "." + joined) == 0;
        if (sd.name == joined || suffix) return IRExpr::state_read(sd.name, sd.dtype);
      }
      B.diags.error("property", "no state named '" + joined + "' in scope subsystem", "ref");
      return IRExpr::constant(Value::make_rat(0), DataType::float_t(FloatPrec::Double), "0");
    }
    if (e.ref_path.size() != 1) {
      B.diags.error("property",
                    "signal reference crosses a subsystem boundary; reference the "
                    "subsystem's output port instead",
                    "ref");
      return IRExpr::constant(Value::make_rat(0), DataType::float_t(FloatPrec::Double), "0");
    }
    Bundle & bn = demand(e.ref_path[0], e.ref_port);
    if (bn.elems.size() != 1) {
      B.diags.error("property", "signal '" + e.ref_path[0] + "' is not scalar", "ref");
      return IRExpr::constant(Value::make_rat(0), DataType::float_t(FloatPrec::Double), "0");
    }
    return bn.elems[0];
  }
};

std::unique_ptr<SubsystemIR> build_one(Builder & B, const Subsystem & raw,
                                       std::vector<std::string> path, std::string name,
                                       Activation act, DataType trig_type) {
  auto ir = std::make_unique<SubsystemIR>();
  ir->name = std::move(name);
  ir->path = path;
  Subsystem norm = normalize_rates(B, raw, path);
  SubBuilder sb(B, norm, std::move(path), *ir);
  sb.run(act, trig_type);

  if (B.prop && !B.objective_done && sb.path == B.prop->scope) {
    B.objective.owner_path = sb.path;
    B.objective.property_id = B.prop->id;
    B.objective.phi = sb.compile_prop(*B.prop->expr);
    B.objective_done = true;
    check_objective_vars(B, *ir);
  }
  return ir;
}

void collect_vars(const IRExprPtr & e, std::set<std::string> & vars) {
  if (!e) return;
  if (e->k == IRExpr::K::Var) vars.insert(e->name);
  collect_vars(e->a, vars);
  collect_vars(e->b, vars);
  collect_vars(e->c, vars);
}

void check_objective_vars(Builder & B, const SubsystemIR & owner) {
  if (owner.activation.kind == ActivationKind::None) return;
  std::set<std::string> params;
  for (const auto & v : owner.vin) params.insert(v.name);
  for (const auto & v : owner.wrapper_in) params.insert(v.name);
  for (const auto & v : owner.vout) params.insert(v.name);
  for (const auto & v : owner.skolems) params.insert(v.name);
  std::set<std::string> used;
  collect_vars(B.objective.phi, used);
  for (const auto & n : used) {
    if (!params.count(n))
      B.diags.error("property",
                    "objective inside a conditionally executed subsystem may only "
                    "reference inputs, outputs, and states",
                    "ref");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Block table and slicing

namespace {

void table_walk(const TypedModel & tm, const Subsystem & sub,
                const std::vector<std::string> & path, BlockTable & bt) {
  for (const auto & b : sub.blocks) {
    BlockRec rec;
    rec.path = path;
    rec.id = b.id;
    rec.type = b.type;
    rec.rate = b.rate;
    rec.stub = !is_supported_block_type(b.type);
    unsigned nin = block_in_arity(b);
    for (unsigned p = 1; p <= nin; p++) {
      const Line * l = find_feed(sub, b.id, p);
      if (l)
        rec.preds.push_back({path_key(path, l->src_block), l->src_port});
      else
        rec.preds.push_back({"", 0});
    }
    for (PortKind pk : {PortKind::Enable, PortKind::Trigger}) {
      const Line * l = find_feed(sub, b.id, 0, pk);
      if (l) rec.preds.push_back({path_key(path, l->src_block), 0});
    }
    bt.index[path_key(path, b.id)] = bt.recs.size();
    bt.recs.push_back(std::move(rec));
    if (b.type == "SubSystem" && b.sub) {
      auto cp = path;
      cp.push_back(b.id);
      table_walk(tm, *b.sub, cp, bt);
    }
  }
}

}  // namespace

BlockTable build_block_table(const TypedModel & tm) {
  BlockTable bt;
  table_walk(tm, tm.model.root, {}, bt);
  return bt;
}

size_t count_blocks(const Model & m) {
  size_t n = 0;
  std::vector<const Subsystem *> stack{&m.root};
  while (!stack.empty()) {
    const Subsystem * s = stack.back();
    stack.pop_back();
    for (const auto & b : s->blocks) {
      n++;
      if (b.sub) stack.push_back(b.sub.get());
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Slicing

namespace {

struct Slicer {
  explicit Slicer(const TypedModel & t) : tm(t) {}

  const TypedModel & tm;
  // Kept block instances by path key.
  std::set<std::string> keep;
  std::set<std::string> shelled;  // subsystem shells already processed
  // Worklist of block instances whose full input cone is needed.
  std::vector<std::vector<std::string>> work;  // absolute path incl. block id

  const Subsystem * container_of(const std::vector<std::string> & inst,
                                 const Block ** out_block) {
    const Subsystem * sub = &tm.model.root;
    for (size_t i = 0; i + 1 < inst.size(); i++) {
      const Block * b = sub->find_block(inst[i]);
      if (!b || !b->sub) return nullptr;
      sub = b->sub.get();
    }
    *out_block = sub->find_block(inst.back());
    return *out_block ? sub : nullptr;
  }

  static std::string key_of(const std::vector<std::string> & inst) {
    std::vector<std::string> path(inst.begin(), inst.end() - 1);
    return path_key(path, inst.back());
  }

  void need_block(std::vector<std::string> inst) {
    if (inst.empty()) return;
    std::string key = key_of(inst);
    if (keep.count(key)) return;
    keep.insert(key);
    work.push_back(std::move(inst));
  }

  // The producer of (instance, port) is needed.
  void need_port(const std::vector<std::string> & inst, unsigned port) {
    const Block * b = nullptr;
    const Subsystem * sub = container_of(inst, &b);
    if (!sub || !b) return;
    if (b->type == "SubSystem" && b->sub) {
      keep_shell(inst, *b);
      // Only the cone of the referenced outport is needed inside.
      unsigned next = 1;
      for (const auto & cb : b->sub->blocks) {
        if (cb.type != "Outport") continue;
        unsigned idx = cb.params.value("port", next);
        next = idx + 1;
        if (idx == port) {
          auto ci = inst;
          ci.push_back(cb.id);
          need_block(std::move(ci));
        }
      }
      return;
    }
    need_block(inst);
  }

  // Keeps a subsystem block itself plus its activation machinery without
  // pulling every inport.
  void keep_shell(const std::vector<std::string> & inst, const Block & b) {
    std::string key = key_of(inst);
    if (!shelled.insert(key).second) return;
    keep.insert(key);
    // Containing subsystems must survive too.
    if (inst.size() > 1) {
      const Block * ob = nullptr;
      std::vector<std::string> outer(inst.begin(), inst.end() - 1);
      if (container_of(outer, &ob) && ob) keep_shell(outer, *ob);
    }
    const Block * self = nullptr;
    const Subsystem * sub = container_of(inst, &self);
    if (!sub) return;
    for (PortKind pk : {PortKind::Enable, PortKind::Trigger}) {
      const Line * l = find_feed(*sub, b.id, 0, pk);
      if (l) {
        std::vector<std::string> src(inst.begin(), inst.end() - 1);
        src.push_back(l->src_block);
        need_port(src, l->src_port);
      }
    }
    if (b.sub) {
      for (const auto & cb : b.sub->blocks) {
        if (cb.port_kind != PortKind::None) {
          auto ci = inst;
          ci.push_back(cb.id);
          keep.insert(key_of(ci));
        }
      }
    }
  }

  void close() {
    while (!work.empty()) {
      auto inst = std::move(work.back());
      work.pop_back();
      const Block * b = nullptr;
      const Subsystem * sub = container_of(inst, &b);
      if (!sub || !b) continue;

      // Containing subsystem shells stay alive.
      if (inst.size() > 1) {
        const Block * ob = nullptr;
        std::vector<std::string> outer(inst.begin(), inst.end() - 1);
        const Subsystem * osub = container_of(outer, &ob);
        if (osub && ob) keep_shell(outer, *ob);
      }

      if (b->type == "Inport" && inst.size() > 1) {
        // Continue at the parent's feed of this port.
        unsigned idx = 0, next2 = 1;
        for (const auto & cb : sub->blocks) {
          if (cb.type != "Inport") continue;
          unsigned i2 = cb.params.value("port", next2);
          next2 = i2 + 1;
          if (cb.id == b->id) idx = i2;
        }
        std::vector<std::string> outer(inst.begin(), inst.end() - 1);
        const Block * ob = nullptr;
        const Subsystem * osub = container_of(outer, &ob);
        if (osub && ob && idx > 0) {
          const Line * l = find_feed(*osub, outer.back(), idx);
          if (l) {
            std::vector<std::string> src(outer.begin(), outer.end() - 1);
            src.push_back(l->src_block);
            need_port(src, l->src_port);
          }
        }
        continue;
      }

      if (b->type == "SubSystem") {
        // Reached as a whole (e.g. a state reference target inside): the
        // shell is kept; internals arrive through their own needs.
        keep_shell(inst, *b);
        continue;
      }

      unsigned nin = block_in_arity(*b);
      for (unsigned p = 1; p <= nin; p++) {
        const Line * l = find_feed(*sub, b->id, p);
        if (!l) continue;
        std::vector<std::string> src(inst.begin(), inst.end() - 1);
        src.push_back(l->src_block);
        need_port(src, l->src_port);
      }
    }
  }

  Subsystem filter(const Subsystem & sub, const std::vector<std::string> & path) {
    Subsystem out;
    unsigned next_in = 1, next_out = 1;
    for (const auto & b : sub.blocks) {
      unsigned in_idx = 0, out_idx = 0;
      if (b.type == "Inport") {
        in_idx = b.params.value("port", next_in);
        next_in = in_idx + 1;
      }
      if (b.type == "Outport") {
        out_idx = b.params.value("port", next_out);
        next_out = out_idx + 1;
      }
      if (!keep.count(path_key(path, b.id))) continue;
      Block nb = b;
      if (b.type == "Inport") nb.params["port"] = in_idx;
      if (b.type == "Outport") nb.params["port"] = out_idx;
      if (b.sub) {
        auto cp = path;
        cp.push_back(b.id);
        nb.sub = std::make_shared<Subsystem>(filter(*b.sub, cp));
      }
      out.blocks.push_back(std::move(nb));
    }
    for (const auto & l : sub.lines) {
      if (!keep.count(path_key(path, l.src_block))) continue;
      Line nl;
      nl.src_block = l.src_block;
      nl.src_port = l.src_port;
      for (const auto & d : l.dsts)
        if (keep.count(path_key(path, d.block))) nl.dsts.push_back(d);
      if (!nl.dsts.empty()) out.lines.push_back(nl);
    }
    return out;
  }
};

}  // namespace

TypedModel slice(const TypedModel & tm, const Property & prop) {
  Slicer sl(tm);

  auto seed_ref = [&](const PropExpr & e) {
    std::vector<std::string> inst = prop.scope;
    for (const auto & seg : e.ref_path) inst.push_back(seg);
    if (e.kind == PropExpr::K::Sig) {
      sl.need_port(inst, e.ref_port);
    } else {
      sl.need_block(std::move(inst));
    }
  };
  std::vector<const PropExpr *> stack{prop.expr.get()};
  while (!stack.empty()) {
    const PropExpr * e = stack.back();
    stack.pop_back();
    if (e->kind == PropExpr::K::Sig || e->kind == PropExpr::K::State) seed_ref(*e);
    for (const auto & a : e->args) stack.push_back(a.get());
  }
  sl.close();

  TypedModel out;
  out.model = tm.model;
  out.model.root = sl.filter(tm.model.root, {});
  out.out_types = tm.out_types;
  return out;
}

// ---------------------------------------------------------------------------
// build_ir

IRBuild build_ir(const TypedModel & tm, const Property & prop) {
  Builder B(tm);
  B.prop = &prop;
  auto root = build_one(B, tm.model.root, {}, tm.model.name, Activation{}, DataType{});
  if (!B.objective_done)
    B.diags.error("property", "scope subsystem not found in model", "ref");
  B.diags.throw_if_errors();
  IRBuild out;
  out.root = std::move(root);
  out.objective = std::move(B.objective);
  return out;
}

// ---------------------------------------------------------------------------
// Debug dumps

namespace {

std::string op_name(IROp op) {
  switch (op) {
    case IROp::Add: return "+";
    case IROp::Sub: return "-";
    case IROp::Mul: return "*";
    case IROp::Div: return "/";
    case IROp::Min: return "min";
    case IROp::Max: return "max";
    case IROp::And: return "and";
    case IROp::Or: return "or";
    case IROp::Xor: return "xor";
    case IROp::Lt: return "<";
    case IROp::Le: return "<=";
    case IROp::Gt: return ">";
    case IROp::Ge: return ">=";
    case IROp::Eq: return "=";
    case IROp::Ne: return "distinct";
    case IROp::Neg: return "neg";
    case IROp::Abs: return "abs";
    case IROp::Not: return "not";
  }
  return "?";
}

std::string expr_str(const IRExprPtr & e) {
  if (!e) return "_";
  switch (e->k) {
    case IRExpr::K::Const: return e->ctext.empty() ? e->cval.str() : e->ctext;
    case IRExpr::K::Var: return e->name;
    case IRExpr::K::StateRead: return e->name + "@0";
    case IRExpr::K::Unary: return "(" + op_name(e->op) + " " + expr_str(e->a) + ")";
    case IRExpr::K::Binary:
      return "(" + op_name(e->op) + " " + expr_str(e->a) + " " + expr_str(e->b) + ")";
    case IRExpr::K::Ite:
      return "(ite " + expr_str(e->a) + " " + expr_str(e->b) + " " + expr_str(e->c) + ")";
    case IRExpr::K::Cast:
      return "(cast " + print_dtype(e->dtype) + " " + expr_str(e->a) + ")";
    case IRExpr::K::BusMember:
      return "(member " + expr_str(e->a) + " " + e->member + ")";
  }
  return "?";
}

}  // namespace

Json ir_to_json(const SubsystemIR & ir) {
  Json j;
  j["name"] = ir.name;
  switch (ir.activation.kind) {
    case ActivationKind::None: j["activation"] = "none"; break;
    case ActivationKind::Enabled: j["activation"] = "enabled"; break;
    case ActivationKind::Triggered: j["activation"] = "triggered"; break;
    case ActivationKind::RateDivided:
      j["activation"] = "rate/" + std::to_string(ir.activation.divisor);
      break;
  }
  auto decls = [](const std::vector<VarDecl> & vs) {
    Json a = Json::array();
    for (const auto & v : vs) a.push_back(v.name + ":" + print_dtype(v.dtype));
    return a;
  };
  j["in"] = decls(ir.vin);
  if (!ir.wrapper_in.empty()) j["wrapper_in"] = decls(ir.wrapper_in);
  j["out"] = decls(ir.vout);
  Json st = Json::array();
  for (const auto & s : ir.all_states())
    st.push_back(s.name + ":" + print_dtype(s.dtype) + "=" + s.init_text);
  j["states"] = st;
  if (!ir.skolems.empty()) j["skolems"] = decls(ir.skolems);
  Json steps = Json::array();
  for (const auto & s : ir.steps) {
    switch (s.k) {
      case IRStep::K::Local: steps.push_back("let " + s.lhs + " = " + expr_str(s.rhs)); break;
      case IRStep::K::SkolemEq: steps.push_back("pin " + s.lhs + " = " + expr_str(s.rhs)); break;
      case IRStep::K::ChildCall: steps.push_back("call " + ir.child_ids[s.child]); break;
      case IRStep::K::BusMake: {
        std::string t = "bus " + s.lhs + " {";
        for (const auto & [m, e] : s.members) t += m + "=" + expr_str(e) + ";";
        steps.push_back(t + "}");
        break;
      }
      case IRStep::K::OutputEq: steps.push_back("out " + s.lhs + " = " + expr_str(s.rhs)); break;
      case IRStep::K::StateNextEq:
        steps.push_back("next " + s.lhs + " = " + expr_str(s.rhs));
        break;
    }
  }
  j["steps"] = steps;
  Json kids = Json::array();
  for (const auto & c : ir.children) kids.push_back(ir_to_json(*c));
  if (!kids.empty()) j["children"] = kids;
  return j;
}

Json block_table_to_json(const BlockTable & bt) {
  Json a = Json::array();
  for (const auto & r : bt.recs) {
    Json j;
    j["block"] = path_key(r.path, r.id);
    j["type"] = r.type;
    if (r.rate != 1) j["rate"] = r.rate;
    if (r.stub) j["stub"] = true;
    Json preds = Json::array();
    for (const auto & [k, p] : r.preds)
      preds.push_back(k.empty() ? Json() : Json(k + "/" + std::to_string(p)));
    j["preds"] = preds;
    a.push_back(j);
  }
  return a;
}

}  // namespace blockcheck
