#include "blockcheck/frontend.hpp"

#include <algorithm>
#include <set>

namespace blockcheck {

namespace {

const std::set<std::string> kSupported = {
    "Inport", "Outport", "Constant", "Add", "Sub", "Gain", "Product", "Saturate",
    "MinMax", "Abs", "UnaryMinus", "UnitDelay", "Delay", "Switch",
    "RelationalOperator", "CompareToConstant", "CompareToZero", "Logic",
    "DataTypeConversion", "Mux", "Demux", "BusCreator", "BusSelector",
    "SubSystem", "EnablePort", "TriggerPort", "RateTransition"};

unsigned count_ports(const Subsystem & sub, const std::string & type) {
  unsigned n = 0;
  for (const auto & b : sub.blocks)
    if (b.type == type) n++;
  return n;
}

}  // namespace

bool is_supported_block_type(const std::string & type) { return kSupported.count(type) > 0; }

bool block_is_stateful(const Block & b) {
  return b.type == "UnitDelay" || b.type == "Delay" || b.type == "RateTransition";
}

unsigned block_in_arity(const Block & b) {
  const std::string & t = b.type;
  if (t == "Inport" || t == "Constant" || t == "EnablePort" || t == "TriggerPort") return 0;
  if (t == "Outport" || t == "Gain" || t == "Saturate" || t == "Abs" || t == "UnaryMinus" ||
      t == "UnitDelay" || t == "Delay" || t == "CompareToConstant" || t == "CompareToZero" ||
      t == "DataTypeConversion" || t == "Demux" || t == "BusSelector" || t == "RateTransition")
    return 1;
  if (t == "Switch") return 3;
  if (t == "RelationalOperator") return 2;
  if (t == "Sub") return 2;
  if (t == "Add") {
    std::string signs = b.params.value("signs", "++");
    return (unsigned)signs.size();
  }
  if (t == "Product") {
    std::string ops = b.params.value("ops", "**");
    return (unsigned)ops.size();
  }
  if (t == "MinMax") return (unsigned)b.params.value("inputs", 2);
  if (t == "Logic") {
    std::string op = b.params.value("op", "AND");
    return op == "NOT" ? 1u : (unsigned)b.params.value("inputs", 2);
  }
  if (t == "Mux") return (unsigned)b.params.value("inputs", 2);
  if (t == "BusCreator") return (unsigned)b.params.value("inputs", 2);
  if (t == "SubSystem")
    return b.sub ? count_ports(*b.sub, "Inport") : 0;
  // Stub: arity fixed by wiring, discovered during load; stored in params.
  return (unsigned)b.params.value("__stub_in", 0);
}

unsigned block_out_arity(const Block & b) {
  const std::string & t = b.type;
  if (t == "Outport" || t == "EnablePort" || t == "TriggerPort") return 0;
  if (t == "Demux") return (unsigned)b.params.value("outputs", 2);
  if (t == "BusSelector") {
    if (b.params.contains("members") && b.params["members"].is_array())
      return (unsigned)b.params["members"].size();
    return 1;
  }
  if (t == "SubSystem") return b.sub ? count_ports(*b.sub, "Outport") : 0;
  if (kSupported.count(t)) return 1;
  return (unsigned)b.params.value("__stub_out", 1);
}

std::string path_key(const std::vector<std::string> & path, const std::string & id) {
  std::string k;
  for (const auto & seg : path) k += seg + "/";
  return k + id;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

Line::Dst parse_dst(const std::string & text, Diagnostics & diags, const std::string & where) {
  Line::Dst d;
  auto slash = text.rfind('/');
  if (slash == std::string::npos) {
    diags.error(where, "line endpoint '" + text + "' must be 'block/port'", "schema");
    d.block = text;
    return d;
  }
  d.block = text.substr(0, slash);
  std::string port = text.substr(slash + 1);
  if (port == "en") {
    d.special = PortKind::Enable;
  } else if (port == "tr") {
    d.special = PortKind::Trigger;
  } else {
    try {
      d.port = (unsigned)std::stoul(port);
    } catch (...) {
      diags.error(where, "bad port index '" + port + "'", "schema");
      d.port = 1;
    }
    if (d.port == 0) {
      diags.error(where, "port indices are 1-based", "schema");
      d.port = 1;
    }
  }
  return d;
}

Subsystem load_subsystem(const Json & j, const std::vector<std::string> & path,
                         Diagnostics & diags);

Block load_block(const Json & j, const std::vector<std::string> & path, Diagnostics & diags) {
  Block b;
  std::string where = path_key(path, j.value("id", "?"));
  if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
    diags.error(where, "block requires a nonempty string id", "schema");
  } else {
    b.id = j["id"].get<std::string>();
    if (b.id.find('/') != std::string::npos || b.id.find('@') != std::string::npos ||
        b.id.find('.') != std::string::npos)
      diags.error(where, "block id must not contain '/', '.' or '@'", "schema");
    else if (b.id[0] == '_')
      diags.error(where, "block id must not start with '_' (reserved)", "schema");
  }
  if (!j.contains("type") || !j["type"].is_string()) {
    diags.error(where, "block requires a type", "schema");
    return b;
  }
  b.type = j["type"].get<std::string>();
  if (j.contains("params")) {
    if (!j["params"].is_object())
      diags.error(where, "params must be an object", "schema");
    else
      b.params = j["params"];
  }
  if (j.contains("out_type")) {
    try {
      b.out_type = parse_dtype(j["out_type"].get<std::string>());
    } catch (const BlockcheckError & e) {
      diags.error(where, e.what(), "schema");
    }
  }
  if (j.contains("rate")) {
    if (!j["rate"].is_number_unsigned() || j["rate"].get<unsigned>() == 0)
      diags.error(where, "rate must be a positive integer", "schema");
    else
      b.rate = j["rate"].get<unsigned>();
  }
  if (b.type == "SubSystem") {
    if (!j.contains("system")) {
      diags.error(where, "SubSystem block requires a nested system", "schema");
    } else {
      auto sub_path = path;
      sub_path.push_back(b.id);
      b.sub = std::make_shared<Subsystem>(load_subsystem(j["system"], sub_path, diags));
    }
  } else if (j.contains("system")) {
    diags.error(where, "only SubSystem blocks may nest a system", "schema");
  }
  if (b.type == "EnablePort") b.port_kind = PortKind::Enable;
  if (b.type == "TriggerPort") b.port_kind = PortKind::Trigger;
  if (!is_supported_block_type(b.type)) {
    diags.warn(where, "block type '" + b.type + "' is not supported; stubbed", "stub");
  }
  return b;
}

Subsystem load_subsystem(const Json & j, const std::vector<std::string> & path,
                         Diagnostics & diags) {
  Subsystem sub;
  std::string where = path.empty() ? std::string("(root)") : path_key(path, "");
  if (!j.is_object() || !j.contains("blocks") || !j["blocks"].is_array()) {
    diags.error(where, "system requires a blocks array", "schema");
    return sub;
  }
  std::set<std::string> ids;
  for (const auto & bj : j["blocks"]) {
    Block b = load_block(bj, path, diags);
    if (!b.id.empty() && !ids.insert(b.id).second)
      diags.error(path_key(path, b.id), "duplicate block id", "schema");
    sub.blocks.push_back(std::move(b));
  }
  if (j.contains("lines")) {
    if (!j["lines"].is_array()) {
      diags.error(where, "lines must be an array", "schema");
      return sub;
    }
    for (const auto & lj : j["lines"]) {
      Line l;
      if (!lj.contains("src") || !lj["src"].is_string() || !lj.contains("dst") ||
          !lj["dst"].is_array()) {
        diags.error(where, "line requires src string and dst array", "schema");
        continue;
      }
      Line::Dst src = parse_dst(lj["src"].get<std::string>(), diags, where);
      if (src.special != PortKind::None) {
        diags.error(where, "line src cannot be an activation port", "schema");
        continue;
      }
      l.src_block = src.block;
      l.src_port = src.port;
      for (const auto & dj : lj["dst"])
        l.dsts.push_back(parse_dst(dj.get<std::string>(), diags, where));
      sub.lines.push_back(std::move(l));
    }
  }

  // Referential integrity and single-writer-per-inport checks.
  std::set<std::pair<std::string, std::string>> seen_dst;
  for (const auto & l : sub.lines) {
    const Block * src = sub.find_block(l.src_block);
    if (!src) {
      diags.error(path_key(path, l.src_block), "line from unknown block", "ref");
      continue;
    }
    if (l.src_port > block_out_arity(*src) && is_supported_block_type(src->type))
      diags.error(path_key(path, l.src_block),
                  "line from nonexistent outport " + std::to_string(l.src_port), "ref");
    for (const auto & d : l.dsts) {
      const Block * dst = sub.find_block(d.block);
      if (!dst) {
        diags.error(path_key(path, d.block), "line to unknown block", "ref");
        continue;
      }
      std::string port_name = d.special == PortKind::Enable    ? "en"
                              : d.special == PortKind::Trigger ? "tr"
                                                               : std::to_string(d.port);
      if (d.special == PortKind::None && is_supported_block_type(dst->type) &&
          d.port > block_in_arity(*dst))
        diags.error(path_key(path, d.block), "line to nonexistent inport " + port_name, "ref");
      if (d.special != PortKind::None) {
        if (dst->type != "SubSystem") {
          diags.error(path_key(path, d.block), "activation port on non-subsystem", "ref");
        } else if (dst->sub) {
          PortKind need = d.special;
          bool has = false;
          for (const auto & cb : dst->sub->blocks)
            if (cb.port_kind == need) has = true;
          if (!has)
            diags.error(path_key(path, d.block),
                        "subsystem has no matching activation port block", "ref");
        }
      }
      if (!seen_dst.insert({d.block, port_name}).second)
        diags.error(path_key(path, d.block), "inport " + port_name + " driven twice", "ref");
    }
  }
  return sub;
}

// Records stub arities from wiring so later stages see consistent ports.
void fix_stub_arities(Subsystem & sub, const std::vector<std::string> & path) {
  for (auto & b : sub.blocks) {
    if (b.type == "SubSystem" && b.sub) {
      auto sp = path;
      sp.push_back(b.id);
      fix_stub_arities(*b.sub, sp);
    }
    if (is_supported_block_type(b.type)) continue;
    unsigned in_max = 0, out_max = 0;
    for (const auto & l : sub.lines) {
      if (l.src_block == b.id) out_max = std::max(out_max, l.src_port);
      for (const auto & d : l.dsts)
        if (d.block == b.id && d.special == PortKind::None) in_max = std::max(in_max, d.port);
    }
    b.params["__stub_in"] = in_max;
    b.params["__stub_out"] = std::max(out_max, 1u);
  }
}

}  // namespace

Model load_model(const std::string & bytes) {
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const std::exception & e) {
    throw BlockcheckError(std::string("malformed JSON: ") + e.what());
  }
  Diagnostics diags;
  Model m;
  if (!j.is_object()) {
    diags.error("", "top level must be an object", "schema");
    diags.throw_if_errors();
  }
  m.name = j.value("name", "model");
  if (j.contains("sample_time")) {
    try {
      if (j["sample_time"].is_string())
        m.sample_time = parse_rational(j["sample_time"].get<std::string>());
      else
        m.sample_time = parse_rational(j["sample_time"].dump());
      if (m.sample_time <= 0) diags.error("", "sample_time must be positive", "schema");
    } catch (const BlockcheckError & e) {
      diags.error("", e.what(), "schema");
    }
  }
  if (j.contains("bus_types")) {
    for (const auto & [bname, members] : j["bus_types"].items()) {
      std::vector<std::pair<std::string, DataType>> ms;
      if (!members.is_array()) {
        diags.error("", "bus type '" + bname + "' must be an array of members", "schema");
        continue;
      }
      for (const auto & mj : members) {
        try {
          ms.emplace_back(mj.at("name").get<std::string>(),
                          parse_dtype(mj.at("type").get<std::string>()));
        } catch (const std::exception & e) {
          diags.error("", "bus type '" + bname + "': " + e.what(), "schema");
        }
      }
      m.bus_types[bname] = std::move(ms);
    }
    try {
      check_bus_table(m.bus_types);
    } catch (const BlockcheckError & e) {
      diags.error("", e.what(), "schema");
    }
  }
  if (!j.contains("system")) {
    diags.error("", "model requires a system", "schema");
  } else {
    m.root = load_subsystem(j["system"], {}, diags);
  }
  fix_stub_arities(m.root, {});
  diags.throw_if_errors();
  return m;
}

namespace {

Json serialize_subsystem(const Subsystem & sub) {
  Json j = Json::object();
  j["blocks"] = Json::array();
  for (const auto & b : sub.blocks) {
    Json bj = Json::object();
    bj["id"] = b.id;
    bj["type"] = b.type;
    Json params = b.params;
    params.erase("__stub_in");
    params.erase("__stub_out");
    if (!params.empty()) bj["params"] = params;
    if (b.out_type) bj["out_type"] = print_dtype(*b.out_type);
    if (b.rate != 1) bj["rate"] = b.rate;
    if (b.sub) bj["system"] = serialize_subsystem(*b.sub);
    j["blocks"].push_back(bj);
  }
  j["lines"] = Json::array();
  for (const auto & l : sub.lines) {
    Json lj = Json::object();
    lj["src"] = l.src_block + "/" + std::to_string(l.src_port);
    lj["dst"] = Json::array();
    for (const auto & d : l.dsts) {
      std::string port = d.special == PortKind::Enable    ? "en"
                         : d.special == PortKind::Trigger ? "tr"
                                                          : std::to_string(d.port);
      lj["dst"].push_back(d.block + "/" + port);
    }
    j["lines"].push_back(lj);
  }
  return j;
}

}  // namespace

std::string serialize_model(const Model & m) {
  Json j = Json::object();
  j["name"] = m.name;
  j["sample_time"] = print_rational(m.sample_time);
  if (!m.bus_types.empty()) {
    Json bt = Json::object();
    for (const auto & [name, members] : m.bus_types) {
      Json ms = Json::array();
      for (const auto & [mn, mt] : members)
        ms.push_back(Json{{"name", mn}, {"type", print_dtype(mt)}});
      bt[name] = ms;
    }
    j["bus_types"] = bt;
  }
  j["system"] = serialize_subsystem(m.root);
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Type inference

namespace {

struct InferCtx {
  TypedModel & tm;
  bool changed = false;

  std::vector<DataType> * types_of(const std::vector<std::string> & path, const std::string & id) {
    auto it = tm.out_types.find(path_key(path, id));
    return it == tm.out_types.end() ? nullptr : &it->second;
  }

  void set_types(const std::vector<std::string> & path, const Block & b,
                 std::vector<DataType> ts) {
    std::string key = path_key(path, b.id);
    auto it = tm.out_types.find(key);
    if (it == tm.out_types.end()) {
      tm.out_types.emplace(key, std::move(ts));
      changed = true;
    } else if (it->second != ts) {
      // First resolution wins; disagreement is reported by the check pass.
      it->second = std::move(ts);
      changed = true;
    }
  }
};

const Line * find_feed(const Subsystem & sub, const std::string & block, unsigned port,
                       PortKind special = PortKind::None) {
  for (const auto & l : sub.lines)
    for (const auto & d : l.dsts)
      if (d.block == block && d.special == special && (special != PortKind::None || d.port == port))
        return &l;
  return nullptr;
}

std::optional<DataType> input_type(InferCtx & cx, const std::vector<std::string> & path,
                                   const Subsystem & sub, const std::string & block,
                                   unsigned port, PortKind special = PortKind::None) {
  const Line * l = find_feed(sub, block, port, special);
  if (!l) return std::nullopt;
  auto * ts = cx.types_of(path, l->src_block);
  if (!ts || l->src_port > ts->size()) return std::nullopt;
  return (*ts)[l->src_port - 1];
}

DataType broadcast(const DataType & a, const DataType & b) {
  // Element-wise combination: any vector/matrix shape wins over scalar.
  if (a.kind == DataType::Kind::Vector || a.kind == DataType::Kind::Matrix) return a;
  return b;
}

DataType constant_type(const Block & b) {
  if (b.out_type) return *b.out_type;
  const Json & v = b.params.contains("value") ? b.params["value"] : Json(0.0);
  if (v.is_boolean()) return DataType::boolean();
  if (v.is_array()) {
    if (!v.empty() && v[0].is_array())
      return DataType::matrix_of(DataType::float_t(FloatPrec::Double), (unsigned)v.size(),
                                 (unsigned)v[0].size());
    return DataType::vector_of(DataType::float_t(FloatPrec::Double), (unsigned)v.size());
  }
  return DataType::float_t(FloatPrec::Double);
}

void infer_subsystem(InferCtx & cx, const Subsystem & sub, const std::vector<std::string> & path,
                     const std::vector<std::optional<DataType>> & inport_types) {
  // Map Inport blocks to positional indices (param "port", else appearance order).
  unsigned next_port = 1;
  for (const auto & b : sub.blocks) {
    if (b.type != "Inport") continue;
    unsigned idx = b.params.value("port", next_port);
    next_port = idx + 1;
    std::optional<DataType> t;
    if (idx >= 1 && idx <= inport_types.size()) t = inport_types[idx - 1];
    if (!t && b.out_type) t = b.out_type;
    if (t) cx.set_types(path, b, {*t});
  }

  for (const auto & b : sub.blocks) {
    const std::string & ty = b.type;
    if (ty == "Inport" || ty == "Outport" || ty == "EnablePort" || ty == "TriggerPort") continue;

    if (ty == "SubSystem" && b.sub) {
      unsigned nin = block_in_arity(b);
      std::vector<std::optional<DataType>> child_ins(nin);
      for (unsigned p = 1; p <= nin; p++) child_ins[p - 1] = input_type(cx, path, sub, b.id, p);
      auto child_path = path;
      child_path.push_back(b.id);
      infer_subsystem(cx, *b.sub, child_path, child_ins);
      // Outport k of the child gives this block's out k.
      std::vector<DataType> outs;
      bool all = true;
      unsigned nout = block_out_arity(b);
      for (unsigned p = 1; p <= nout; p++) {
        bool found = false;
        unsigned next_out = 1;
        for (const auto & cb : b.sub->blocks) {
          if (cb.type != "Outport") continue;
          unsigned idx = cb.params.value("port", next_out);
          next_out = idx + 1;
          if (idx != p) continue;
          if (auto t = input_type(cx, child_path, *b.sub, cb.id, 1)) {
            outs.push_back(*t);
            found = true;
          }
          break;
        }
        if (!found) {
          all = false;
          break;
        }
      }
      if (all && outs.size() == nout) cx.set_types(path, b, std::move(outs));
      continue;
    }

    if (ty == "Constant") {
      cx.set_types(path, b, {constant_type(b)});
      continue;
    }
    if (ty == "DataTypeConversion") {
      DataType out = b.out_type ? *b.out_type
                                : parse_dtype(b.params.value("out_type", "double"));
      if (auto in = input_type(cx, path, sub, b.id, 1)) out = broadcast(*in, out);
      cx.set_types(path, b, {out});
      continue;
    }
    if (ty == "Logic" || ty == "RelationalOperator" || ty == "CompareToConstant" ||
        ty == "CompareToZero") {
      DataType out = DataType::boolean();
      if (auto in = input_type(cx, path, sub, b.id, 1)) out = broadcast(*in, out);
      cx.set_types(path, b, {out});
      continue;
    }
    if (ty == "Mux") {
      unsigned n = block_in_arity(b);
      auto first = input_type(cx, path, sub, b.id, 1);
      if (first && first->is_scalar())
        cx.set_types(path, b, {DataType::vector_of(*first, n)});
      continue;
    }
    if (ty == "Demux") {
      auto in = input_type(cx, path, sub, b.id, 1);
      if (in && in->kind == DataType::Kind::Vector) {
        std::vector<DataType> outs(block_out_arity(b), in->elem_type());
        cx.set_types(path, b, std::move(outs));
      }
      continue;
    }
    if (ty == "BusCreator") {
      std::string bus = b.params.value("bus", "");
      cx.set_types(path, b, {DataType::bus(bus)});
      continue;
    }
    if (ty == "BusSelector") {
      auto in = input_type(cx, path, sub, b.id, 1);
      if (!in || in->kind != DataType::Kind::Bus) continue;
      auto bt = cx.tm.model.bus_types.find(in->bus_name);
      if (bt == cx.tm.model.bus_types.end()) continue;
      std::vector<DataType> outs;
      bool ok = true;
      if (b.params.contains("members")) {
        for (const auto & mj : b.params["members"]) {
          std::string want = mj.get<std::string>();
          bool found = false;
          for (const auto & [mn, mt] : bt->second)
            if (mn == want) {
              outs.push_back(mt);
              found = true;
            }
          if (!found) ok = false;
        }
      }
      if (ok && !outs.empty()) cx.set_types(path, b, std::move(outs));
      continue;
    }
    if (!is_supported_block_type(ty)) {
      DataType out = b.out_type ? *b.out_type : DataType::float_t(FloatPrec::Double);
      cx.set_types(path, b, std::vector<DataType>(block_out_arity(b), out));
      continue;
    }

    // Element-wise family: output type follows the first resolvable data input
    // (Switch prefers a data branch over the control input).
    std::vector<unsigned> probe;
    if (ty == "Switch")
      probe = {1, 3};
    else
      for (unsigned p = 1; p <= block_in_arity(b); p++) probe.push_back(p);
    std::optional<DataType> in;
    for (unsigned p : probe) {
      in = input_type(cx, path, sub, b.id, p);
      if (in) break;
    }
    if (in) {
      DataType out = *in;
      if (b.out_type) out = *b.out_type;
      cx.set_types(path, b, {out});
    } else if (b.out_type) {
      cx.set_types(path, b, {*b.out_type});
    }
  }
}

void default_unresolved(InferCtx & cx, const Subsystem & sub,
                        const std::vector<std::string> & path) {
  for (const auto & b : sub.blocks) {
    if (b.type == "Outport" || b.type == "EnablePort" || b.type == "TriggerPort") continue;
    if (!cx.types_of(path, b.id)) {
      cx.tm.diags.warn(path_key(path, b.id), "type unresolved; defaulting to double", "type");
      cx.tm.out_types[path_key(path, b.id)] =
          std::vector<DataType>(std::max(block_out_arity(b), 1u), DataType::float_t(FloatPrec::Double));
      cx.changed = true;
    }
    if (b.sub) {
      auto sp = path;
      sp.push_back(b.id);
      default_unresolved(cx, *b.sub, sp);
    }
  }
}

void check_subsystem_types(InferCtx & cx, const Subsystem & sub,
                           const std::vector<std::string> & path) {
  auto in_t = [&](const Block & b, unsigned p) { return input_type(cx, path, sub, b.id, p); };
  for (const auto & b : sub.blocks) {
    std::string where = path_key(path, b.id);
    const std::string & ty = b.type;
    if (b.sub) {
      auto sp = path;
      sp.push_back(b.id);
      check_subsystem_types(cx, *b.sub, sp);
    }
    auto scalar_of = [](const DataType & t) {
      return t.is_scalar() ? t : t.elem_type();
    };
    if (ty == "Add" || ty == "Sub" || ty == "Product" || ty == "MinMax") {
      std::optional<DataType> base;
      for (unsigned p = 1; p <= block_in_arity(b); p++) {
        auto t = in_t(b, p);
        if (!t) continue;
        if (!base) base = t;
        else if (scalar_of(*base) != scalar_of(*t))
          cx.tm.diags.error(where, "input type conflict: " + print_dtype(*base) + " vs " +
                                       print_dtype(*t), "type");
      }
    }
    if (ty == "Switch") {
      auto a = in_t(b, 1), c = in_t(b, 3);
      if (a && c && scalar_of(*a) != scalar_of(*c))
        cx.tm.diags.error(where, "branch type conflict: " + print_dtype(*a) + " vs " +
                                     print_dtype(*c), "type");
    }
    if (ty == "Logic") {
      for (unsigned p = 1; p <= block_in_arity(b); p++) {
        auto t = in_t(b, p);
        if (t && scalar_of(*t).kind != DataType::Kind::Boolean)
          cx.tm.diags.error(where, "Logic input must be boolean", "type");
      }
    }
    if (ty == "Gain" || ty == "Saturate" || ty == "Abs" || ty == "UnaryMinus") {
      auto t = in_t(b, 1);
      if (t && !scalar_of(*t).is_numeric_scalar())
        cx.tm.diags.error(where, ty + " input must be numeric", "type");
    }
    if (ty == "BusCreator") {
      std::string bus = b.params.value("bus", "");
      auto bt = cx.tm.model.bus_types.find(bus);
      if (bt == cx.tm.model.bus_types.end()) {
        cx.tm.diags.error(where, "BusCreator names unknown bus '" + bus + "'", "type");
      } else if (bt->second.size() != block_in_arity(b)) {
        cx.tm.diags.error(where, "BusCreator arity differs from bus member count", "type");
      } else {
        for (unsigned p = 1; p <= block_in_arity(b); p++) {
          auto t = in_t(b, p);
          if (t && *t != bt->second[p - 1].second)
            cx.tm.diags.error(where, "bus member " + bt->second[p - 1].first + " type mismatch",
                              "type");
        }
      }
    }
  }
}

}  // namespace

TypedModel infer_types(const Model & m) {
  TypedModel tm;
  tm.model = m;
  InferCtx cx{tm};
  std::vector<std::optional<DataType>> no_ins;
  for (int round = 0; round < 64; round++) {
    cx.changed = false;
    infer_subsystem(cx, tm.model.root, {}, no_ins);
    if (!cx.changed) break;
  }
  default_unresolved(cx, tm.model.root, {});
  // One more propagation round so defaults flow through.
  for (int round = 0; round < 64; round++) {
    cx.changed = false;
    infer_subsystem(cx, tm.model.root, {}, no_ins);
    if (!cx.changed) break;
  }
  check_subsystem_types(cx, tm.model.root, {});
  tm.diags.throw_if_errors();
  return tm;
}

const Subsystem * resolve_scope(const Model & m, const std::vector<std::string> & scope) {
  const Subsystem * sub = &m.root;
  for (const auto & seg : scope) {
    const Block * b = sub->find_block(seg);
    if (!b || !b->sub) return nullptr;
    sub = b->sub.get();
  }
  return sub;
}

namespace {

void check_refs(const PropExpr & e, const TypedModel & tm, const std::vector<std::string> & scope,
                Diagnostics & diags) {
  if (e.kind == PropExpr::K::Sig || e.kind == PropExpr::K::State) {
    std::vector<std::string> path = scope;
    for (size_t i = 0; i + 1 < e.ref_path.size(); i++) path.push_back(e.ref_path[i]);
    const Subsystem * sub = resolve_scope(tm.model, path);
    std::string where;
    for (const auto & s : e.ref_path) where += (where.empty() ? "" : "/") + s;
    if (!sub) {
      diags.error(where, "reference path does not name a subsystem", "ref");
      return;
    }
    const Block * b = sub->find_block(e.ref_path.back());
    if (!b) {
      diags.error(where, "unresolved reference", "ref");
      return;
    }
    if (e.kind == PropExpr::K::State) {
      if (!block_is_stateful(*b))
        diags.error(where, "state() reference to a stateless block", "ref");
      else if (b->type == "Delay" && b->params.value("length", 1) != 1)
        diags.error(where, "state() on a multi-step Delay is ambiguous", "ref");
    } else if (e.ref_port > block_out_arity(*b)) {
      diags.error(where, "reference to nonexistent outport " + std::to_string(e.ref_port), "ref");
    }
    return;
  }
  for (const auto & a : e.args) check_refs(*a, tm, scope, diags);
}

// Loose boolean/numeric kind check; width/precision conflicts surface at
// encoding time where literal contexts are known.
enum class EKind { Bool, Num };

EKind expr_kind(const PropExpr & e, Diagnostics & diags) {
  auto want = [&](const PropExpr & a, EKind k) {
    if (expr_kind(a, diags) != k)
      diags.error("", "property type error near " + print_prop_expr(a), "type");
    return k;
  };
  switch (e.kind) {
    case PropExpr::K::Num: return EKind::Num;
    case PropExpr::K::BoolLit: return EKind::Bool;
    case PropExpr::K::Sig:
    case PropExpr::K::State: return EKind::Num;  // boolean signals compare as 0/1
    case PropExpr::K::Not: want(*e.args[0], EKind::Bool); return EKind::Bool;
    case PropExpr::K::And:
    case PropExpr::K::Or:
      want(*e.args[0], EKind::Bool);
      want(*e.args[1], EKind::Bool);
      return EKind::Bool;
    case PropExpr::K::Lt:
    case PropExpr::K::Le:
    case PropExpr::K::Gt:
    case PropExpr::K::Ge:
    case PropExpr::K::EqCmp:
    case PropExpr::K::Ne:
      want(*e.args[0], EKind::Num);
      want(*e.args[1], EKind::Num);
      return EKind::Bool;
    case PropExpr::K::Neg: want(*e.args[0], EKind::Num); return EKind::Num;
    default:
      want(*e.args[0], EKind::Num);
      want(*e.args[1], EKind::Num);
      return EKind::Num;
  }
}

}  // namespace

Property load_property(const std::string & bytes, const TypedModel & tm) {
  Json j;
  try {
    j = Json::parse(bytes);
  } catch (const std::exception & e) {
    throw BlockcheckError(std::string("malformed property JSON: ") + e.what());
  }
  Diagnostics diags;
  Property p;
  p.id = j.value("id", "prop");
  std::string scope = j.value("scope", "");
  size_t pos = 0;
  while (pos < scope.size()) {
    size_t slash = scope.find('/', pos);
    std::string seg = scope.substr(pos, slash == std::string::npos ? std::string::npos : slash - pos);
    if (!seg.empty()) p.scope.push_back(seg);
    if (slash == std::string::npos) break;
    pos = slash + 1;
  }
  if (!resolve_scope(tm.model, p.scope))
    diags.error(scope, "property scope does not name a subsystem", "ref");
  if (!j.contains("expr") || !j["expr"].is_string()) {
    diags.error(p.id, "property requires an expr string", "schema");
    diags.throw_if_errors();
  }
  p.expr_text = j["expr"].get<std::string>();
  p.expr = parse_prop_expr(p.expr_text);
  if (!diags.has_errors()) {
    check_refs(*p.expr, tm, p.scope, diags);
    if (!diags.has_errors() && expr_kind(*p.expr, diags) != EKind::Bool)
      diags.error(p.id, "property expression must be boolean", "type");
  }
  diags.throw_if_errors();
  return p;
}

}  // namespace blockcheck
