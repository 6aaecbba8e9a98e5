#pragma once

#include <json.hpp>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "blockcheck/propexpr.hpp"
#include "blockcheck/value.hpp"

namespace blockcheck {

using Json = nlohmann::json;

enum class PortKind { None, Enable, Trigger };

struct Subsystem;

struct Block {
  std::string id;
  std::string type;  // block type name; unknown types load as stubs
  Json params = Json::object();
  std::optional<DataType> out_type;
  unsigned rate = 1;
  std::shared_ptr<Subsystem> sub;  // present iff type == "SubSystem"
  PortKind port_kind = PortKind::None;
};

// One source port fanning out to destination ports. Enable/trigger
// destinations use the pseudo-ports "en"/"tr".
struct Line {
  std::string src_block;
  unsigned src_port = 1;
  struct Dst {
    std::string block;
    unsigned port = 1;
    PortKind special = PortKind::None;
  };
  std::vector<Dst> dsts;
};

struct Subsystem {
  std::vector<Block> blocks;
  std::vector<Line> lines;

  const Block * find_block(const std::string & id) const {
    for (const auto & b : blocks)
      if (b.id == id) return &b;
    return nullptr;
  }
};

struct Model {
  std::string name;
  BigRat sample_time = 1;
  BusTable bus_types;
  Subsystem root;
};

struct Property {
  std::string id;
  std::vector<std::string> scope;  // subsystem path from root (empty = root)
  PropExprPtr expr;
  std::string expr_text;
};

// Flat signal traces keyed by qualified variable name. States include the
// initial entry (step -1); inputs/outputs start at step 0.
struct Trace {
  unsigned length = 0;
  std::map<std::string, std::vector<Value>> inputs;
  std::map<std::string, std::vector<Value>> outputs;
  std::map<std::string, std::vector<Value>> states;  // index 0 is step -1
  std::optional<unsigned> violation_step;
};

}  // namespace blockcheck
