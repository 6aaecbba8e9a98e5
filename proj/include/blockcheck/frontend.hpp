#pragma once

#include "blockcheck/diag.hpp"
#include "blockcheck/model.hpp"

namespace blockcheck {

// Model plus resolved outport types for every block instance. Keys are
// "path/to/sub/blockid" with the root path empty ("blockid").
struct TypedModel {
  Model model;
  std::map<std::string, std::vector<DataType>> out_types;
  Diagnostics diags;

  const std::vector<DataType> * lookup(const std::string & key) const {
    auto it = out_types.find(key);
    return it == out_types.end() ? nullptr : &it->second;
  }
};

// Block-type signature facts shared by the frontend and the IR builder.
bool is_supported_block_type(const std::string & type);
bool block_is_stateful(const Block & b);
unsigned block_in_arity(const Block & b);   // declared input ports
unsigned block_out_arity(const Block & b);  // declared output ports

std::string path_key(const std::vector<std::string> & path, const std::string & id);

Model load_model(const std::string & bytes);
std::string serialize_model(const Model & m);

TypedModel infer_types(const Model & m);

Property load_property(const std::string & bytes, const TypedModel & tm);

// Resolves a scope path ("a/b/c" segments) to the subsystem it names.
const Subsystem * resolve_scope(const Model & m, const std::vector<std::string> & scope);

}  // namespace blockcheck
