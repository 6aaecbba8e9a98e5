#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "blockcheck/fpbits.hpp"

namespace blockcheck {

// Scalar kinds plus vector/matrix/bus composites. Composite elements are
// always scalar; bus members may themselves be composite (checked acyclic).
struct DataType {
  enum class Kind { Boolean, UInt, Int, Float, Vector, Matrix, Bus } kind = Kind::Float;
  unsigned bits = 0;                       // UInt/Int (also element ints)
  FloatPrec prec = FloatPrec::Double;      // Float (also element floats)
  Kind elem_kind = Kind::Float;            // Vector/Matrix element
  unsigned d1 = 0, d2 = 0;                 // Vector: d1; Matrix: d1 x d2
  std::string bus_name;                    // Bus

  bool operator==(const DataType &) const = default;

  bool is_scalar() const {
    return kind == Kind::Boolean || kind == Kind::UInt || kind == Kind::Int ||
           kind == Kind::Float;
  }
  bool is_numeric_scalar() const {
    return kind == Kind::UInt || kind == Kind::Int || kind == Kind::Float;
  }
  bool is_machine_int() const { return kind == Kind::UInt || kind == Kind::Int; }

  DataType elem_type() const {
    DataType t;
    t.kind = elem_kind;
    t.bits = bits;
    t.prec = prec;
    return t;
  }

  static DataType boolean() {
    DataType t;
    t.kind = Kind::Boolean;
    return t;
  }
  static DataType uint_t(unsigned n) {
    DataType t;
    t.kind = Kind::UInt;
    t.bits = n;
    return t;
  }
  static DataType int_t(unsigned n) {
    DataType t;
    t.kind = Kind::Int;
    t.bits = n;
    return t;
  }
  static DataType float_t(FloatPrec p) {
    DataType t;
    t.kind = Kind::Float;
    t.prec = p;
    return t;
  }
  static DataType vector_of(DataType scalar, unsigned d);
  static DataType matrix_of(DataType scalar, unsigned d1, unsigned d2);
  static DataType bus(std::string name) {
    DataType t;
    t.kind = Kind::Bus;
    t.bus_name = std::move(name);
    return t;
  }
};

using BusTable = std::map<std::string, std::vector<std::pair<std::string, DataType>>>;

// Parse/print type strings: "double", "single", "half", "boolean",
// "uint8".."uint64", "int8".."int64", "T x d", "T x d1 x d2", "bus:Name".
DataType parse_dtype(const std::string & text);
std::string print_dtype(const DataType & t);

// Machine range of an integer type.
BigInt int_min_value(const DataType & t);
BigInt int_max_value(const DataType & t);

// Flattens to scalars: bus members in declaration order (recursively), matrix
// elements row-major with 1-based _r_c suffixes, vector elements _i. The
// element path is "" for a scalar input.
std::vector<std::pair<std::string, DataType>> dtype_flatten(const DataType & t,
                                                            const BusTable & buses);

// Validates bus table acyclicity and member resolvability.
void check_bus_table(const BusTable & buses);

}  // namespace blockcheck
