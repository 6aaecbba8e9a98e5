#include "blockcheck/dtype.hpp"

#include <set>

#include "blockcheck/diag.hpp"

namespace blockcheck {

DataType DataType::vector_of(DataType scalar, unsigned d) {
  if (!scalar.is_scalar()) throw BlockcheckError("vector element must be scalar");
  DataType t;
  t.kind = Kind::Vector;
  t.elem_kind = scalar.kind;
  t.bits = scalar.bits;
  t.prec = scalar.prec;
  t.d1 = d;
  return t;
}

DataType DataType::matrix_of(DataType scalar, unsigned d1, unsigned d2) {
  if (!scalar.is_scalar()) throw BlockcheckError("matrix element must be scalar");
  DataType t;
  t.kind = Kind::Matrix;
  t.elem_kind = scalar.kind;
  t.bits = scalar.bits;
  t.prec = scalar.prec;
  t.d1 = d1;
  t.d2 = d2;
  return t;
}

static std::string trim(const std::string & s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

static DataType parse_scalar(const std::string & t) {
  if (t == "double") return DataType::float_t(FloatPrec::Double);
  if (t == "single") return DataType::float_t(FloatPrec::Single);
  if (t == "half") return DataType::float_t(FloatPrec::Half);
  if (t == "boolean") return DataType::boolean();
  for (unsigned n : {8u, 16u, 32u, 64u}) {
    if (t == "uint" + std::to_string(n)) return DataType::uint_t(n);
    if (t == "int" + std::to_string(n)) return DataType::int_t(n);
  }
  throw BlockcheckError("unknown data type: '" + t + "'");
}

DataType parse_dtype(const std::string & text) {
  std::string t = trim(text);
  if (t.rfind("bus:", 0) == 0) {
    std::string name = trim(t.substr(4));
    if (name.empty()) throw BlockcheckError("empty bus name in type '" + text + "'");
    return DataType::bus(name);
  }
  // "T x d" / "T x d1 x d2"
  std::vector<std::string> parts;
  size_t pos = 0;
  while (true) {
    size_t x = t.find(" x ", pos);
    if (x == std::string::npos) {
      parts.push_back(trim(t.substr(pos)));
      break;
    }
    parts.push_back(trim(t.substr(pos, x - pos)));
    pos = x + 3;
  }
  if (parts.size() == 1) return parse_scalar(parts[0]);
  DataType elem = parse_scalar(parts[0]);
  auto dim = [&](const std::string & s) -> unsigned {
    for (char c : s)
      if (!isdigit((unsigned char)c)) throw BlockcheckError("bad dimension in type '" + text + "'");
    unsigned long v = std::stoul(s);
    if (v == 0) throw BlockcheckError("zero dimension in type '" + text + "'");
    return (unsigned)v;
  };
  if (parts.size() == 2) return DataType::vector_of(elem, dim(parts[1]));
  if (parts.size() == 3) return DataType::matrix_of(elem, dim(parts[1]), dim(parts[2]));
  throw BlockcheckError("malformed data type: '" + text + "'");
}

std::string print_dtype(const DataType & t) {
  switch (t.kind) {
    case DataType::Kind::Boolean: return "boolean";
    case DataType::Kind::UInt: return "uint" + std::to_string(t.bits);
    case DataType::Kind::Int: return "int" + std::to_string(t.bits);
    case DataType::Kind::Float:
      return t.prec == FloatPrec::Double ? "double"
             : t.prec == FloatPrec::Single ? "single"
                                           : "half";
    case DataType::Kind::Vector:
      return print_dtype(t.elem_type()) + " x " + std::to_string(t.d1);
    case DataType::Kind::Matrix:
      return print_dtype(t.elem_type()) + " x " + std::to_string(t.d1) + " x " +
             std::to_string(t.d2);
    case DataType::Kind::Bus: return "bus:" + t.bus_name;
  }
  return "?";
}

BigInt int_min_value(const DataType & t) {
  if (t.kind == DataType::Kind::UInt) return 0;
  if (t.kind == DataType::Kind::Int) return -pow2(t.bits - 1);
  throw BlockcheckError("int_min_value on non-integer type");
}

BigInt int_max_value(const DataType & t) {
  if (t.kind == DataType::Kind::UInt) return pow2(t.bits) - 1;
  if (t.kind == DataType::Kind::Int) return pow2(t.bits - 1) - 1;
  throw BlockcheckError("int_max_value on non-integer type");
}

static void flatten_into(const DataType & t, const BusTable & buses, const std::string & prefix,
                         std::vector<std::pair<std::string, DataType>> & out) {
  switch (t.kind) {
    case DataType::Kind::Vector:
      for (unsigned i = 1; i <= t.d1; i++)
        out.emplace_back(prefix + "_" + std::to_string(i), t.elem_type());
      return;
    case DataType::Kind::Matrix:
      for (unsigned r = 1; r <= t.d1; r++)
        for (unsigned c = 1; c <= t.d2; c++)
          out.emplace_back(prefix + "_" + std::to_string(r) + "_" + std::to_string(c),
                           t.elem_type());
      return;
    case DataType::Kind::Bus: {
      auto it = buses.find(t.bus_name);
      if (it == buses.end()) throw BlockcheckError("unresolved bus type '" + t.bus_name + "'");
      for (const auto & [mname, mtype] : it->second)
        flatten_into(mtype, buses, prefix.empty() ? mname : prefix + "_" + mname, out);
      return;
    }
    default: out.emplace_back(prefix, t); return;
  }
}

std::vector<std::pair<std::string, DataType>> dtype_flatten(const DataType & t,
                                                            const BusTable & buses) {
  std::vector<std::pair<std::string, DataType>> out;
  flatten_into(t, buses, "", out);
  return out;
}

static void check_bus(const BusTable & buses, const std::string & name,
                      std::set<std::string> & stack) {
  if (stack.count(name)) throw BlockcheckError("bus type cycle through '" + name + "'");
  auto it = buses.find(name);
  if (it == buses.end()) throw BlockcheckError("unresolved bus type '" + name + "'");
  stack.insert(name);
  for (const auto & [mname, mtype] : it->second)
    if (mtype.kind == DataType::Kind::Bus) check_bus(buses, mtype.bus_name, stack);
  stack.erase(name);
}

void check_bus_table(const BusTable & buses) {
  for (const auto & [name, members] : buses) {
    std::set<std::string> stack;
    check_bus(buses, name, stack);
    (void)members;
  }
}

}  // namespace blockcheck
