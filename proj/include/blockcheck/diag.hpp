#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace blockcheck {

class BlockcheckError : public std::runtime_error {
 public:
  explicit BlockcheckError(const std::string & msg) : std::runtime_error(msg) {}
};

enum class Severity { Error, Warning };

struct Diagnostic {
  Severity severity;
  std::string location;  // subsystem path + block id, slash-joined
  std::string message;
  std::string code;

  std::string str() const {
    std::string s = (severity == Severity::Error) ? "error" : "warning";
    s += " [" + code + "] ";
    if (!location.empty()) s += location + ": ";
    s += message;
    return s;
  }
};

struct Diagnostics {
  std::vector<Diagnostic> items;

  void error(std::string loc, std::string msg, std::string code) {
    items.push_back({Severity::Error, std::move(loc), std::move(msg), std::move(code)});
  }
  void warn(std::string loc, std::string msg, std::string code) {
    items.push_back({Severity::Warning, std::move(loc), std::move(msg), std::move(code)});
  }
  bool has_errors() const {
    for (const auto & d : items)
      if (d.severity == Severity::Error) return true;
    return false;
  }
  // Throws if any error was collected; warnings survive in the list.
  void throw_if_errors() const {
    if (!has_errors()) return;
    std::string msg;
    for (const auto & d : items) {
      if (d.severity != Severity::Error) continue;
      if (!msg.empty()) msg += "\n";
      msg += d.str();
    }
    throw BlockcheckError(msg);
  }
};

}  // namespace blockcheck
