#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "blockcheck/encoder.hpp"
#include "blockcheck/frontend.hpp"
#include "blockcheck/solver.hpp"

namespace blockcheck {

enum class EngineKind { Bmc, Kind, Auto };

struct CheckerConfig {
  EngineKind engine = EngineKind::Auto;
  EncMode mode = EncMode::Exact;  // ignored by Auto, which runs its own mix
  unsigned max_k = 64;
  unsigned k_factor = 2;
  double check_timeout_s = 300.0;  // per solver call
  double global_budget_s = 0.0;    // wall clock across all calls, 0 = none
  std::vector<std::string> solver_argv = {"z3", "-in"};
  bool use_slice = true;
};

enum class Verdict { Valid, Falsified, Unknown };

// Everything the report and the tests want to know about one check run.
// d counts levels from the property owner (1) up to the model root;
// for Falsified it is the root level, for Unknown it is 0.
struct CheckOutcome {
  Verdict verdict = Verdict::Unknown;
  std::string reason;  // Unknown only: "max-k", "timeout", "stub-limited", ...
  std::string property_id;
  EncMode mode = EncMode::Exact;  // encoding that produced the verdict
  unsigned d = 0;
  unsigned k = 0;
  std::optional<unsigned> violation_step;
  std::optional<bool> validated;  // Falsified only
  Trace cex;                      // Falsified only
  double wall_time_s = 0;
  size_t solver_calls = 0;
  size_t root_solver_calls = 0;
  // One transcript per solver session, labelled "<mode>_d<level>". Each is a
  // standalone SMT-LIB script; --emit-smt writes them out.
  std::vector<std::pair<std::string, std::string>> transcripts;
};

CheckOutcome check_model(const TypedModel & tm, const Property & prop,
                         const CheckerConfig & cfg);

}  // namespace blockcheck
