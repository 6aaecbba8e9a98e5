#pragma once

#include <map>
#include <optional>
#include <vector>

#include "blockcheck/ir.hpp"
#include "blockcheck/model.hpp"

namespace blockcheck {

// Machine interprets IEEE-754 bit patterns and wrapping machine integers
// (what the Exact encoding describes); Ideal interprets exact rationals and
// unbounded integers (what the Approx encoding describes).
enum class ArithMode { Machine, Ideal };

// Deterministic step interpreter over the same IR the encoder prints, so the
// two cannot drift apart.
class Simulator {
 public:
  // References are kept; the IR and objective must outlive the simulator.
  Simulator(const SubsystemIR & root, const Objective & obj, ArithMode mode);

  // State assignment entering step 0 (the trace's step -1 row).
  std::map<std::string, Value> initial_state() const;

  struct StepResult {
    std::map<std::string, Value> outputs;
    // phi at this step; unset when an inactive ancestor kept the objective's
    // owner from running.
    std::optional<bool> phi;
  };
  // One base-rate step. `inputs` must bind every root input by name; `state`
  // advances in place.
  StepResult step(std::map<std::string, Value> & state,
                  const std::map<std::string, Value> & inputs) const;

  // Folds step over the first n input rows. States get n+1 entries starting
  // at step -1; violation_step is the first step whose phi came out false.
  Trace simulate(const std::vector<std::map<std::string, Value>> & input_rows,
                 unsigned n) const;

 private:
  const SubsystemIR & root_;
  const Objective & obj_;
  ArithMode mode_;
};

}  // namespace blockcheck
