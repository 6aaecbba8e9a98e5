#pragma once

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "blockcheck/smtlib.hpp"

namespace blockcheck {

// How to start the external solver and how long one check may run.
struct SolverConfig {
  std::vector<std::string> argv = {"z3", "-in"};
  double check_timeout_s = 300.0;

  // Splits a command line on whitespace ("z3 -in" -> {"z3","-in"}).
  static SolverConfig from_command(const std::string & cmd, double timeout_s = 300.0);
};

enum class CheckStatus { Sat, Unsat, Unknown };

struct CheckResult {
  CheckStatus status = CheckStatus::Unknown;
  std::string reason;  // Unknown only: "timeout" or the solver's own answer

  bool sat() const { return status == CheckStatus::Sat; }
  bool unsat() const { return status == CheckStatus::Unsat; }
};

// One logical SMT-LIB session against an external solver process.
//
// Commands accumulate in a buffer and are flushed before any check; the full
// command log (including checks) is kept as a transcript that is always a
// valid standalone script. Checks use check-sat-assuming with plain Boolean
// assumption literals, so no state is retired with push/pop.
//
// Two backends:
//   incremental - one process stays alive for the whole session.
//   replay      - every check spawns a fresh process, feeds it the whole
//                 declaration/assertion prefix, asserts the assumption
//                 literals and issues a single (check-sat). The process is
//                 kept until the next command so models can be queried.
//                 This trades prefix re-solving for the solver's batch
//                 floating-point path, which is orders of magnitude faster
//                 than its incremental one on fp-heavy formulas.
//
// A check that exceeds the timeout kills the process and reports
// Unknown("timeout"); the session itself stays usable (the next use respawns
// from the prefix). An unexpected process death marks the session dead.
class SolverSession {
 public:
  SolverSession(SolverConfig cfg, bool replay);
  ~SolverSession();

  SolverSession(const SolverSession &) = delete;
  SolverSession & operator=(const SolverSession &) = delete;

  // Queues one complete command; no solver response is expected for it.
  void submit(const std::string & cmd);

  // Flushes queued commands and checks under the given assumption literals
  // (each a Boolean constant or its negation).
  CheckResult check_sat_assuming(const std::vector<std::string> & literals);

  // Values for the model of the last check, which must have returned Sat
  // with no submit in between. Results line up with `symbols`; each value is
  // parsed against the matching sort. An entry starting with '(' is passed
  // through as a ready-made term (e.g. a bus accessor application); anything
  // else is printed as a symbol. Named sorts cannot be queried directly.
  std::vector<Value> get_values(const std::vector<std::string> & symbols,
                                const std::vector<SmtSort> & sorts);

  const std::string & transcript() const { return transcript_; }
  size_t checks_issued() const { return checks_; }
  bool dead() const { return dead_; }

 private:
  struct Proc;

  void flush();
  void ensure_proc();
  void drop_proc();
  std::string read_reply(double deadline_s);

  SolverConfig cfg_;
  bool replay_ = false;
  std::unique_ptr<Proc> proc_;
  std::string pending_;     // queued, not yet sent to a live process
  std::string prefix_;      // every submitted command (respawn/replay source)
  std::string transcript_;  // prefix_ plus checks, in order
  size_t checks_ = 0;
  bool dead_ = false;
  bool model_ready_ = false;
};

}  // namespace blockcheck
