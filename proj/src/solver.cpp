#include "blockcheck/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstring>

#include "blockcheck/diag.hpp"

namespace blockcheck {

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void ignore_sigpipe() {
  static bool done = false;
  if (!done) {
    ::signal(SIGPIPE, SIG_IGN);
    done = true;
  }
}

// Finds one complete solver reply at the front of text: either a balanced
// s-expression or a bare atom followed by whitespace. Returns false if more
// input is needed.
bool scan_reply(const std::string & text, size_t & b, size_t & e) {
  size_t i = 0;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  b = i;
  if (i >= text.size()) return false;
  if (text[i] == '(') {
    int depth = 0;
    bool instr = false, insym = false;
    for (size_t p = i; p < text.size(); ++p) {
      char c = text[p];
      if (instr) {
        if (c == '"') instr = false;
      } else if (insym) {
        if (c == '|') insym = false;
      } else if (c == '"') {
        instr = true;
      } else if (c == '|') {
        insym = true;
      } else if (c == '(') {
        ++depth;
      } else if (c == ')') {
        if (--depth == 0) {
          e = p + 1;
          return true;
        }
      }
    }
    return false;
  }
  for (size_t p = i; p < text.size(); ++p) {
    if (std::isspace(static_cast<unsigned char>(text[p]))) {
      e = p;
      return true;
    }
  }
  return false;  // atom not yet terminated
}

}  // namespace

struct SolverSession::Proc {
  pid_t pid = -1;
  int in_w = -1;   // solver stdin
  int out_r = -1;  // solver stdout
  std::string buf;  // bytes read beyond the previous reply

  explicit Proc(const std::vector<std::string> & argv) {
    ignore_sigpipe();
    int to_child[2], from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw BlockcheckError("solver: pipe() failed");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw BlockcheckError("solver: pipe() failed");
    }
    // Written by the child if exec fails; prepared here because the child
    // must not allocate.
    std::string execfail = "(error \"cannot run solver '" + argv[0] + "'\")\n";
    pid = ::fork();
    if (pid < 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      throw BlockcheckError("solver: fork() failed");
    }
    if (pid == 0) {
      ::dup2(to_child[0], 0);
      ::dup2(from_child[1], 1);
      std::vector<char *> args;
      args.reserve(argv.size() + 1);
      for (const auto & a : argv) args.push_back(const_cast<char *>(a.c_str()));
      args.push_back(nullptr);
      ::execvp(args[0], args.data());
      ssize_t n = ::write(1, execfail.data(), execfail.size());
      (void)n;
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    in_w = to_child[1];
    out_r = from_child[0];
  }

  ~Proc() { shutdown(); }

  Proc(const Proc &) = delete;
  Proc & operator=(const Proc &) = delete;

  bool write_all(const std::string & s) {
    size_t off = 0;
    while (off < s.size()) {
      ssize_t n = ::write(in_w, s.data() + off, s.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      off += static_cast<size_t>(n);
    }
    return true;
  }

  // Closing stdin asks the solver to exit; SIGKILL covers the rest.
  void shutdown() {
    if (in_w >= 0) {
      ::close(in_w);
      in_w = -1;
    }
    if (pid >= 0) {
      int st = 0;
      pid_t r = 0;
      for (int i = 0; i < 20; ++i) {
        r = ::waitpid(pid, &st, WNOHANG);
        if (r != 0) break;
        ::usleep(5000);
      }
      if (r == 0) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &st, 0);
      }
      pid = -1;
    }
    if (out_r >= 0) {
      ::close(out_r);
      out_r = -1;
    }
  }
};

SolverConfig SolverConfig::from_command(const std::string & cmd, double timeout_s) {
  SolverConfig c;
  c.check_timeout_s = timeout_s;
  c.argv.clear();
  std::string cur;
  for (char ch : cmd) {
    if (ch == ' ' || ch == '\t') {
      if (!cur.empty()) {
        c.argv.push_back(cur);
        cur.clear();
      }
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) c.argv.push_back(cur);
  if (c.argv.empty()) throw BlockcheckError("empty solver command");
  return c;
}

SolverSession::SolverSession(SolverConfig cfg, bool replay)
    : cfg_(std::move(cfg)), replay_(replay) {
  submit("(set-option :print-success false)");
  submit("(set-option :produce-models true)");
}

SolverSession::~SolverSession() = default;

void SolverSession::submit(const std::string & cmd) {
  if (dead_) throw BlockcheckError("solver session is dead");
  model_ready_ = false;
  if (replay_) drop_proc();  // a model process from the previous check
  pending_ += cmd;
  pending_ += '\n';
  prefix_ += cmd;
  prefix_ += '\n';
  transcript_ += cmd;
  transcript_ += '\n';
}

void SolverSession::flush() {
  if (pending_.empty()) return;
  if (!proc_->write_all(pending_)) {
    dead_ = true;
    drop_proc();
    throw BlockcheckError("solver process terminated unexpectedly");
  }
  pending_.clear();
}

void SolverSession::ensure_proc() {
  if (proc_) return;
  proc_ = std::make_unique<Proc>(cfg_.argv);
  pending_.clear();  // prefix_ subsumes it
  if (!proc_->write_all(prefix_)) {
    dead_ = true;
    drop_proc();
    throw BlockcheckError("solver process terminated unexpectedly");
  }
}

void SolverSession::drop_proc() {
  proc_.reset();
  model_ready_ = false;
}

// Returns one reply, or "" on timeout (the process is then killed). Protocol
// acknowledgements ("success", "unsupported") are skipped.
std::string SolverSession::read_reply(double deadline_s) {
  for (;;) {
    size_t b = 0, e = 0;
    if (scan_reply(proc_->buf, b, e)) {
      std::string r = proc_->buf.substr(b, e - b);
      proc_->buf.erase(0, e);
      if (r == "success" || r == "unsupported") continue;
      return r;
    }
    double remain = deadline_s - now_s();
    if (remain <= 0) {
      drop_proc();
      return "";
    }
    struct pollfd pf;
    pf.fd = proc_->out_r;
    pf.events = POLLIN;
    pf.revents = 0;
    int ms = static_cast<int>(std::min(remain * 1000.0, 60000.0)) + 1;
    int pr = ::poll(&pf, 1, ms);
    if (pr < 0) {
      if (errno == EINTR) continue;
      dead_ = true;
      drop_proc();
      throw BlockcheckError("solver: poll() failed");
    }
    if (pr == 0) continue;  // deadline is re-checked at the top
    char tmp[4096];
    ssize_t n = ::read(proc_->out_r, tmp, sizeof tmp);
    if (n < 0) {
      if (errno == EINTR) continue;
      n = 0;
    }
    if (n == 0) {
      dead_ = true;
      drop_proc();
      throw BlockcheckError("solver process terminated unexpectedly");
    }
    proc_->buf.append(tmp, static_cast<size_t>(n));
  }
}

CheckResult SolverSession::check_sat_assuming(const std::vector<std::string> & literals) {
  if (dead_) throw BlockcheckError("solver session is dead");
  std::string csa = "(check-sat-assuming (";
  for (size_t i = 0; i < literals.size(); ++i) {
    if (i) csa += ' ';
    csa += literals[i];
  }
  csa += "))";
  transcript_ += csa;
  transcript_ += '\n';
  ++checks_;
  model_ready_ = false;
  double deadline = now_s() + cfg_.check_timeout_s;
  std::string reply;
  if (replay_) {
    drop_proc();
    ensure_proc();
    // A fresh stack per check keeps the solver on its batch strategy, which
    // handles floating-point goals far better than its incremental core.
    std::string tail;
    for (const auto & l : literals) tail += "(assert " + l + ")\n";
    tail += "(check-sat)\n";
    if (!proc_->write_all(tail)) {
      dead_ = true;
      drop_proc();
      throw BlockcheckError("solver process terminated unexpectedly");
    }
    reply = read_reply(deadline);
  } else {
    ensure_proc();
    flush();
    if (!proc_->write_all(csa + "\n")) {
      dead_ = true;
      drop_proc();
      throw BlockcheckError("solver process terminated unexpectedly");
    }
    reply = read_reply(deadline);
  }
  if (reply.empty()) return {CheckStatus::Unknown, "timeout"};
  if (reply == "sat") {
    model_ready_ = true;
    return {CheckStatus::Sat, ""};
  }
  if (reply == "unsat") return {CheckStatus::Unsat, ""};
  if (reply == "unknown") return {CheckStatus::Unknown, "solver reported unknown"};
  throw BlockcheckError("unexpected solver reply: " + reply);
}

std::vector<Value> SolverSession::get_values(const std::vector<std::string> & symbols,
                                             const std::vector<SmtSort> & sorts) {
  if (symbols.size() != sorts.size()) throw BlockcheckError("get_values: arity mismatch");
  if (!model_ready_ || !proc_) throw BlockcheckError("get_values: last check was not sat");
  if (symbols.empty()) return {};
  std::string q = "(get-value (";
  for (size_t i = 0; i < symbols.size(); ++i) {
    if (i) q += ' ';
    // entries starting with '(' are already-formed terms (bus accessors)
    q += symbols[i][0] == '(' ? symbols[i] : smt_symbol(symbols[i]);
  }
  q += "))";
  transcript_ += q;
  transcript_ += '\n';
  if (!proc_->write_all(q + "\n")) {
    dead_ = true;
    drop_proc();
    throw BlockcheckError("solver process terminated unexpectedly");
  }
  std::string reply = read_reply(now_s() + cfg_.check_timeout_s);
  if (reply.empty()) throw BlockcheckError("get-value timed out");
  if (reply.compare(0, 6, "(error") == 0) throw BlockcheckError("solver: " + reply);
  size_t pos = 0;
  Sexpr top = parse_sexpr(reply, pos);
  if (top.leaf || top.items.size() != symbols.size())
    throw BlockcheckError("malformed get-value reply: " + reply);
  std::vector<Value> out;
  out.reserve(symbols.size());
  for (size_t i = 0; i < symbols.size(); ++i) {
    const Sexpr & pr = top.items[i];
    if (pr.leaf || pr.items.size() != 2)
      throw BlockcheckError("malformed get-value reply: " + reply);
    out.push_back(parse_smt_value(pr.items[1], sorts[i]));
  }
  return out;
}

}  // namespace blockcheck
