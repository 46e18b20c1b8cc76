// Error taxonomy shared by the core library, the C API and the CLI.
// Codes are stable: the C API returns them verbatim and the CLI maps them
// one-to-one onto process exit codes.
#pragma once

#include <stdexcept>
#include <string>

namespace lm {

enum class errc : int {
  ok = 0,
  config = 2,      // bad configuration / invariant violation / parse failure
  infeasible = 3,  // market cannot run (budget below leakage floor, empty market)
  audit = 4,       // an audit or asserted property check failed
  regime = 5,      // operation requested outside its validity regime
  argument = 10,   // bad argument to an API call
  internal = 11,   // solver invariant broke; indicates a bug
};

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& msg) { throw error(code, msg); }

inline void require(bool cond, errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace lm
