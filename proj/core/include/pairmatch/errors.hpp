#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pairmatch {

enum class Errc {
  invalid_params,
  invalid_pair,
  nr_violation,       // pair sampled twice
  sps_violation,      // node over its cap
  horizon_exhausted,  // query past T
  feasibility,
  degenerate_input,
  insufficient_data,
  no_detection,
  config,
  io,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

// The s-estimation walk ran out of node budget before the stopping rule
// fired; carries the queries spent so far.
class NoDetectionError : public Error {
 public:
  NoDetectionError(std::int64_t queries_used, const std::string& what)
      : Error(Errc::no_detection, what), queries_used_(queries_used) {}
  std::int64_t queries_used() const noexcept { return queries_used_; }

 private:
  std::int64_t queries_used_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

}  // namespace pairmatch
