#pragma once

// Command-line front end: verify | reduce | prop | search | dsl | gen.
//
// Exit codes: 0 all proven statements hold, 1 a proven statement failed (or
// `search` found a conjecture violation), 2 bad configuration or input,
// 3 numerical failure.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "matineq/generators.hpp"
#include "matineq/linalg.hpp"

namespace matineq::cli {

enum Exit : int { kOk = 0, kViolation = 1, kBadConfig = 2, kNumerical = 3 };

/// Runs one invocation. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest decimal that round-trips to the same double.
std::string format_double(double x);

// ---------------------------------------------------------------------------
// verify, exposed for the acceptance harness

/// The eight checks run by verify, in report order.
const std::vector<std::string>& verify_check_ids();

struct CheckSummary {
  std::string id;
  bool conjecture = false;
  std::size_t evaluated = 0;
  /// PD-only checks are skipped on rank-deficient instances.
  std::size_t skipped = 0;
  std::size_t violations = 0;
  double min_margin = 0.0;
  /// min over instances of margin / (1 + ||A|| + ||B||).
  double min_scaled_margin = 0.0;
};

struct VerifySummary {
  std::size_t trials = 0;
  std::vector<CheckSummary> checks;
  std::size_t numerical_failures = 0;
  std::vector<std::string> failure_messages;  // the first few

  /// 1 if a proven check violated, else 3 on numerical failure, else 0.
  int exit_code() const;
  nlohmann::json to_json() const;
};

struct VerifyInstance {
  Psd a;
  Psd b;
  double t = 0.5;
  Index n = 0;
  double condition = 1.0;
  Field field = Field::Complex;
  bool full_rank = true;
};

/// Trial `trial` of a verify run: n cycles through `dims`, then the condition
/// number through {1, 10, 1e4}, then the field, then full rank vs rank
/// deficient; t cycles through the 11-point grid.
VerifyInstance verify_instance(std::uint64_t seed, std::size_t trial, const std::vector<Index>& dims);

VerifySummary run_verify(std::uint64_t seed, std::size_t trials, const std::vector<Index>& dims,
                         std::optional<double> tol = {}, unsigned threads = 1);
VerifySummary verify_pair(const Psd& a, const Psd& b, double t, std::optional<double> tol = {});

}  // namespace matineq::cli
