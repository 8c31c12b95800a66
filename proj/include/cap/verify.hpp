#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cap/tape.hpp"

namespace cap::verify {

struct CheckResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;  // worst error / deviation observed
  double limit = 0.0;     // threshold it is compared against
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<CheckResult> checks;
  bool passed() const;
};

/// Prints "PASS|FAIL  name  measured / limit  detail", one line per check.
void print_report(std::ostream& out, const SuiteReport& report);

// ---- finite differences -------------------------------------------------

/// Builds the checked function from leaf handles (one per input tensor).
using GraphFn = std::function<Var(Tape&, const std::vector<Var>&)>;

struct GradCheckOptions {
  double step = 1e-4;
  std::uint64_t projection_seed = 99;
};

/**
 * Compares reverse-mode gradients of L = sum(f(inputs) * R), R a fixed random
 * tensor, against central differences on every input element. Returns the
 * largest |analytic - numeric| / max(1, |numeric|).
 */
double gradcheck(const GraphFn& f, const std::vector<Tensor>& inputs, const GradCheckOptions& opt = {});

/// One named op family checked on `instances` random cases.
struct GradCase {
  std::string name;
  std::function<double(std::uint64_t seed)> run;  // returns the worst relative error of one instance
};
std::vector<GradCase> gradient_cases();

// ---- suites --------------------------------------------------------------

struct SuiteOptions {
  std::size_t instances = 20;
  std::uint64_t seed = 1;
};

/// Finite-difference agreement of every differentiable operation (limit 1e-3).
SuiteReport gradcheck_suite(const SuiteOptions& opt = {});
/// Brute-force oracles: regions, LSTM, VLAD identity, conv loops, hand-computed cases.
SuiteReport oracle_suite(const SuiteOptions& opt = {});
/// Softmax normalisation families and bilinear kernel properties.
SuiteReport invariant_suite(const SuiteOptions& opt = {});

}  // namespace cap::verify
