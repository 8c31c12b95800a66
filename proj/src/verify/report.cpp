#include <algorithm>
#include <cstdio>
#include <ostream>

#include "cap/verify.hpp"

namespace cap::verify {

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

void print_report(std::ostream& out, const SuiteReport& report) {
  for (const auto& c : report.checks) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.3g <= %.3g", c.measured, c.limit);
    out << (c.passed ? "PASS  " : "FAIL  ") << report.suite << ": " << c.name << "  (" << buf;
    if (!c.detail.empty()) out << ", " << c.detail;
    out << ")\n";
  }
}

}  // namespace cap::verify
