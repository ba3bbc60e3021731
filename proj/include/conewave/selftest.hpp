#pragma once

#include <string>
#include <vector>

namespace conewave {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;  // measured numbers vs the pinned tolerances
  double seconds = 0.0;
};

// Names of the full verification suite, in run order.
std::vector<std::string> selftest_names();

// Runs the named checks (all of them when `only` is empty). Failures are
// captured in the results, never thrown; `verbose` streams progress to
// stderr. Details are deterministic for a fixed build (timings are not part
// of them).
std::vector<CheckResult> run_selftest(const std::vector<std::string>& only = {},
                                      bool verbose = false);

}  // namespace conewave
