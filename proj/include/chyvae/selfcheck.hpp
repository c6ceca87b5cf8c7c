#pragma once

#include <string>
#include <vector>

namespace chyvae::selfcheck {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// The Monte-Carlo / finite-difference validation suite. full scales the
// sample counts up to 1e5; tamper perturbs one KL constant so the harness
// itself can be shown to catch a broken formula.
std::vector<CheckResult> run_checks(bool full, bool tamper = false);

}  // namespace chyvae::selfcheck
