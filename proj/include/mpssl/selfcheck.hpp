#pragma once

#include <string>
#include <vector>

namespace mpssl {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// The oracle/gradient-check suite behind the `verify` CLI subcommand:
// finite-difference gradient checks for every loss and for the second-order
// meta-gradient, the Gumbel-max distributional oracle, straight-through
// bitwise equality, generator linearity/Jacobian, mapper identity
// initialization, split-protocol arithmetic, and a determinism audit.
std::vector<CheckResult> run_selfchecks(bool quick = false);

}  // namespace mpssl
