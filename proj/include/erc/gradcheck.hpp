#pragma once

#include "erc/tape.hpp"

#include <functional>
#include <string>
#include <vector>

namespace erc {

// Builds a scalar loss graph from the current values of `params` on a fresh
// tape each call. Analytic gradients come from one backward sweep; the
// finite-difference probes only evaluate forward values, so they stay
// independent of the backward path they check.
using LossFn = std::function<Var(Tape&)>;

struct GradCheckResult {
  std::string name;
  double max_rel_err = 0.0;
  bool ok = false;
};

// Compares backward() gradients against central finite differences for every
// trainable parameter. `h` is the probe step; relative error uses
// |a - n| / max(1, |a|, |n|).
GradCheckResult gradcheck(const std::string& name, std::vector<Param*> params,
                          const LossFn& loss, double h = 1e-5, double tol = 1e-4);

// Finite-difference suite over all core ops and the tiny reader/CNN models.
std::vector<GradCheckResult> run_all_gradchecks(std::uint64_t seed = 7);

}  // namespace erc
