#pragma once

#include <functional>
#include <string>

#include "taglab/params.h"

namespace taglab {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t checked = 0;
};

// Relative error used by grad_check: |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-3);

// Compares the analytic gradient produced by `loss_and_grad` (which must
// accumulate into zeroed params grads) with central differences of `loss`
// over every coordinate of every parameter.
GradCheckResult grad_check(ParamStore& params, const std::function<double()>& loss,
                           const std::function<double()>& loss_and_grad, double eps = 1e-5);

}  // namespace taglab
