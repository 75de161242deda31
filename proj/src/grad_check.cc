#include "taglab/grad_check.h"

#include <algorithm>
#include <cmath>

namespace taglab {

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckResult grad_check(ParamStore& params, const std::function<double()>& loss,
                           const std::function<double()>& loss_and_grad, double eps) {
  params.zero_grad();
  loss_and_grad();
  std::vector<std::vector<double>> analytic;
  for (std::size_t i = 0; i < params.size(); ++i) analytic.push_back(params.at(i).grad);

  GradCheckResult r;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params.at(i);
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double saved = p.value[k];
      p.value[k] = saved + eps;
      const double up = loss();
      p.value[k] = saved - eps;
      const double down = loss();
      p.value[k] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double err = relative_error(analytic[i][k], numeric);
      ++r.checked;
      if (err > r.max_rel_error || !std::isfinite(err)) {
        r.max_rel_error = std::isfinite(err) ? err : INFINITY;
        r.worst_param = params.names()[i];
        r.worst_index = k;
        r.analytic = analytic[i][k];
        r.numeric = numeric;
      }
    }
  }
  return r;
}

}  // namespace taglab
