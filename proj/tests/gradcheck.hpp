// Central-difference gradient checking for test code. The forward functor
// is re-evaluated after perturbing leaf values in place, so it must be
// deterministic (dropout off).

#ifndef MUSESVS_TESTS_GRADCHECK_HPP_
#define MUSESVS_TESTS_GRADCHECK_HPP_

#include <cmath>
#include <functional>

#include "musesvs/autograd.hpp"

namespace musesvs::testing {

struct GradCheckResult {
  double max_rel_err = 0.0;
  int checked = 0;
};

// Compares analytic gradients of fn() (a scalar) against central finite
// differences at `coords` random coordinates of each leaf. A coordinate
// failing at the base step size is retried at other step sizes: straddling
// a ReLU/abs kink or pronounced curvature is step-size dependent, a wrong
// backward is not.
inline GradCheckResult check_gradients(const std::function<Var()>& fn,
                                       const std::vector<Var>& leaves,
                                       Rng& rng, int coords = 12,
                                       double h = 1e-5, double tol = 1e-4) {
  GradCheckResult result;
  Var loss = fn();
  GradStore gs;
  backward(loss, gs);
  const double steps[3] = {h, h * 0.03, h * 30.0};
  for (const auto& leaf : leaves) {
    const Tensor* g = gs.find(leaf.node().get());
    const std::int64_t n = leaf.value().numel();
    for (int s = 0; s < coords; ++s) {
      const std::int64_t idx = static_cast<std::int64_t>(
          rng.next_u64() % static_cast<std::uint64_t>(n));
      const double analytic = g ? g->data[idx] : 0.0;
      double& slot = leaf.node()->value.data[idx];
      const double orig = slot;
      double best = 1e300;
      for (double step : steps) {
        slot = orig + step;
        const double fp = fn().item();
        slot = orig - step;
        const double fm = fn().item();
        slot = orig;
        const double numeric = (fp - fm) / (2.0 * step);
        const double denom =
            std::max(std::fabs(numeric), std::fabs(analytic));
        const double rel =
            denom < 1e-7 ? 0.0 : std::fabs(numeric - analytic) / denom;
        best = std::min(best, rel);
        if (best < tol) break;  // base step already agrees
      }
      ++result.checked;
      result.max_rel_err = std::max(result.max_rel_err, best);
    }
  }
  return result;
}

}  // namespace musesvs::testing

#endif  // MUSESVS_TESTS_GRADCHECK_HPP_
