#include "cyclegan/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace cyclegan {

GradCheckResult gradient_check(const ScalarClosure& closure, std::vector<Tensor<double>> inputs,
                               const GradCheckOptions& options) {
  const double eps = options.eps;
  for (auto& in : inputs) {
    in.set_requires_grad(true);
    in.zero_grad();
  }
  closure(inputs).backward();

  GradCheckResult result;
  NoGradGuard no_grad;
  for (auto& in : inputs) {
    auto values = in.mutable_values();
    auto analytic = in.grad();
    std::size_t step = 1;
    if (options.max_elements_per_input > 0 && values.size() > options.max_elements_per_input) {
      step = (values.size() + options.max_elements_per_input - 1) / options.max_elements_per_input;
    }
    for (std::size_t i = 0; i < values.size(); i += step) {
      const double original = values[i];
      values[i] = original + eps;
      const double plus = closure(inputs).item();
      values[i] = original - eps;
      const double minus = closure(inputs).item();
      values[i] = original;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double abs_err = std::abs(analytic[i] - numeric);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), options.floor});
      result.max_absolute_error = std::max(result.max_absolute_error, abs_err);
      result.max_relative_error = std::max(result.max_relative_error, abs_err / denom);
      ++result.elements_checked;
    }
  }
  return result;
}

}  // namespace cyclegan
