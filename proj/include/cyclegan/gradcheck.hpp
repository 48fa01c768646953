#pragma once

#include <functional>
#include <vector>

#include "cyclegan/tensor.hpp"

namespace cyclegan {

using ScalarClosure = std::function<Tensor<double>(const std::vector<Tensor<double>>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  double max_absolute_error = 0.0;
  std::size_t elements_checked = 0;
};

struct GradCheckOptions {
  double eps = 1e-5;
  // Denominator floor of the relative error. Below it the check is
  // effectively absolute, which keeps round-off on near-zero gradients
  // from dominating.
  double floor = 1e-6;
  // 0 checks every element; otherwise an evenly strided subset of at most
  // this many elements per input.
  std::size_t max_elements_per_input = 0;
};

// Compares the backward-pass gradient of `closure` with respect to every
// input against central finite differences (f(x+eps) - f(x-eps)) / 2eps.
// Relative error per element is |analytic - numeric| / max(|analytic|,
// |numeric|, floor). Inputs are marked as requiring a gradient; perturbed
// values are restored afterwards.
GradCheckResult gradient_check(const ScalarClosure& closure, std::vector<Tensor<double>> inputs,
                               const GradCheckOptions& options);

inline GradCheckResult gradient_check(const ScalarClosure& closure, std::vector<Tensor<double>> inputs,
                                      double eps = 1e-5) {
  return gradient_check(closure, std::move(inputs), GradCheckOptions{.eps = eps});
}

}  // namespace cyclegan
