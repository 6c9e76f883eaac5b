#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "distract/core/tensor.hpp"

namespace distract {

/// Worst disagreement between an analytic gradient and central differences.
struct GradientCheck {
  std::string parameter;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double max_relative_error = 0.0;
  std::map<std::string, double> per_parameter;  // max relative error by name
};

// Floor keeps entries below the finite-difference rounding noise (about
// 1e-11 for unit-scale losses) from dominating the report.
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max(1e-6, std::abs(a) + std::abs(b));
}

/// Central finite-difference oracle. `loss` is re-evaluated with each entry
/// of `params` nudged by +-step; it must only read `params`.
template <class LossFn>
GradientCheck check_gradients(ParameterSet& params, const ParameterSet& analytic, LossFn&& loss,
                              double step = 1e-5) {
  GradientCheck report;
  for (auto& [name, tensor] : params) {
    const Tensor& grad = analytic.at(name);
    double worst = 0.0;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const double saved = tensor[i];
      tensor[i] = saved + step;
      const double up = loss(params);
      tensor[i] = saved - step;
      const double down = loss(params);
      tensor[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(grad[i], numeric);
      worst = std::max(worst, err);
      if (report.parameter.empty() || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.parameter = name;
        report.index = i;
        report.analytic = grad[i];
        report.numeric = numeric;
      }
    }
    report.per_parameter[name] = worst;
  }
  return report;
}

}  // namespace distract
