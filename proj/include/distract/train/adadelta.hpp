#pragma once

#include <cmath>
#include <string>

#include "distract/core/error.hpp"
#include "distract/core/tensor.hpp"

namespace distract {

/// Running averages E[g^2] and E[dx^2] per parameter entry.
struct AdadeltaState {
  double rho = 0.95;
  double epsilon = 1e-6;
  ParameterSet mean_sq_grad;
  ParameterSet mean_sq_update;
};

inline AdadeltaState make_adadelta(const ParameterSet& params, double rho = 0.95,
                                   double epsilon = 1e-6) {
  require(rho > 0.0 && rho < 1.0, "adadelta: rho must lie in (0, 1)");
  require(epsilon > 0.0, "adadelta: epsilon must be positive");
  return {rho, epsilon, zeros_like(params), zeros_like(params)};
}

/// One Adadelta step:
///   E[g^2]  <- rho E[g^2] + (1 - rho) g^2
///   dx      <- -sqrt(E[dx^2] + eps) / sqrt(E[g^2] + eps) * g
///   E[dx^2] <- rho E[dx^2] + (1 - rho) dx^2
///   x       <- x + dx
/// Gradients are validated up front, so a NaN leaves every parameter untouched.
inline void adadelta_update(ParameterSet& params, const ParameterSet& grads, AdadeltaState& state) {
  for (const auto& [name, g] : grads) {
    require(params.contains(name) && params.at(name).size() == g.size(),
            "adadelta: gradient '" + name + "' does not match a parameter");
    for (double x : g.data())
      if (!std::isfinite(x)) throw NumericalError("non-finite gradient in parameter '" + name + "'");
  }
  const double rho = state.rho;
  const double eps = state.epsilon;
  for (const auto& [name, g] : grads) {
    Tensor& x = params.at(name);
    Tensor& eg = state.mean_sq_grad.at(name);
    Tensor& ex = state.mean_sq_update.at(name);
    for (std::size_t i = 0; i < g.size(); ++i) {
      eg[i] = rho * eg[i] + (1.0 - rho) * g[i] * g[i];
      const double dx = -(std::sqrt(ex[i] + eps) / std::sqrt(eg[i] + eps)) * g[i];
      ex[i] = rho * ex[i] + (1.0 - rho) * dx * dx;
      x[i] += dx;
    }
  }
}

inline double global_norm(const ParameterSet& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads)
    for (double x : g.data()) sq += x * x;
  return std::sqrt(sq);
}

/// Rescales all gradients together so their global L2 norm is at most
/// `max_norm`. Returns the norm before clipping. max_norm <= 0 disables.
inline double clip_global_norm(ParameterSet& grads, double max_norm) {
  const double norm = global_norm(grads);
  if (max_norm > 0.0 && norm > max_norm) {
    const double k = max_norm / norm;
    for (auto& [name, g] : grads)
      for (double& x : g.data()) x *= k;
  }
  return norm;
}

}  // namespace distract
