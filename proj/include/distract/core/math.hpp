#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "distract/core/error.hpp"

namespace distract {

/// Probabilities entering a log are floored here so a confident miss costs
/// -log(1e-12) instead of infinity.
inline constexpr double kProbabilityFloor = 1e-12;

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw UsageError(std::string(what) + ": non-finite input");
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class Nonlinearity { kSigmoid, kTanh };

inline std::vector<double> nonlinearity(std::span<const double> v, Nonlinearity kind) {
  require_finite(v, "nonlinearity");
  std::vector<double> out(v.size());
  if (kind == Nonlinearity::kSigmoid)
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return sigmoid(x); });
  else
    std::transform(v.begin(), v.end(), out.begin(), [](double x) { return std::tanh(x); });
  return out;
}

/// Max-subtracted softmax. Entries with mask[i] == 0 get exactly zero weight.
/// An empty mask means every position is live.
inline std::vector<double> softmax(std::span<const double> v,
                                   std::span<const unsigned char> mask = {}) {
  require(!v.empty(), "softmax: empty input");
  require(mask.empty() || mask.size() == v.size(), "softmax: mask length mismatch");
  require_finite(v, "softmax");
  auto live = [&](std::size_t i) { return mask.empty() || mask[i] != 0; };

  double max = -INFINITY;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (live(i)) max = std::max(max, v[i]);
  require(std::isfinite(max), "softmax: every position is masked");

  std::vector<double> out(v.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!live(i)) continue;
    out[i] = std::exp(v[i] - max);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace distract
