#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/core/math.hpp"

namespace distract {

/// KL(p || q) = sum_i p_i log(p_i / q_i). Terms with p_i = 0 vanish; q is
/// floored at 1e-12. Rounding can push a near-zero divergence below zero,
/// so the result is clamped at 0.
inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size(), "kl_divergence: length mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * std::log(p[i] / std::max(q[i], kProbabilityFloor));
  }
  return std::max(kl, 0.0);
}

/// u.v / (|u||v|), clamped to [-1, 1]; 0 when either vector is zero.
inline double cosine_similarity(std::span<const double> u, std::span<const double> v) {
  require(u.size() == v.size(), "cosine_similarity: length mismatch");
  const double nu = std::sqrt(dot(u, u));
  const double nv = std::sqrt(dot(v, v));
  if (nu == 0.0 || nv == 0.0) return 0.0;
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

/// The quantities a decoder step exposes to distraction scoring.
struct StepRecord {
  std::vector<double> alpha;    // attention weights a_t
  std::vector<double> content;  // content vector c_t
  std::vector<double> hidden;   // decoder state s_t
};

struct DistractionTerms {
  double attention = 0.0;  // d_a: min KL(a_t, a_i) over earlier steps
  double content = 0.0;    // d_c: max cosine(c_t, c_i)
  double hidden = 0.0;     // d_s: max cosine(s_t, s_i)
};

/// Distraction of the current step against every earlier step of the same
/// hypothesis. An empty history scores (0, 0, 0).
inline DistractionTerms distraction_scores(const StepRecord& current,
                                           std::span<const StepRecord> history) {
  DistractionTerms d;
  if (history.empty()) return d;
  d.attention = INFINITY;
  d.content = -INFINITY;
  d.hidden = -INFINITY;
  for (const StepRecord& h : history) {
    require(h.alpha.size() == current.alpha.size() && h.content.size() == current.content.size() &&
                h.hidden.size() == current.hidden.size(),
            "distraction_scores: history entry shape differs from the current step");
    d.attention = std::min(d.attention, kl_divergence(current.alpha, h.alpha));
    d.content = std::max(d.content, cosine_similarity(current.content, h.content));
    d.hidden = std::max(d.hidden, cosine_similarity(current.hidden, h.hidden));
  }
  return d;
}

/// Signed coefficients on d_a, d_c, d_s. Distinct attention is rewarded
/// with lambda1 > 0; redundant content and state are penalized with
/// lambda2, lambda3 < 0. All zero gives plain beam search.
struct DistractionWeights {
  double attention = 0.0;  // lambda1
  double content = 0.0;    // lambda2
  double hidden = 0.0;     // lambda3

  bool all_zero() const { return attention == 0.0 && content == 0.0 && hidden == 0.0; }

  double bonus(const DistractionTerms& d) const {
    return attention * d.attention + content * d.content + hidden * d.hidden;
  }
};

}  // namespace distract
