#pragma once

#include <random>
#include <vector>

#include "distract/core/tensor.hpp"
#include "distract/model/config.hpp"
#include "scalar_reference.hpp"

namespace distract::testing {

/// Tensor (r x c) from nested rows.
inline Tensor matrix(const Mat& rows) {
  std::vector<double> data;
  for (const auto& r : rows) data.insert(data.end(), r.begin(), r.end());
  return Tensor({rows.size(), rows.empty() ? 0 : rows[0].size()}, data);
}

inline Mat to_rows(const Tensor& t) {
  Mat m(t.rows(), Vec(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m[r][c] = t.at(r, c);
  return m;
}

inline Vec to_vec(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline Vec random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  Vec v(n);
  for (double& x : v) x = d(rng);
  return v;
}

inline RefGru ref_gru_from(const ParameterSet& p, const std::string& prefix) {
  return {to_rows(p.at(prefix + "W")), to_rows(p.at(prefix + "W_r")), to_rows(p.at(prefix + "W_u")),
          to_rows(p.at(prefix + "U")), to_rows(p.at(prefix + "U_r")), to_rows(p.at(prefix + "U_u"))};
}

/// The tiny configuration used for gradient checks: m=3, n=4, l=5, K=7.
inline ModelConfig tiny_config() {
  ModelConfig c;
  c.vocab_size = 7;
  c.embed_dim = 3;
  c.hidden_dim = 4;
  c.attention_dim = 5;
  return c;
}

}  // namespace distract::testing
