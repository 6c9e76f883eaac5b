#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "distract/core/tensor.hpp"
#include "distract/model/config.hpp"

namespace distract {

namespace detail {

inline void add_gru(ParameterSet& p, const std::string& prefix, std::size_t hidden,
                    std::size_t input) {
  for (const char* gate : {"W", "W_r", "W_u"}) p.emplace(prefix + gate, Tensor({hidden, input}));
  for (const char* gate : {"U", "U_r", "U_u"}) p.emplace(prefix + gate, Tensor({hidden, hidden}));
}

}  // namespace detail

/// Zero-filled parameter tensors for `config`, keyed by name.
///
///   enc.embed (K x m), enc.fwd.* / enc.bwd.* GRU weights
///   dec.embed (K x m), dec.init (n x A), dec.gru1.* (input A), dec.gru2.* (input m)
///   att.W_a (l x n), att.U_a (l x A), att.b_a (l), att.v_a (l)
///   dis.W_c (A), dis.U_c (A)                   diagonal content distraction
///   out.W_o (K x n), out.U_o (n x n), out.V_o (n x m), out.C_o (n x A)
///
/// where A is the annotation width (2n bidirectional, n otherwise).
inline ParameterSet make_parameters(const ModelConfig& config) {
  config.validate();
  const std::size_t K = config.vocab_size;
  const std::size_t m = config.embed_dim;
  const std::size_t n = config.hidden_dim;
  const std::size_t l = config.attention_dim;
  const std::size_t A = config.annotation_dim();

  ParameterSet p;
  p.emplace("enc.embed", Tensor({K, m}));
  detail::add_gru(p, "enc.fwd.", n, m);
  if (config.bidirectional) detail::add_gru(p, "enc.bwd.", n, m);

  p.emplace("dec.embed", Tensor({K, m}));
  p.emplace("dec.init", Tensor({n, A}));
  detail::add_gru(p, "dec.gru1.", n, A);
  detail::add_gru(p, "dec.gru2.", n, m);

  p.emplace("att.W_a", Tensor({l, n}));
  p.emplace("att.U_a", Tensor({l, A}));
  p.emplace("att.b_a", Tensor({l}));
  p.emplace("att.v_a", Tensor({l}));

  p.emplace("dis.W_c", Tensor({A}));
  p.emplace("dis.U_c", Tensor({A}));

  p.emplace("out.W_o", Tensor({K, n}));
  p.emplace("out.U_o", Tensor({n, n}));
  p.emplace("out.V_o", Tensor({n, m}));
  p.emplace("out.C_o", Tensor({n, A}));
  return p;
}

/// Seeded initialization: every weight uniform in [-scale, scale]; the
/// content-distraction diagonal W_c starts at identity and the history
/// coefficients U_c, b_a start small and positive in [0, scale].
inline ParameterSet init_parameters(const ModelConfig& config, std::uint64_t seed,
                                    double scale = 0.08) {
  ParameterSet p = make_parameters(config);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> weight(-scale, scale);
  std::uniform_real_distribution<double> positive(0.0, scale);
  for (auto& [name, t] : p) {
    if (name == "dis.W_c") {
      t.fill(1.0);
    } else if (name == "dis.U_c" || name == "att.b_a") {
      for (double& x : t.data()) x = positive(rng);
    } else {
      for (double& x : t.data()) x = weight(rng);
    }
  }
  return p;
}

}  // namespace distract
