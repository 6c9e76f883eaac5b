#pragma once

#include <span>
#include <string>
#include <vector>

#include "distract/core/graph.hpp"
#include "distract/core/tensor.hpp"

namespace distract {

/// Graph handles for one GRU's six weight matrices.
struct GruNodes {
  ad::NodeId W = 0, W_r = 0, W_u = 0;  // n x input
  ad::NodeId U = 0, U_r = 0, U_u = 0;  // n x n
};

/// Binds `prefix`{W,W_r,W_u,U,U_r,U_u} into `g`. Gradients go to the
/// same-named tensors of `grads` when it is non-null.
inline GruNodes bind_gru(ad::Graph& g, const ParameterSet& params, ParameterSet* grads,
                         const std::string& prefix) {
  auto bind = [&](const char* gate) {
    const std::string name = prefix + gate;
    return g.param(params.at(name), grads != nullptr ? &grads->at(name) : nullptr);
  };
  return {bind("W"), bind("W_r"), bind("W_u"), bind("U"), bind("U_r"), bind("U_u")};
}

/// One GRU transition:
///   r = sigmoid(W_r x + U_r h)
///   u = sigmoid(W_u x + U_u h)
///   h~ = tanh(W x + U (r * h))
///   h' = (1 - u) * h + u * h~      (evaluated as h + u * (h~ - h))
inline ad::NodeId gru_step(ad::Graph& g, const GruNodes& p, ad::NodeId h_prev, ad::NodeId x) {
  const ad::NodeId r = g.sigmoid(g.add(g.matvec(p.W_r, x), g.matvec(p.U_r, h_prev)));
  const ad::NodeId u = g.sigmoid(g.add(g.matvec(p.W_u, x), g.matvec(p.U_u, h_prev)));
  const ad::NodeId candidate =
      g.tanh(g.add(g.matvec(p.W, x), g.matvec(p.U, g.mul(r, h_prev))));
  return g.add(h_prev, g.mul(u, g.sub(candidate, h_prev)));
}

struct EncoderNodes {
  ad::NodeId embed = 0;
  GruNodes forward;
  GruNodes backward;
  bool bidirectional = true;
};

/// Annotation matrix (T_x x A) for `ids`. Row i is [forward_i ; backward_i]
/// when bidirectional, forward_i otherwise. Both directions start from zero.
inline ad::NodeId encode_annotations(ad::Graph& g, const EncoderNodes& enc,
                                     std::span<const int> ids) {
  require(!ids.empty(), "encode: empty input sequence");
  const std::size_t hidden = g.rows(enc.forward.U);
  const std::size_t T = ids.size();

  std::vector<ad::NodeId> embedded(T);
  for (std::size_t i = 0; i < T; ++i) {
    require(ids[i] >= 0 && static_cast<std::size_t>(ids[i]) < g.rows(enc.embed),
            "encode: token id outside the vocabulary");
    embedded[i] = g.lookup(enc.embed, static_cast<std::size_t>(ids[i]));
  }

  std::vector<ad::NodeId> fwd(T);
  ad::NodeId h = g.zeros(hidden);
  for (std::size_t i = 0; i < T; ++i) fwd[i] = h = gru_step(g, enc.forward, h, embedded[i]);

  if (!enc.bidirectional) return g.stack_rows(fwd);

  std::vector<ad::NodeId> bwd(T);
  h = g.zeros(hidden);
  for (std::size_t i = T; i-- > 0;) bwd[i] = h = gru_step(g, enc.backward, h, embedded[i]);

  std::vector<ad::NodeId> rows(T);
  for (std::size_t i = 0; i < T; ++i) rows[i] = g.concat(fwd[i], bwd[i]);
  return g.stack_rows(rows);
}

}  // namespace distract
