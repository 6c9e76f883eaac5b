#pragma once

#include <optional>
#include <vector>

#include "distract/core/graph.hpp"
#include "distract/model/config.hpp"
#include "distract/model/encoder.hpp"

namespace distract {

/// Graph handles for the attention, distraction and output weights.
struct ControlNodes {
  ad::NodeId W_a = 0, U_a = 0, b_a = 0, v_a = 0;
  ad::NodeId W_c = 0, U_c = 0;
  ad::NodeId W_o = 0, U_o = 0, V_o = 0, C_o = 0;
  ad::NodeId embed = 0;  // output-side embedding table
  ad::NodeId init = 0;   // s_0 projection
  GruNodes gru1;         // consumes c_t
  GruNodes gru2;         // consumes e(y_{t-1})
};

/// U_a h_i for every annotation row, as a T_x x l matrix. It does not depend
/// on the decoder step, so it is computed once per document.
inline ad::NodeId project_annotations(ad::Graph& g, const ControlNodes& p, ad::NodeId annotations) {
  return g.matmul_bt(annotations, p.U_a);
}

/// Raw scores a'_{t,i} = v_a . tanh(W_a s'_t + U_a h_i - b_a * hist_i).
/// Without an attention history this is plain additive attention.
inline ad::NodeId attention_scores(ad::Graph& g, const ControlNodes& p, ad::NodeId s_prime,
                                   ad::NodeId projected,
                                   std::optional<ad::NodeId> attention_history) {
  ad::NodeId pre = g.add_row(projected, g.matvec(p.W_a, s_prime));
  if (attention_history) {
    require(g.size_of(*attention_history) == g.rows(projected),
            "attention_scores: history length differs from the number of annotations");
    pre = g.sub(pre, g.outer(*attention_history, p.b_a));
  }
  return g.matvec(g.tanh(pre), p.v_a);
}

/// Softmax over source positions; masked positions get exactly zero weight.
inline ad::NodeId attention_normalize(ad::Graph& g, ad::NodeId raw,
                                      std::vector<unsigned char> mask = {}) {
  return g.softmax(raw, std::move(mask));
}

/// c'_t = sum_i a_{t,i} h_i.
inline ad::NodeId content_vector(ad::Graph& g, ad::NodeId alpha, ad::NodeId annotations) {
  return g.mattvec(annotations, alpha);
}

/// c_t = tanh(W_c * c'_t - U_c * sum_{j<t} c_j) with diagonal W_c, U_c.
/// Without a content history this reduces to tanh(c'_t).
inline ad::NodeId distract_content(ad::Graph& g, const ControlNodes& p, ad::NodeId c_prime,
                                   std::optional<ad::NodeId> content_history) {
  if (!content_history) return g.tanh(c_prime);
  return g.tanh(g.sub(g.mul(p.W_c, c_prime), g.mul(p.U_c, *content_history)));
}

/// s'_t = GRU2(s_{t-1}, e(y_{t-1})).
inline ad::NodeId decoder_first_layer(ad::Graph& g, const ControlNodes& p, ad::NodeId s_prev,
                                      ad::NodeId y_prev_embed) {
  return gru_step(g, p.gru2, s_prev, y_prev_embed);
}

/// s_t = GRU1(s'_t, c_t).
inline ad::NodeId decoder_second_layer(ad::Graph& g, const ControlNodes& p, ad::NodeId s_prime,
                                       ad::NodeId c) {
  return gru_step(g, p.gru1, s_prime, c);
}

/// softmax(W_o tanh(V_o e(y_{t-1}) + U_o s_t + C_o c_t)) over the vocabulary.
inline ad::NodeId output_distribution(ad::Graph& g, const ControlNodes& p, ad::NodeId y_prev_embed,
                                      ad::NodeId s, ad::NodeId c) {
  const ad::NodeId hidden = g.tanh(
      g.add(g.add(g.matvec(p.V_o, y_prev_embed), g.matvec(p.U_o, s)), g.matvec(p.C_o, c)));
  return g.softmax(g.matvec(p.W_o, hidden));
}

}  // namespace distract
