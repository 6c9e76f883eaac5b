#pragma once

#include <optional>
#include <span>
#include <vector>

#include "distract/core/graph.hpp"
#include "distract/core/tensor.hpp"
#include "distract/model/config.hpp"
#include "distract/model/control.hpp"
#include "distract/model/encoder.hpp"

namespace distract {

/// Every model parameter bound into one graph.
struct ModelNodes {
  EncoderNodes encoder;
  ControlNodes control;
};

inline ModelNodes bind_model(ad::Graph& g, const ModelConfig& config, const ParameterSet& params,
                             ParameterSet* grads = nullptr) {
  auto bind = [&](const char* name) {
    return g.param(params.at(name), grads != nullptr ? &grads->at(name) : nullptr);
  };
  ModelNodes m;
  m.encoder.embed = bind("enc.embed");
  m.encoder.forward = bind_gru(g, params, grads, "enc.fwd.");
  m.encoder.bidirectional = config.bidirectional;
  if (config.bidirectional) m.encoder.backward = bind_gru(g, params, grads, "enc.bwd.");

  ControlNodes& c = m.control;
  c.embed = bind("dec.embed");
  c.init = bind("dec.init");
  c.gru1 = bind_gru(g, params, grads, "dec.gru1.");
  c.gru2 = bind_gru(g, params, grads, "dec.gru2.");
  c.W_a = bind("att.W_a");
  c.U_a = bind("att.U_a");
  c.b_a = bind("att.b_a");
  c.v_a = bind("att.v_a");
  c.W_c = bind("dis.W_c");
  c.U_c = bind("dis.U_c");
  c.W_o = bind("out.W_o");
  c.U_o = bind("out.U_o");
  c.V_o = bind("out.V_o");
  c.C_o = bind("out.C_o");
  return m;
}

/// Per-document encoder memory shared by every decoder step.
struct DecoderContext {
  ad::NodeId annotations = 0;  // T_x x A
  ad::NodeId projected = 0;    // T_x x l, U_a h_i per row
  std::size_t length = 0;
};

/// What the decoder carries from step t-1 to step t.
struct DecoderStepState {
  ad::NodeId s_prev = 0;
  ad::NodeId content_history = 0;    // sum_{j<t} c_j
  ad::NodeId attention_history = 0;  // sum_{j<t} a_j
  std::size_t t = 1;
};

/// Every intermediate of one decoder step.
struct DecoderStep {
  ad::NodeId s_prime = 0;
  ad::NodeId raw_scores = 0;
  ad::NodeId alpha = 0;
  ad::NodeId c_prime = 0;
  ad::NodeId c = 0;
  ad::NodeId s = 0;
  ad::NodeId probs = 0;
  DecoderStepState next;
};

inline DecoderContext encode_document(ad::Graph& g, const ModelNodes& m, std::span<const int> ids) {
  DecoderContext ctx;
  ctx.annotations = encode_annotations(g, m.encoder, ids);
  ctx.projected = project_annotations(g, m.control, ctx.annotations);
  ctx.length = ids.size();
  return ctx;
}

/// s_0 = tanh(W_init mean_i h_i); both histories start at zero.
inline DecoderStepState initial_state(ad::Graph& g, const ModelNodes& m, const DecoderContext& ctx) {
  const ad::NodeId mean = g.mattvec(
      ctx.annotations,
      g.input(std::vector<double>(ctx.length, 1.0 / static_cast<double>(ctx.length))));
  DecoderStepState st;
  st.s_prev = g.tanh(g.matvec(m.control.init, mean));
  st.content_history = g.zeros(g.cols(ctx.annotations));
  st.attention_history = g.zeros(ctx.length);
  st.t = 1;
  return st;
}

/// Embedding of the previous output token; the first step (prev < 0) sees
/// a zero vector.
inline ad::NodeId previous_embedding(ad::Graph& g, const ModelNodes& m, int prev) {
  if (prev < 0) return g.zeros(g.cols(m.control.embed));
  require(static_cast<std::size_t>(prev) < g.rows(m.control.embed),
          "decoder: previous token outside the vocabulary");
  return g.lookup(m.control.embed, static_cast<std::size_t>(prev));
}

/// One decoder step in evaluation order s'_t -> a_t -> c'_t -> c_t -> s_t -> p_t.
/// With two_level off, s'_t is s_{t-1} itself; the history terms are only
/// wired in when the matching distraction switch is on.
inline DecoderStep decoder_step(ad::Graph& g, const ModelNodes& m, const ModelConfig& config,
                                const DecoderContext& ctx, const DecoderStepState& state,
                                int prev_token) {
  const ControlNodes& p = m.control;
  DecoderStep out;
  const ad::NodeId y_prev = previous_embedding(g, m, prev_token);
  out.s_prime = config.two_level ? decoder_first_layer(g, p, state.s_prev, y_prev) : state.s_prev;
  out.raw_scores =
      attention_scores(g, p, out.s_prime, ctx.projected,
                       config.distract_attention ? std::optional(state.attention_history)
                                                 : std::nullopt);
  out.alpha = attention_normalize(g, out.raw_scores);
  out.c_prime = content_vector(g, out.alpha, ctx.annotations);
  out.c = distract_content(g, p, out.c_prime,
                           config.distract_content ? std::optional(state.content_history)
                                                   : std::nullopt);
  out.s = decoder_second_layer(g, p, out.s_prime, out.c);
  out.probs = output_distribution(g, p, y_prev, out.s, out.c);

  out.next.s_prev = out.s;
  out.next.content_history = g.add(state.content_history, out.c);
  out.next.attention_history = g.add(state.attention_history, out.alpha);
  out.next.t = state.t + 1;
  return out;
}

/// Teacher-forced -sum_t log p(y_t | y_<t, x) as a scalar node.
inline ad::NodeId sequence_nll(ad::Graph& g, const ModelNodes& m, const ModelConfig& config,
                               std::span<const int> source, std::span<const int> target) {
  require(!target.empty(), "loss: empty target sequence");
  const DecoderContext ctx = encode_document(g, m, source);
  DecoderStepState state = initial_state(g, m, ctx);
  std::vector<ad::NodeId> terms;
  terms.reserve(target.size());
  int prev = -1;
  for (int y : target) {
    require(y >= 0 && static_cast<std::size_t>(y) < config.vocab_size,
            "loss: target id outside the vocabulary");
    const DecoderStep step = decoder_step(g, m, config, ctx, state, prev);
    terms.push_back(g.neg_log_at(step.probs, static_cast<std::size_t>(y)));
    state = step.next;
    prev = y;
  }
  return g.add_n(terms);
}

/// Sum of token-level NLL for one pair, evaluated without gradients.
inline double evaluate_nll(const ModelConfig& config, const ParameterSet& params,
                           std::span<const int> source, std::span<const int> target) {
  ad::Graph g;
  const ModelNodes m = bind_model(g, config, params);
  return g.scalar(sequence_nll(g, m, config, source, target));
}

}  // namespace distract
