#pragma once

#include <cmath>

#include "distract/core/graph.hpp"
#include "distract/corpus/batching.hpp"
#include "distract/model/network.hpp"

namespace distract {

struct BatchLoss {
  double total = 0.0;      // summed token NLL
  std::size_t tokens = 0;  // non-PAD target positions
  double per_token() const { return tokens == 0 ? 0.0 : total / static_cast<double>(tokens); }
};

/// Teacher-forced NLL of a batch. When `grads` is given, the gradient of the
/// per-token loss is added into it. Each example is unrolled over its true
/// lengths only, so PAD positions never enter the graph.
inline BatchLoss batch_loss(const ModelConfig& config, const ParameterSet& params, const Batch& batch,
                            ParameterSet* grads = nullptr) {
  BatchLoss out;
  out.tokens = batch.target_tokens();
  ParameterSet local;
  if (grads != nullptr) local = zeros_like(params);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    ad::Graph g;
    const ModelNodes m = bind_model(g, config, params, grads != nullptr ? &local : nullptr);
    const ad::NodeId loss = sequence_nll(g, m, config, batch.source_row(i), batch.target_row(i));
    out.total += g.scalar(loss);
    if (grads != nullptr) g.backward(loss);
  }
  if (grads != nullptr && out.tokens > 0) {
    const double k = 1.0 / static_cast<double>(out.tokens);
    for (auto& [name, g] : *grads) {
      const Tensor& l = local.at(name);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += k * l[j];
    }
  }
  return out;
}

/// Per-token NLL of a batch.
inline double nll_loss(const ModelConfig& config, const ParameterSet& params, const Batch& batch) {
  return batch_loss(config, params, batch).per_token();
}

}  // namespace distract
