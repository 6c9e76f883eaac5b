#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "distract/core/graph.hpp"
#include "distract/corpus/vocabulary.hpp"
#include "distract/model/network.hpp"
#include "distract/search/beam_search.hpp"
#include "distract/search/unk_replace.hpp"

namespace distract {

/// Adapts the trained network to the StepModel interface. One instance
/// decodes one document; it owns the graph that holds every expansion.
class NetworkStepper {
 public:
  using State = DecoderStepState;

  NetworkStepper(const ModelConfig& config, const ParameterSet& params, std::span<const int> source)
      : config_(config), nodes_(bind_model(graph_, config, params)) {
    ctx_ = encode_document(graph_, nodes_, source);
  }

  State initial_state() { return distract::initial_state(graph_, nodes_, ctx_); }

  StepOutput<State> step(const State& state, int prev_token) {
    const DecoderStep s = decoder_step(graph_, nodes_, config_, ctx_, state, prev_token);
    StepOutput<State> out;
    const auto probs = graph_.value(s.probs);
    out.log_probs.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i)
      out.log_probs[i] = std::log(std::max(probs[i], kProbabilityFloor));
    out.record.alpha = graph_.copy(s.alpha);
    out.record.content = graph_.copy(s.c);
    out.record.hidden = graph_.copy(s.s);
    out.next = s.next;
    return out;
  }

  /// Output distribution of a step, for tests and diagnostics.
  std::vector<double> probabilities(const State& state, int prev_token) {
    const DecoderStep s = decoder_step(graph_, nodes_, config_, ctx_, state, prev_token);
    return graph_.copy(s.probs);
  }

 private:
  ModelConfig config_;
  ad::Graph graph_;
  ModelNodes nodes_;
  DecoderContext ctx_;
};

static_assert(StepModel<NetworkStepper>);

struct Summary {
  std::vector<int> ids;              // best hypothesis, including a final EOD if reached
  std::vector<std::string> tokens;   // surface tokens after UNK replacement, EOD dropped
  std::vector<std::size_t> replaced; // output positions that were UNK
  double score = 0.0;
  bool incomplete = false;
};

/// Beam-decodes one encoded document and applies UNK replacement.
inline Summary summarize(const ModelConfig& config, const ParameterSet& params,
                         const Vocabulary& vocab, const EncodedPair& doc, const BeamConfig& beam) {
  NetworkStepper stepper(config, params, doc.source);
  const auto result = beam_search(stepper, beam);
  const auto& best = result.best();

  Summary out;
  out.ids = best.tokens;
  out.score = best.score();
  out.incomplete = result.incomplete;
  std::vector<std::vector<double>> alphas;
  for (const auto& rec : best.steps) alphas.push_back(rec.alpha);
  for (std::size_t t = 0; t < best.tokens.size() && best.tokens[t] != kEod; ++t)
    if (best.tokens[t] == kUnk) out.replaced.push_back(t);
  out.tokens = unk_replace(best.tokens, alphas, doc.source_tokens, vocab);
  return out;
}

}  // namespace distract
