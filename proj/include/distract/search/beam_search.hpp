#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/corpus/special_tokens.hpp"
#include "distract/search/distraction.hpp"

namespace distract {

struct BeamConfig {
  std::size_t beam_size = 5;
  std::size_t max_length = 100;
  DistractionWeights weights;
  bool length_normalize = false;  // final ranking by score / length
  int end_token = kEod;

  void validate() const {
    require(beam_size >= 1, "beam search: beam size must be at least 1");
    require(max_length >= 1, "beam search: max length must be at least 1");
    require(std::isfinite(weights.attention) && std::isfinite(weights.content) &&
                std::isfinite(weights.hidden),
            "beam search: distraction weights must be finite");
  }
};

/// Result of advancing a decoder by one token.
template <class State>
struct StepOutput {
  std::vector<double> log_probs;  // over the whole vocabulary
  StepRecord record;              // a_t, c_t, s_t of this step
  State next;
};

/// A decoder that beam search can drive. `prev_token` is -1 on the first step.
template <class M>
concept StepModel = requires(M& model, const typename M::State& state, int prev_token) {
  typename M::State;
  { model.initial_state() } -> std::same_as<typename M::State>;
  { model.step(state, prev_token) } -> std::same_as<StepOutput<typename M::State>>;
};

template <class State>
struct Hypothesis {
  std::vector<int> tokens;
  double log_prob = 0.0;         // sum_t log p(y_t)
  double bonus = 0.0;            // sum_t (l1 d_a + l2 d_c + l3 d_s)
  std::vector<double> token_log_probs;
  std::vector<StepRecord> steps; // one record per emitted token
  State state{};
  bool finished = false;         // ended with the end token

  double score() const { return log_prob + bonus; }
};

/// Per-step bookkeeping for checking that selection never keeps a
/// candidate worse than one it discards.
struct BeamTrace {
  struct Step {
    double worst_kept = INFINITY;
    double best_pruned = -INFINITY;
  };
  std::vector<Step> steps;
};

template <class State>
struct BeamResult {
  std::vector<Hypothesis<State>> hypotheses;  // best first
  bool incomplete = false;  // no hypothesis reached the end token within max_length

  const Hypothesis<State>& best() const { return hypotheses.front(); }
};

/// Beam search with distraction.
///
/// Every live hypothesis is expanded over the full vocabulary. A candidate
/// scores
///
///   parent score + log p(w) + l1 d_a,t + l2 d_c,t + l3 d_s,t
///
/// where the distraction terms compare this step's a_t, c_t, s_t against the
/// parent's own earlier steps (they do not depend on w). The best
/// `beam_size - completed` candidates survive; those ending in the end token
/// or reaching max_length are completed. Scores are raw cumulative sums.
template <StepModel Model>
BeamResult<typename Model::State> beam_search(Model& model, const BeamConfig& config,
                                              BeamTrace* trace = nullptr) {
  using State = typename Model::State;
  config.validate();

  struct Candidate {
    double score;
    std::size_t parent;
    int token;
  };

  std::vector<Hypothesis<State>> live(1);
  live.front().state = model.initial_state();
  std::vector<Hypothesis<State>> completed;

  for (std::size_t length = 1; length <= config.max_length && !live.empty(); ++length) {
    const std::size_t slots = config.beam_size - completed.size();
    if (slots == 0) break;

    std::vector<StepOutput<State>> outputs;
    std::vector<double> step_bonus;
    std::vector<Candidate> candidates;
    outputs.reserve(live.size());
    for (std::size_t h = 0; h < live.size(); ++h) {
      const Hypothesis<State>& hyp = live[h];
      const int prev = hyp.tokens.empty() ? -1 : hyp.tokens.back();
      outputs.push_back(model.step(hyp.state, prev));
      const StepOutput<State>& out = outputs.back();
      const double bonus =
          config.weights.all_zero()
              ? 0.0
              : config.weights.bonus(distraction_scores(out.record, hyp.steps));
      step_bonus.push_back(bonus);
      for (std::size_t w = 0; w < out.log_probs.size(); ++w)
        candidates.push_back({hyp.score() + out.log_probs[w] + bonus, h, static_cast<int>(w)});
    }

    const std::size_t keep = std::min(slots, candidates.size());
    auto better = [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.parent != b.parent) return a.parent < b.parent;
      return a.token < b.token;
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);

    if (trace != nullptr) {
      BeamTrace::Step s;
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (i < keep) s.worst_kept = std::min(s.worst_kept, candidates[i].score);
        else s.best_pruned = std::max(s.best_pruned, candidates[i].score);
      }
      trace->steps.push_back(s);
    }

    std::vector<Hypothesis<State>> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = candidates[i];
      const Hypothesis<State>& parent = live[c.parent];
      const StepOutput<State>& out = outputs[c.parent];
      Hypothesis<State> child;
      child.tokens = parent.tokens;
      child.tokens.push_back(c.token);
      const double lp = out.log_probs[static_cast<std::size_t>(c.token)];
      child.log_prob = parent.log_prob + lp;
      child.token_log_probs = parent.token_log_probs;
      child.token_log_probs.push_back(lp);
      child.bonus = parent.bonus + step_bonus[c.parent];
      child.steps = parent.steps;
      child.steps.push_back(out.record);
      child.state = out.next;
      child.finished = c.token == config.end_token;
      if (child.finished || length == config.max_length) completed.push_back(std::move(child));
      else next.push_back(std::move(child));
    }
    live = std::move(next);
  }
  // Hypotheses still live here were cut off by the slot budget at max_length.
  for (auto& h : live) completed.push_back(std::move(h));

  BeamResult<State> result;
  result.incomplete = std::none_of(completed.begin(), completed.end(),
                                   [](const auto& h) { return h.finished; });
  auto rank = [&](const Hypothesis<State>& h) {
    return config.length_normalize ? h.score() / static_cast<double>(h.tokens.size()) : h.score();
  };
  std::stable_sort(completed.begin(), completed.end(),
                   [&](const auto& a, const auto& b) { return rank(a) > rank(b); });
  result.hypotheses = std::move(completed);
  return result;
}

/// Recomputes a hypothesis' score from its stored step history.
template <class State>
double rescore(const Hypothesis<State>& h, const DistractionWeights& weights) {
  double score = 0.0;
  for (std::size_t t = 0; t < h.steps.size(); ++t) {
    score += h.token_log_probs[t];
    score += weights.bonus(distraction_scores(
        h.steps[t], std::span<const StepRecord>(h.steps.data(), t)));
  }
  return score;
}

}  // namespace distract
