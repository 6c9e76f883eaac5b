#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "distract/core/error.hpp"

namespace distract {

struct RougeComponent {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RougeScore {
  RougeComponent rouge1;
  RougeComponent rouge2;
  RougeComponent rougeL;
};

/// Builds P, R and F1 = 2PR / (P + R), with F1 = 0 when P + R = 0.
inline RougeComponent make_component(double overlap, double candidate_total, double reference_total) {
  RougeComponent c;
  c.precision = candidate_total > 0 ? overlap / candidate_total : 0.0;
  c.recall = reference_total > 0 ? overlap / reference_total : 0.0;
  const double sum = c.precision + c.recall;
  c.f1 = sum > 0 ? 2.0 * c.precision * c.recall / sum : 0.0;
  return c;
}

namespace detail {

inline std::map<std::vector<std::string>, std::size_t> ngram_counts(std::span<const std::string> tokens,
                                                                    std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return counts;
}

}  // namespace detail

/// ROUGE-N with clipped n-gram overlap. A side shorter than n has no
/// n-grams and scores F1 = 0.
inline RougeComponent rouge_n(std::span<const std::string> candidate,
                              std::span<const std::string> reference, std::size_t n) {
  require(n == 1 || n == 2, "rouge_n: n must be 1 or 2");
  const auto cand = detail::ngram_counts(candidate, n);
  const auto ref = detail::ngram_counts(reference, n);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand)
    if (auto it = ref.find(gram); it != ref.end()) overlap += std::min(count, it->second);
  const auto total = [](std::span<const std::string> t, std::size_t k) {
    return t.size() >= k ? static_cast<double>(t.size() - k + 1) : 0.0;
  };
  return make_component(static_cast<double>(overlap), total(candidate, n), total(reference, n));
}

inline std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

/// ROUGE-L from the longest common subsequence: P = L/|cand|, R = L/|ref|.
inline RougeComponent rouge_l(std::span<const std::string> candidate,
                              std::span<const std::string> reference) {
  const double lcs = static_cast<double>(lcs_length(candidate, reference));
  return make_component(lcs, static_cast<double>(candidate.size()),
                        static_cast<double>(reference.size()));
}

inline RougeScore rouge(std::span<const std::string> candidate, std::span<const std::string> reference) {
  return {rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2),
          rouge_l(candidate, reference)};
}

struct ScoredPair {
  std::vector<std::string> candidate;
  std::vector<std::string> reference;
};

/// Macro average: per-document P, R and F1 averaged over the corpus.
inline RougeScore corpus_rouge(std::span<const ScoredPair> pairs) {
  require(!pairs.empty(), "corpus_rouge: no pairs");
  RougeScore mean;
  auto accumulate = [](RougeComponent& into, const RougeComponent& x) {
    into.precision += x.precision;
    into.recall += x.recall;
    into.f1 += x.f1;
  };
  for (const auto& p : pairs) {
    const RougeScore s = rouge(p.candidate, p.reference);
    accumulate(mean.rouge1, s.rouge1);
    accumulate(mean.rouge2, s.rouge2);
    accumulate(mean.rougeL, s.rougeL);
  }
  const double n = static_cast<double>(pairs.size());
  for (RougeComponent* c : {&mean.rouge1, &mean.rouge2, &mean.rougeL}) {
    c->precision /= n;
    c->recall /= n;
    c->f1 /= n;
  }
  return mean;
}

}  // namespace distract
