#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/corpus/special_tokens.hpp"
#include "distract/corpus/vocabulary.hpp"

namespace distract {

/// Index of the largest weight; ties go to the smallest index.
inline std::size_t argmax(std::span<const double> v) {
  require(!v.empty(), "argmax: empty vector");
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

/// Turns output ids into tokens, replacing each UNK at step t with the
/// source token under the largest attention weight of a_t. Stops at the
/// first end-of-document id.
inline std::vector<std::string> unk_replace(std::span<const int> ids,
                                            std::span<const std::vector<double>> alphas,
                                            std::span<const std::string> source_tokens,
                                            const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] == kEod) break;
    if (ids[t] != kUnk) {
      out.push_back(vocab.token(ids[t]));
      continue;
    }
    require(t < alphas.size(), "unk_replace: no attention recorded for step " + std::to_string(t + 1));
    require(alphas[t].size() == source_tokens.size(),
            "unk_replace: attention length differs from the source length");
    out.push_back(source_tokens[argmax(alphas[t])]);
  }
  return out;
}

}  // namespace distract
