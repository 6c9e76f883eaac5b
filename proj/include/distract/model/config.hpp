#pragma once

#include <cstddef>
#include <string>

#include "distract/core/error.hpp"

namespace distract {

/// Network shape plus the switches that turn the baseline attention decoder
/// into the distraction model. All switches share one code path.
struct ModelConfig {
  std::size_t vocab_size = 0;     // K
  std::size_t embed_dim = 0;      // m
  std::size_t hidden_dim = 0;     // n, shared by encoder and decoder
  std::size_t attention_dim = 0;  // l

  bool bidirectional = true;
  bool two_level = true;           // s'_t = GRU2(s_{t-1}, e(y_{t-1})) before attention
  bool distract_content = true;    // content-history term on c_t
  bool distract_attention = true;  // attention-history term on the scores

  std::size_t annotation_dim() const { return bidirectional ? 2 * hidden_dim : hidden_dim; }

  void validate() const {
    require(vocab_size > 4, "model: vocab_size must exceed the 4 reserved tokens");
    require(embed_dim > 0 && hidden_dim > 0 && attention_dim > 0,
            "model: embed_dim, hidden_dim and attention_dim must be positive");
  }

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace distract
