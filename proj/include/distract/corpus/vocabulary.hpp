#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/corpus/corpus.hpp"
#include "distract/corpus/special_tokens.hpp"

namespace distract {

/// Token <-> id map. Ids 0..3 are always PAD, UNK, EOS, EOD.
class Vocabulary {
 public:
  Vocabulary() {
    for (auto tok : kReservedTokens) tokens_.emplace_back(tok);
  }

  /// Keeps the `size_limit - 4` most frequent tokens over documents and
  /// summaries. Equal counts keep first-occurrence order.
  static Vocabulary build(const std::vector<DocumentPair>& pairs, std::size_t size_limit) {
    require(size_limit >= 5, "build_vocabulary: size limit must be at least 5");
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::pair<std::string, std::size_t>> counts;  // first-occurrence order
    auto count = [&](const std::string& tok) {
      if (is_reserved(tok)) return;
      auto [it, inserted] = index.try_emplace(tok, counts.size());
      if (inserted) counts.emplace_back(tok, 0);
      ++counts[it->second].second;
    };
    for (const auto& p : pairs) {
      for (const auto& sentence : p.sentences)
        for (const auto& tok : sentence) count(tok);
      for (const auto& tok : p.summary) count(tok);
    }
    require(!counts.empty(), "build_vocabulary: corpus has no tokens");

    std::stable_sort(counts.begin(), counts.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t keep = std::min(counts.size(), size_limit - kReservedCount);
    Vocabulary v;
    for (std::size_t i = 0; i < keep; ++i) v.append(counts[i].first);
    return v;
  }

  std::size_t size() const { return tokens_.size(); }

  /// Id of `token`, or UNK when it is not in the vocabulary.
  int id(std::string_view token) const {
    for (int r = 0; r < kReservedCount; ++r)
      if (token == kReservedTokens[static_cast<std::size_t>(r)]) return r;
    auto it = ids_.find(std::string(token));
    return it == ids_.end() ? kUnk : it->second;
  }

  bool contains(std::string_view token) const {
    return is_reserved(token) || ids_.contains(std::string(token));
  }

  const std::string& token(int id) const {
    require(id >= 0 && static_cast<std::size_t>(id) < tokens_.size(), "vocabulary: id out of range");
    return tokens_[static_cast<std::size_t>(id)];
  }

  /// Four reserved header lines, then one token per line (line index = id - 4).
  void save(std::ostream& out) const {
    for (const auto& tok : tokens_) out << tok << '\n';
  }

  std::string serialize() const {
    std::ostringstream out;
    save(out);
    return out.str();
  }

  static Vocabulary load(std::istream& in) {
    Vocabulary v;
    std::string line;
    for (int r = 0; r < kReservedCount; ++r) {
      if (!std::getline(in, line) || line != kReservedTokens[static_cast<std::size_t>(r)])
        throw LoadError("vocabulary: missing reserved header line " + std::to_string(r + 1));
    }
    while (std::getline(in, line)) {
      if (v.ids_.contains(line) || is_reserved(line) || line.empty())
        throw LoadError("vocabulary: invalid or duplicate token on line " +
                        std::to_string(v.size() + 1));
      v.append(line);
    }
    return v;
  }

  /// FNV-1a over the serialized form; stored in checkpoints to catch mismatches.
  std::uint64_t fingerprint() const {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char ch : serialize()) {
      h ^= ch;
      h *= 1099511628211ull;
    }
    return h;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  static bool is_reserved(std::string_view tok) {
    return std::find(kReservedTokens.begin(), kReservedTokens.end(), tok) != kReservedTokens.end();
  }

  void append(std::string tok) {
    ids_.emplace(tok, static_cast<int>(tokens_.size()));
    tokens_.push_back(std::move(tok));
  }

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

/// Source/target ids of one pair plus the source surface tokens aligned
/// position by position (used for UNK replacement).
struct EncodedPair {
  std::vector<int> source;
  std::vector<int> target;
  std::vector<std::string> source_tokens;
};

/// Sentences joined with EOS, EOD appended; the summary also ends with EOD.
/// Out-of-vocabulary tokens become UNK.
inline EncodedPair encode(const DocumentPair& pair, const Vocabulary& vocab) {
  EncodedPair out;
  for (std::size_t s = 0; s < pair.sentences.size(); ++s) {
    if (s > 0) {
      out.source.push_back(kEos);
      out.source_tokens.emplace_back(kReservedTokens[kEos]);
    }
    for (const auto& tok : pair.sentences[s]) {
      out.source.push_back(vocab.id(tok));
      out.source_tokens.push_back(tok);
    }
  }
  out.source.push_back(kEod);
  out.source_tokens.emplace_back(kReservedTokens[kEod]);

  for (const auto& tok : pair.summary) out.target.push_back(vocab.id(tok));
  out.target.push_back(kEod);
  return out;
}

/// Maps ids back to tokens, stopping at the first EOD.
inline std::vector<std::string> decode(std::span<const int> ids, const Vocabulary& vocab) {
  std::vector<std::string> out;
  for (int id : ids) {
    if (id == kEod) break;
    out.push_back(vocab.token(id));
  }
  return out;
}

}  // namespace distract
