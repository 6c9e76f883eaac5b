#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/corpus/special_tokens.hpp"
#include "distract/corpus/vocabulary.hpp"

namespace distract {

/// Padded id matrices (row-major, examples x max length) with 0/1 masks.
struct Batch {
  std::size_t max_source = 0;
  std::size_t max_target = 0;
  std::vector<int> source;
  std::vector<unsigned char> source_mask;
  std::vector<int> target;
  std::vector<unsigned char> target_mask;
  std::vector<std::size_t> source_lengths;
  std::vector<std::size_t> target_lengths;
  std::vector<std::size_t> example_ids;  // positions in the list given to make_batches

  std::size_t size() const { return source_lengths.size(); }

  /// Unpadded source ids of example i.
  std::span<const int> source_row(std::size_t i) const {
    return {source.data() + i * max_source, source_lengths[i]};
  }
  std::span<const int> target_row(std::size_t i) const {
    return {target.data() + i * max_target, target_lengths[i]};
  }
  std::size_t target_tokens() const {
    return std::accumulate(target_lengths.begin(), target_lengths.end(), std::size_t{0});
  }
};

inline Batch make_batch(const std::vector<EncodedPair>& pairs, std::span<const std::size_t> ids) {
  Batch b;
  for (std::size_t id : ids) {
    b.max_source = std::max(b.max_source, pairs[id].source.size());
    b.max_target = std::max(b.max_target, pairs[id].target.size());
  }
  const std::size_t n = ids.size();
  b.source.assign(n * b.max_source, kPad);
  b.source_mask.assign(n * b.max_source, 0);
  b.target.assign(n * b.max_target, kPad);
  b.target_mask.assign(n * b.max_target, 0);
  for (std::size_t r = 0; r < n; ++r) {
    const EncodedPair& p = pairs[ids[r]];
    std::copy(p.source.begin(), p.source.end(), b.source.begin() + static_cast<std::ptrdiff_t>(r * b.max_source));
    std::fill_n(b.source_mask.begin() + static_cast<std::ptrdiff_t>(r * b.max_source), p.source.size(), 1);
    std::copy(p.target.begin(), p.target.end(), b.target.begin() + static_cast<std::ptrdiff_t>(r * b.max_target));
    std::fill_n(b.target_mask.begin() + static_cast<std::ptrdiff_t>(r * b.max_target), p.target.size(), 1);
    b.source_lengths.push_back(p.source.size());
    b.target_lengths.push_back(p.target.size());
    b.example_ids.push_back(ids[r]);
  }
  return b;
}

/// Shuffled, length-sorted mini-batches.
///
/// Examples are shuffled, cut into buckets of `bucket_batches` batches,
/// sorted by source length inside each bucket, split into batches, and the
/// batch order is shuffled again. Deterministic for a fixed seed.
inline std::vector<Batch> make_batches(const std::vector<EncodedPair>& pairs, std::size_t batch_size,
                                       std::uint64_t seed, std::size_t bucket_batches = 20) {
  require(batch_size >= 1, "make_batches: batch size must be at least 1");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t bucket = batch_size * std::max<std::size_t>(bucket_batches, 1);
  for (std::size_t start = 0; start < order.size(); start += bucket) {
    const auto first = order.begin() + static_cast<std::ptrdiff_t>(start);
    const auto last = order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + bucket));
    std::stable_sort(first, last, [&](std::size_t a, std::size_t b) {
      return pairs[a].source.size() < pairs[b].source.size();
    });
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, order.size() - start);
    batches.push_back(make_batch(pairs, std::span<const std::size_t>(order.data() + start, n)));
  }
  std::shuffle(batches.begin(), batches.end(), rng);
  return batches;
}

}  // namespace distract
