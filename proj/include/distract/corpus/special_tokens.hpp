#pragma once

#include <array>
#include <string_view>

namespace distract {

// Reserved ids, fixed across every vocabulary.
inline constexpr int kPad = 0;
inline constexpr int kUnk = 1;
inline constexpr int kEos = 2;  // end of sentence
inline constexpr int kEod = 3;  // end of document
inline constexpr int kReservedCount = 4;

inline constexpr std::array<std::string_view, kReservedCount> kReservedTokens = {
    "<pad>", "<unk>", "</s>", "</d>"};

}  // namespace distract
