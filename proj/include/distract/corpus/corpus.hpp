#pragma once

#include <istream>
#include <string>
#include <vector>

#include <json.hpp>

#include "distract/core/error.hpp"

namespace distract {

/// A tokenized document (list of sentences) and its reference summary.
struct DocumentPair {
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::string> summary;

  std::size_t document_tokens() const {
    std::size_t n = 0;
    for (const auto& s : sentences) n += s.size();
    return n;
  }

  friend bool operator==(const DocumentPair&, const DocumentPair&) = default;
};

struct CorpusReadOptions {
  bool require_sentences = true;  // training and summarize inputs
  bool require_summary = true;    // training pairs and reference files
};

/// Reads one JSON object per line: {"sentences": [[tok, ...], ...], "summary": [tok, ...]}.
/// Blank lines are skipped. Any malformed line raises LoadError naming it.
inline std::vector<DocumentPair> read_corpus(std::istream& in, const CorpusReadOptions& opts = {}) {
  std::vector<DocumentPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "corpus line " + std::to_string(line_no);
    DocumentPair pair;
    try {
      const auto obj = nlohmann::json::parse(line);
      if (!obj.is_object()) throw LoadError(where + ": expected a JSON object");
      if (obj.contains("sentences"))
        pair.sentences = obj.at("sentences").get<std::vector<std::vector<std::string>>>();
      if (obj.contains("summary")) pair.summary = obj.at("summary").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(where + ": " + e.what());
    }
    if (opts.require_sentences) {
      bool has_token = false;
      for (const auto& s : pair.sentences) has_token = has_token || !s.empty();
      if (!has_token) throw LoadError(where + ": document has no tokens");
    }
    if (opts.require_summary && pair.summary.empty())
      throw LoadError(where + ": summary is empty");
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

inline std::string to_json_line(const DocumentPair& pair) {
  nlohmann::json obj;
  obj["sentences"] = pair.sentences;
  obj["summary"] = pair.summary;
  return obj.dump();
}

/// One JSON line carrying only a summary, as written by `summarize`.
inline std::string summary_json_line(const std::vector<std::string>& summary) {
  nlohmann::json obj;
  obj["summary"] = summary;
  return obj.dump();
}

/// Splits a UTF-8 string into code points. Invalid lead bytes are kept as
/// single-byte units.
inline std::vector<std::string> utf8_characters(const std::string& text) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < text.size();) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0) len = 4;
    else if (lead >= 0xE0) len = 3;
    else if (lead >= 0xC0) len = 2;
    len = std::min(len, text.size() - i);
    out.push_back(text.substr(i, len));
    i += len;
  }
  return out;
}

/// Character mode: every token is split into its characters, sentence
/// boundaries are kept.
inline DocumentPair to_characters(const DocumentPair& pair) {
  DocumentPair out;
  for (const auto& sentence : pair.sentences) {
    std::vector<std::string> chars;
    for (const auto& tok : sentence)
      for (auto& ch : utf8_characters(tok)) chars.push_back(std::move(ch));
    out.sentences.push_back(std::move(chars));
  }
  for (const auto& tok : pair.summary)
    for (auto& ch : utf8_characters(tok)) out.summary.push_back(std::move(ch));
  return out;
}

/// Drops documents with more than `max_tokens` tokens (training/validation only).
inline std::vector<DocumentPair> filter_by_length(std::vector<DocumentPair> pairs,
                                                  std::size_t max_tokens) {
  std::erase_if(pairs, [&](const DocumentPair& p) { return p.document_tokens() > max_tokens; });
  return pairs;
}

}  // namespace distract
