#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "distract/cli/config.hpp"
#include "distract/cli/manifest.hpp"
#include "distract/corpus/corpus.hpp"
#include "distract/corpus/vocabulary.hpp"
#include "distract/model/parameters.hpp"
#include "distract/rouge/rouge.hpp"
#include "distract/search/summarizer.hpp"
#include "distract/train/checkpoint.hpp"
#include "distract/train/trainer.hpp"

namespace distract::cli {

inline std::vector<DocumentPair> read_corpus_file(const std::string& path, const CorpusReadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot read '" + path + "'");
  return read_corpus(in, opts);
}

inline Vocabulary read_vocabulary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot read vocabulary '" + path + "'");
  return Vocabulary::load(in);
}

// ---------------------------------------------------------------- build-vocab

struct BuildVocabArgs {
  std::string corpus;
  std::string out;
  std::size_t size = 25000;
  bool char_mode = false;
};

inline Vocabulary cmd_build_vocab(const BuildVocabArgs& args) {
  require(args.size >= 5, "build-vocab: --size must be at least 5");
  RunManifest manifest;
  manifest.command = "build-vocab";
  auto pairs = read_corpus_file(args.corpus, {});
  if (args.char_mode)
    for (auto& p : pairs) p = to_characters(p);
  const Vocabulary vocab = Vocabulary::build(pairs, args.size);
  write_file_atomic(args.out, vocab.serialize());

  manifest.config = "size=" + std::to_string(args.size) + "\nchar_mode=" + (args.char_mode ? "true" : "false") + "\n";
  manifest.seed = "none";
  manifest.inputs = {{"corpus", args.corpus}};
  manifest.outputs = {{"vocab", args.out}};
  manifest.write(args.out + ".manifest");
  return vocab;
}

// ---------------------------------------------------------------------- train

struct TrainArgs {
  std::string corpus;
  std::string vocab;
  std::string out_dir;
  std::string valid;  // optional validation corpus
  RunConfig config;
};

/// Writes <out_dir>/model.ckpt, train.log and manifest.txt.
inline TrainingRun cmd_train(const TrainArgs& args) {
  RunManifest manifest;
  manifest.command = "train";
  const TrainingConfig config = args.config.training();
  const Vocabulary vocab = read_vocabulary_file(args.vocab);
  const auto corpus = read_corpus_file(args.corpus, {});
  std::optional<std::vector<DocumentPair>> valid;
  if (!args.valid.empty()) valid = read_corpus_file(args.valid, {});

  std::filesystem::create_directories(args.out_dir);
  const std::string log_path = args.out_dir + "/train.log";
  const std::string ckpt_path = args.out_dir + "/model.ckpt";
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw LoadError("cannot open '" + log_path + "' for writing");

  TrainingRun run = train(corpus, vocab, config, valid ? &*valid : nullptr, &log);
  log.flush();
  save_checkpoint(run.best, ckpt_path);

  manifest.config = args.config.dump();
  manifest.seed = std::to_string(config.seed);
  manifest.inputs = {{"corpus", args.corpus}, {"vocab", args.vocab}};
  if (!args.valid.empty()) manifest.inputs.emplace_back("valid", args.valid);
  manifest.outputs = {{"checkpoint", ckpt_path}, {"log", log_path}};
  manifest.write(args.out_dir + "/manifest.txt");
  return run;
}

// ------------------------------------------------------------------ summarize

struct SummarizeArgs {
  std::string checkpoint;
  std::string vocab;
  std::string input;
  std::string out;
  RunConfig config;
};

/// Checks that a checkpoint matches the vocabulary and its own declared
/// shapes, returning the model configuration.
inline ModelConfig validate_checkpoint(const ModelCheckpoint& ckpt, const Vocabulary& vocab) {
  const ModelConfig config = model_config_from(ckpt.metadata);
  auto fp = ckpt.metadata.find("vocab_fingerprint");
  if (fp == ckpt.metadata.end() || fp->second != hex64(vocab.fingerprint()))
    throw LoadError("checkpoint was trained with a different vocabulary");
  if (config.vocab_size != vocab.size())
    throw LoadError("checkpoint vocabulary size differs from the vocabulary file");
  const ParameterSet expected = make_parameters(config);
  if (expected.size() != ckpt.tensors.size())
    throw LoadError("checkpoint parameter set does not match its configuration");
  for (const auto& [name, t] : expected) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end() || it->second.shape() != t.shape())
      throw LoadError("checkpoint tensor '" + name + "' is missing or misshapen");
  }
  return config;
}

/// Decodes every input document; one JSON line {"summary": [...]} per input.
inline std::vector<Summary> cmd_summarize(const SummarizeArgs& args) {
  RunManifest manifest;
  manifest.command = "summarize";
  const BeamConfig beam = args.config.beam();
  const Vocabulary vocab = read_vocabulary_file(args.vocab);
  const ModelCheckpoint ckpt = load_checkpoint(args.checkpoint);
  const ModelConfig model = validate_checkpoint(ckpt, vocab);
  const auto it = ckpt.metadata.find("char_mode");
  const bool char_mode = (it != ckpt.metadata.end() && it->second == "true") || args.config.flag("char_mode");

  const auto docs = read_corpus_file(args.input, {.require_sentences = true, .require_summary = false});
  std::vector<EncodedPair> encoded;
  for (const auto& d : docs) encoded.push_back(encode(char_mode ? to_characters(d) : d, vocab));

  std::vector<Summary> summaries(encoded.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < encoded.size(); i = next++)
      summaries[i] = summarize(model, ckpt.tensors, vocab, encoded[i], beam);
  };
  const std::size_t jobs = std::min(args.config.jobs(), std::max<std::size_t>(encoded.size(), 1));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  std::string text;
  for (const auto& s : summaries) text += summary_json_line(s.tokens) + "\n";
  write_file_atomic(args.out, text);

  manifest.config = args.config.dump();
  manifest.seed = ckpt.metadata.contains("seed") ? ckpt.metadata.at("seed") : "none";
  manifest.inputs = {{"checkpoint", args.checkpoint}, {"vocab", args.vocab}, {"documents", args.input}};
  manifest.outputs = {{"summaries", args.out}};
  manifest.write(args.out + ".manifest");
  return summaries;
}

// ------------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string system;
  std::string reference;
  std::string out;  // optional report file
  bool char_mode = false;
};

inline std::string format_report(const RougeScore& s, std::size_t documents) {
  std::ostringstream out;
  out << "documents=" << documents << "\n";
  auto line = [&](const char* name, const RougeComponent& c) {
    out << name << "_precision=" << format_double(c.precision) << "\n"
        << name << "_recall=" << format_double(c.recall) << "\n"
        << name << "_f1=" << format_double(c.f1) << "\n";
  };
  line("rouge1", s.rouge1);
  line("rouge2", s.rouge2);
  line("rougeL", s.rougeL);
  return out.str();
}

inline RougeScore cmd_evaluate(const EvaluateArgs& args, std::ostream& report) {
  const CorpusReadOptions opts{.require_sentences = false, .require_summary = false};
  auto system = read_corpus_file(args.system, opts);
  auto reference = read_corpus_file(args.reference, opts);
  require(system.size() == reference.size(),
          "evaluate: system has " + std::to_string(system.size()) + " summaries but reference has " +
              std::to_string(reference.size()));
  std::vector<ScoredPair> pairs;
  for (std::size_t i = 0; i < system.size(); ++i) {
    if (args.char_mode) {
      system[i] = to_characters(system[i]);
      reference[i] = to_characters(reference[i]);
    }
    pairs.push_back({system[i].summary, reference[i].summary});
  }
  const RougeScore score = corpus_rouge(pairs);
  const std::string text = format_report(score, pairs.size());
  report << text;
  if (!args.out.empty()) write_file_atomic(args.out, text);
  return score;
}

}  // namespace distract::cli
