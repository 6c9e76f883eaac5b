// Command-line entry point: build-vocab, train, summarize, evaluate.
//
// Exit codes: 0 success, 2 usage or input error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "distract/cli/commands.hpp"

namespace {

using distract::cli::RunConfig;

constexpr int kUsageExit = 2;
constexpr int kNumericalExit = 3;

std::string hyphenated(std::string s) {
  for (char& c : s)
    if (c == '_') c = '-';
  return s;
}

/// Registers --key (and --key-with-hyphens) for every configuration key.
/// Values land in `overrides` and are applied after the preset and file.
void add_config_flags(CLI::App& cmd, std::map<std::string, std::string>& overrides) {
  for (const auto& key : distract::cli::config_keys()) {
    std::string names = "--" + key.name;
    if (hyphenated(key.name) != key.name) names += ",--" + hyphenated(key.name);
    const std::string& def = key.default_value;
    auto store = [&overrides, name = key.name](const std::string& v) { overrides[name] = v; };
    if (def == "true" || def == "false") {
      std::string flag_names = "--" + key.name + "{true}";
      if (hyphenated(key.name) != key.name) flag_names += ",--" + hyphenated(key.name) + "{true}";
      // Left empty unless the flag is given; resolve() skips empty entries.
      cmd.add_flag(flag_names, overrides[key.name], key.help + " (default " + def + ")");
    } else {
      cmd.add_option_function<std::string>(names, store, key.help + " (default " + def + ")");
    }
  }
}

RunConfig resolve(const std::string& preset, const std::string& config_path,
                  const std::map<std::string, std::string>& overrides) {
  RunConfig rc;
  if (!preset.empty()) rc.apply_preset(preset);
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw distract::LoadError("cannot read config '" + config_path + "'");
    rc.load(in);
  }
  for (const auto& [k, v] : overrides)
    if (!v.empty()) rc.set(k, v);
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distraction-based neural document summarization"};
  app.require_subcommand(1);
  app.set_version_flag("--version", distract::kVersion);

  // build-vocab
  distract::cli::BuildVocabArgs vocab_args;
  auto* build = app.add_subcommand("build-vocab", "Build a frequency-truncated vocabulary");
  build->add_option("--corpus", vocab_args.corpus, "JSON-lines corpus")->required();
  build->add_option("--out", vocab_args.out, "vocabulary file to write")->required();
  build->add_option("--size,--vocab-size", vocab_args.size, "vocabulary size including 4 reserved tokens");
  build->add_flag("--char-mode,--char_mode", vocab_args.char_mode, "split tokens into characters");

  // train
  distract::cli::TrainArgs train_args;
  std::string train_preset, train_config;
  std::map<std::string, std::string> train_overrides;
  auto* train = app.add_subcommand("train", "Train a summarization model");
  train->add_option("--corpus", train_args.corpus, "training corpus")->required();
  train->add_option("--vocab", train_args.vocab, "vocabulary file")->required();
  train->add_option("--out", train_args.out_dir, "output directory")->required();
  train->add_option("--valid", train_args.valid, "validation corpus (default: training corpus)");
  train->add_option("--config", train_config, "key=value configuration file");
  train->add_option("--preset", train_preset, "cnn or lcsts");
  add_config_flags(*train, train_overrides);

  // summarize
  distract::cli::SummarizeArgs sum_args;
  std::string sum_preset, sum_config;
  std::map<std::string, std::string> sum_overrides;
  auto* summarize = app.add_subcommand("summarize", "Decode summaries with distraction beam search");
  summarize->add_option("--checkpoint", sum_args.checkpoint, "model checkpoint")->required();
  summarize->add_option("--vocab", sum_args.vocab, "vocabulary file")->required();
  summarize->add_option("--corpus,--input", sum_args.input, "documents (JSON lines)")->required();
  summarize->add_option("--out", sum_args.out, "summaries file to write")->required();
  summarize->add_option("--config", sum_config, "key=value configuration file");
  summarize->add_option("--preset", sum_preset, "cnn or lcsts");
  add_config_flags(*summarize, sum_overrides);

  // evaluate
  distract::cli::EvaluateArgs eval_args;
  auto* evaluate = app.add_subcommand("evaluate", "ROUGE-1/2/L F1 of system summaries");
  evaluate->add_option("--system", eval_args.system, "system summaries (JSON lines)")->required();
  evaluate->add_option("--reference", eval_args.reference, "reference summaries (JSON lines)")->required();
  evaluate->add_option("--out", eval_args.out, "also write the report here");
  evaluate->add_flag("--char-mode,--char_mode", eval_args.char_mode, "score over characters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    if (*build) {
      const auto vocab = distract::cli::cmd_build_vocab(vocab_args);
      std::cout << "vocab_size=" << vocab.size() << "\n";
    } else if (*train) {
      train_args.config = resolve(train_preset, train_config, train_overrides);
      const auto run = distract::cli::cmd_train(train_args);
      std::cout << "updates=" << run.updates << " best_epoch=" << run.best_epoch
                << " best_valid_loss=" << distract::format_double(run.best_valid_loss) << "\n";
    } else if (*summarize) {
      sum_args.config = resolve(sum_preset, sum_config, sum_overrides);
      const auto summaries = distract::cli::cmd_summarize(sum_args);
      std::size_t incomplete = 0;
      for (const auto& s : summaries) incomplete += s.incomplete ? 1 : 0;
      if (incomplete > 0)
        std::cerr << "warning: " << incomplete
                  << " document(s) reached max_len without an end-of-document token\n";
      std::cout << "documents=" << summaries.size() << "\n";
    } else if (*evaluate) {
      distract::cli::cmd_evaluate(eval_args, std::cout);
    }
  } catch (const distract::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalExit;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageExit;
  }
  return 0;
}
