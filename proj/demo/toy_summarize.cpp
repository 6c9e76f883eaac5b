// Trains a small model on synthetic two-sentence documents and decodes a few
// of them with and without distraction in the beam search.

#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "distract/distract.hpp"

using namespace distract;

namespace {

std::vector<DocumentPair> make_documents(std::mt19937_64& rng, int count) {
  std::vector<DocumentPair> docs;
  for (int i = 0; i < count; ++i) {
    std::vector<std::string> a, b;
    for (int j = 0; j < 6; ++j) a.push_back("a" + std::to_string(rng() % 10));
    for (int j = 0; j < 6; ++j) b.push_back("b" + std::to_string(rng() % 10));
    std::vector<std::string> summary = a;
    summary.insert(summary.end(), b.begin(), b.end());
    docs.push_back({{a, b}, summary});
  }
  return docs;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += (out.empty() ? "" : " ") + t;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t updates = argc > 1 ? std::stoul(argv[1]) : 600;
  std::mt19937_64 rng(5);
  const auto corpus = make_documents(rng, 200);
  const auto test = make_documents(rng, 5);
  const Vocabulary vocab = Vocabulary::build(corpus, 40);

  TrainingConfig config;
  config.model = {40, 32, 64, 64};
  config.batch_size = 10;
  config.max_epochs = 1000;
  config.max_updates = updates;
  config.valid_every = 1000;
  config.seed = 3;
  config.init_scale = 0.2;
  std::printf("training %zu updates on %zu documents\n", updates, corpus.size());
  const TrainingRun run = train(corpus, vocab, config);
  const ModelConfig model = model_config_from(run.best.metadata);
  std::printf("final batch loss %.4f\n\n", run.batch_losses.back());

  BeamConfig plain;
  plain.beam_size = 10;
  plain.max_length = 20;
  plain.weights = {0.0, 0.0, 0.0};
  BeamConfig distracted = plain;
  distracted.weights = {5.0, -5.0, -5.0};
  for (const auto& doc : test) {
    const EncodedPair e = encode(doc, vocab);
    std::printf("document   %s | %s\n", join(doc.sentences[0]).c_str(), join(doc.sentences[1]).c_str());
    std::printf("plain      %s\n", join(summarize(model, run.best.tensors, vocab, e, plain).tokens).c_str());
    std::printf("distracted %s\n\n", join(summarize(model, run.best.tensors, vocab, e, distracted).tokens).c_str());
  }
}
