#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "distract/core/gradcheck.hpp"
#include "distract/train/adadelta.hpp"
#include "distract/train/checkpoint.hpp"
#include "distract/train/loss.hpp"
#include "distract/train/trainer.hpp"
#include "support/fixtures.hpp"

namespace distract {
namespace {

TEST(Adadelta, FrozenFirstStep) {
  ParameterSet params{{"x", Tensor({1}, {0.3})}};
  ParameterSet grads{{"x", Tensor({1}, {0.7})}};
  AdadeltaState st = make_adadelta(params, 0.95, 1e-6);
  adadelta_update(params, grads, st);
  EXPECT_NEAR(params.at("x")[0] - 0.3, -0.00447204468971269, 1e-16);
  EXPECT_NEAR(st.mean_sq_grad.at("x")[0], 0.05 * 0.49, 1e-15);
}

TEST(Adadelta, ZeroGradientLeavesParameter) {
  ParameterSet params{{"x", Tensor({2}, {0.3, -1.0})}};
  ParameterSet grads = zeros_like(params);
  AdadeltaState st = make_adadelta(params);
  adadelta_update(params, grads, st);
  EXPECT_EQ(params.at("x")[0], 0.3);
  EXPECT_EQ(params.at("x")[1], -1.0);
}

TEST(Adadelta, DescendsAQuadratic) {
  ParameterSet params{{"x", Tensor({1}, {2.0})}};
  AdadeltaState st = make_adadelta(params);
  for (int i = 0; i < 3000; ++i) {
    ParameterSet grads{{"x", Tensor({1}, {2.0 * params.at("x")[0]})}};
    adadelta_update(params, grads, st);
  }
  EXPECT_LT(std::abs(params.at("x")[0]), 1.0);
}

TEST(Adadelta, NonFiniteGradientNamesParameterAndChangesNothing) {
  ParameterSet params{{"a", Tensor({1}, {1.0})}, {"b", Tensor({1}, {2.0})}};
  ParameterSet grads{{"a", Tensor({1}, {0.5})}, {"b", Tensor({1}, {NAN})}};
  AdadeltaState st = make_adadelta(params);
  try {
    adadelta_update(params, grads, st);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
  EXPECT_EQ(params.at("a")[0], 1.0);
  EXPECT_EQ(st.mean_sq_grad.at("a")[0], 0.0);
}

TEST(Adadelta, RejectsBadHyperparameters) {
  ParameterSet params{{"x", Tensor({1})}};
  EXPECT_THROW(make_adadelta(params, 1.0), UsageError);
  EXPECT_THROW(make_adadelta(params, 0.9, 0.0), UsageError);
}

TEST(Clip, ScalesToMaxNormPreservingDirection) {
  ParameterSet g{{"a", Tensor({2}, {6.0, 0.0})}, {"b", Tensor({1}, {8.0})}};
  EXPECT_DOUBLE_EQ(clip_global_norm(g, 5.0), 10.0);
  EXPECT_NEAR(global_norm(g), 5.0, 1e-12);
  EXPECT_NEAR(g.at("a")[0], 3.0, 1e-12);
  EXPECT_NEAR(g.at("b")[0], 4.0, 1e-12);
  ParameterSet small{{"a", Tensor({1}, {1.0})}};
  clip_global_norm(small, 5.0);
  EXPECT_EQ(small.at("a")[0], 1.0);
  ParameterSet off{{"a", Tensor({1}, {100.0})}};
  clip_global_norm(off, 0.0);
  EXPECT_EQ(off.at("a")[0], 100.0);
}

TEST(Loss, FrozenPerTokenNll) {
  ad::Graph g;
  const auto a = g.neg_log_at(g.input({0.2, 0.8}), 0);
  const auto b = g.neg_log_at(g.input({0.3, 0.7}), 1);
  EXPECT_NEAR(g.scalar(g.add(a, b)) / 2.0, 0.9830564281864164, 1e-15);
}

std::vector<EncodedPair> tiny_pairs() {
  return {
      {{4, 5, 6, 2, 4, 3}, {5, 3}, {}},
      {{6, 6, 3}, {6, 4, 5, 3}, {}},
      {{5, 4, 2, 6, 5, 4, 1, 3}, {4, 3}, {}},
  };
}

TEST(Loss, BatchIsPermutationInvariant) {
  const ModelConfig config = testing::tiny_config();
  const ParameterSet params = init_parameters(config, 12, 0.3);
  const auto pairs = tiny_pairs();
  const std::vector<std::size_t> fwd{0, 1, 2}, rev{2, 0, 1};
  ParameterSet ga = zeros_like(params), gb = zeros_like(params);
  const BatchLoss la = batch_loss(config, params, make_batch(pairs, fwd), &ga);
  const BatchLoss lb = batch_loss(config, params, make_batch(pairs, rev), &gb);
  EXPECT_NEAR(la.per_token(), lb.per_token(), 1e-14);
  EXPECT_EQ(la.tokens, 8u);
  for (const auto& [name, t] : ga)
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t[i], gb.at(name)[i], 1e-14) << name;
}

TEST(Loss, PaddingContributesNothing) {
  const ModelConfig config = testing::tiny_config();
  const ParameterSet params = init_parameters(config, 13, 0.3);
  const auto pairs = tiny_pairs();
  // Example 1 alone versus example 1 padded out by the longer example 2.
  const std::vector<std::size_t> alone{1}, padded{1, 2};
  const double single = evaluate_nll(config, params, pairs[1].source, pairs[1].target);
  const double other = evaluate_nll(config, params, pairs[2].source, pairs[2].target);
  EXPECT_NEAR(batch_loss(config, params, make_batch(pairs, alone)).total, single, 1e-13);
  EXPECT_NEAR(batch_loss(config, params, make_batch(pairs, padded)).total, single + other, 1e-13);

  ParameterSet grads = zeros_like(params);
  batch_loss(config, params, make_batch(pairs, padded), &grads);
  for (const char* table : {"enc.embed", "dec.embed"})
    for (std::size_t c = 0; c < grads.at(table).cols(); ++c) EXPECT_EQ(grads.at(table).at(kPad, c), 0.0);
}

TEST(Loss, BatchGradientMatchesFiniteDifferences) {
  const ModelConfig config = testing::tiny_config();
  ParameterSet params = init_parameters(config, 14, 0.5);
  const auto pairs = tiny_pairs();
  const std::vector<std::size_t> ids{0, 1, 2};
  const Batch batch = make_batch(pairs, ids);
  ParameterSet grads = zeros_like(params);
  batch_loss(config, params, batch, &grads);
  const auto report = check_gradients(params, grads, [&](const ParameterSet& p) {
    return nll_loss(config, p, batch);
  });
  EXPECT_LT(report.max_relative_error, 1e-4) << report.parameter << "[" << report.index << "]";
}

ModelCheckpoint sample_checkpoint() {
  ModelCheckpoint c;
  c.metadata = {{"epoch", "3"}, {"note", "a=b"}};
  c.tensors.emplace("w", Tensor({2, 3}, {1, -2.5, 3e-300, 4, 5, 6}));
  c.tensors.emplace("v", Tensor({1}, {std::nextafter(1.0, 2.0)}));
  return c;
}

TEST(Checkpoint, RoundTripIsBitExact) {
  std::stringstream s;
  write_checkpoint(s, sample_checkpoint());
  EXPECT_EQ(read_checkpoint(s), sample_checkpoint());
}

TEST(Checkpoint, RejectsCorruptInput) {
  std::stringstream s;
  write_checkpoint(s, sample_checkpoint());
  const std::string bytes = s.str();

  std::istringstream empty("");
  EXPECT_THROW(read_checkpoint(empty), LoadError);

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream m(bad_magic);
  EXPECT_THROW(read_checkpoint(m), LoadError);

  std::string bad_version = bytes;
  bad_version[8] = 7;
  std::istringstream v(bad_version);
  EXPECT_THROW(read_checkpoint(v), LoadError);

  for (std::size_t cut : {std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream t(bytes.substr(0, cut));
    EXPECT_THROW(read_checkpoint(t), LoadError) << "cut at " << cut;
  }
}

TEST(Checkpoint, SavesAtomicallyAndLoads) {
  const auto dir = std::filesystem::temp_directory_path() / "distract_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "m.ckpt").string();
  save_checkpoint(sample_checkpoint(), path);
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  EXPECT_EQ(load_checkpoint(path), sample_checkpoint());
  EXPECT_THROW(load_checkpoint((dir / "missing.ckpt").string()), LoadError);
  std::filesystem::remove_all(dir);
}

TEST(Checkpoint, ModelConfigRoundTrip) {
  ModelConfig c = testing::tiny_config();
  c.two_level = false;
  std::map<std::string, std::string> meta;
  store_model_config(c, meta);
  EXPECT_EQ(model_config_from(meta), c);
  meta.erase("hidden_dim");
  EXPECT_THROW(model_config_from(meta), LoadError);
}

std::vector<DocumentPair> toy_corpus() {
  std::vector<DocumentPair> pairs;
  const std::vector<std::string> words{"a", "b", "c", "d", "e"};
  for (int i = 0; i < 12; ++i) {
    DocumentPair p;
    p.sentences.push_back({words[i % 5], words[(i + 1) % 5], words[(i + 2) % 5]});
    p.sentences.push_back({words[(i + 3) % 5]});
    p.summary = {words[i % 5], words[(i + 1) % 5]};
    pairs.push_back(p);
  }
  return pairs;
}

TrainingConfig toy_training() {
  TrainingConfig c;
  c.model = testing::tiny_config();
  c.model.vocab_size = 100;
  c.batch_size = 4;
  c.max_epochs = 3;
  c.seed = 77;
  c.init_scale = 0.1;
  return c;
}

TEST(Trainer, SameSeedGivesIdenticalLogAndParameters) {
  const auto corpus = toy_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus, 100);
  std::ostringstream log_a, log_b, log_c;
  const TrainingRun a = train(corpus, vocab, toy_training(), nullptr, &log_a);
  const TrainingRun b = train(corpus, vocab, toy_training(), nullptr, &log_b);
  TrainingConfig other = toy_training();
  other.seed = 78;
  const TrainingRun c = train(corpus, vocab, other, nullptr, &log_c);
  EXPECT_EQ(log_a.str(), log_b.str());
  EXPECT_EQ(a.best, b.best);
  EXPECT_NE(log_a.str(), log_c.str());
  EXPECT_EQ(a.updates, 9u);
  EXPECT_NE(log_a.str().find("epoch=1 batch=1 update=1 loss="), std::string::npos);
  EXPECT_NE(log_a.str().find("valid_loss="), std::string::npos);
}

TEST(Trainer, LossFallsOnToyCorpus) {
  const auto corpus = toy_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus, 100);
  TrainingConfig config = toy_training();
  config.max_epochs = 15;
  const TrainingRun run = train(corpus, vocab, config);
  double first = 0.0, last = 0.0;
  for (std::size_t i = 0; i < 3; ++i) {
    first += run.batch_losses[i];
    last += run.batch_losses[run.batch_losses.size() - 1 - i];
  }
  EXPECT_LT(last, first);
  EXPECT_EQ(run.best.metadata.at("vocab_fingerprint"), hex64(vocab.fingerprint()));
  EXPECT_EQ(model_config_from(run.best.metadata).vocab_size, vocab.size());
}

TEST(Trainer, MaxUpdatesStopsEarly) {
  const auto corpus = toy_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus, 100);
  TrainingConfig config = toy_training();
  config.max_updates = 4;
  EXPECT_EQ(train(corpus, vocab, config).updates, 4u);
}

TEST(Trainer, RejectsOversizedVocabularyAndEmptyCorpus) {
  const auto corpus = toy_corpus();
  const Vocabulary vocab = Vocabulary::build(corpus, 100);
  TrainingConfig config = toy_training();
  config.model.vocab_size = 6;
  EXPECT_THROW(train(corpus, vocab, config), UsageError);
  EXPECT_THROW(train({}, vocab, toy_training()), UsageError);
  config = toy_training();
  config.doc_length_cap = 2;
  EXPECT_THROW(train(corpus, vocab, config), UsageError);
}

}  // namespace
}  // namespace distract
