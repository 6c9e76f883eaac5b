#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/corpus/batching.hpp"
#include "distract/corpus/corpus.hpp"
#include "distract/corpus/vocabulary.hpp"
#include "distract/model/parameters.hpp"
#include "distract/train/adadelta.hpp"
#include "distract/train/checkpoint.hpp"
#include "distract/train/loss.hpp"

namespace distract {

/// Everything that shapes a training run. `model.vocab_size` is an upper
/// bound: the network is built with the vocabulary's actual size.
struct TrainingConfig {
  ModelConfig model{25000, 120, 600, 600};
  std::size_t batch_size = 64;
  double rho = 0.95;
  double epsilon = 1e-6;
  std::size_t max_epochs = 10;
  std::size_t max_updates = 0;  // 0: no limit
  std::size_t valid_every = 1;  // epochs between validation passes
  std::uint64_t seed = 1234;
  std::size_t doc_length_cap = 2500;
  bool char_mode = false;
  double clip_norm = 5.0;
  double init_scale = 0.08;
  std::size_t bucket_batches = 20;
  bool log_timing = false;  // wall-clock throughput in the log breaks byte-identical reruns
};

struct TrainingRun {
  ModelCheckpoint best;
  std::vector<double> batch_losses;  // per-token loss of every update, in order
  std::size_t updates = 0;
  std::size_t best_epoch = 0;
  double best_valid_loss = INFINITY;
};

inline std::string format_double(double x, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

inline std::string format_exact(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Average per-token NLL over `pairs` (no gradients).
inline double corpus_loss(const ModelConfig& config, const ParameterSet& params,
                          const std::vector<EncodedPair>& pairs) {
  double total = 0.0;
  std::size_t tokens = 0;
  for (const auto& p : pairs) {
    total += evaluate_nll(config, params, p.source, p.target);
    tokens += p.target.size();
  }
  return tokens == 0 ? 0.0 : total / static_cast<double>(tokens);
}

namespace detail {

inline std::vector<EncodedPair> prepare(const std::vector<DocumentPair>& pairs, const Vocabulary& vocab,
                                        const TrainingConfig& config) {
  std::vector<EncodedPair> out;
  for (const auto& raw : pairs) {
    const DocumentPair p = config.char_mode ? to_characters(raw) : raw;
    if (p.document_tokens() > config.doc_length_cap) continue;
    out.push_back(encode(p, vocab));
  }
  return out;
}

}  // namespace detail

/// Teacher-forced Adadelta training over shuffled, length-sorted batches.
///
/// Gradients are the per-token mean over a batch, clipped to `clip_norm`
/// in global L2 norm. After every `valid_every` epochs (and at the end) the
/// per-token validation NLL is measured on `validation`, or on the training
/// set when none is given; the best parameters are returned. With a fixed
/// seed the run, and every line written to `log`, is reproducible.
inline TrainingRun train(const std::vector<DocumentPair>& corpus, const Vocabulary& vocab,
                         const TrainingConfig& config,
                         const std::vector<DocumentPair>* validation = nullptr,
                         std::ostream* log = nullptr) {
  require(!corpus.empty(), "train: empty corpus");
  require(config.batch_size >= 1 && config.max_epochs >= 1 && config.valid_every >= 1,
          "train: batch_size, max_epochs and valid_every must be positive");
  require(vocab.size() <= config.model.vocab_size,
          "train: vocabulary has " + std::to_string(vocab.size()) +
              " entries but the configuration allows " + std::to_string(config.model.vocab_size));

  ModelConfig model = config.model;
  model.vocab_size = vocab.size();

  const std::vector<EncodedPair> train_set = detail::prepare(corpus, vocab, config);
  require(!train_set.empty(), "train: every document exceeds doc_length_cap");
  const std::vector<EncodedPair> valid_set =
      validation != nullptr ? detail::prepare(*validation, vocab, config) : train_set;

  ParameterSet params = init_parameters(model, config.seed, config.init_scale);
  AdadeltaState opt = make_adadelta(params, config.rho, config.epsilon);
  TrainingRun run;

  auto snapshot = [&](std::size_t epoch, double valid_loss) {
    ModelCheckpoint ckpt;
    store_model_config(model, ckpt.metadata);
    ckpt.metadata["vocab_fingerprint"] = hex64(vocab.fingerprint());
    ckpt.metadata["char_mode"] = config.char_mode ? "true" : "false";
    ckpt.metadata["epoch"] = std::to_string(epoch);
    ckpt.metadata["updates"] = std::to_string(run.updates);
    ckpt.metadata["seed"] = std::to_string(config.seed);
    ckpt.metadata["validation_loss"] = format_exact(valid_loss);
    ckpt.tensors = params;
    return ckpt;
  };

  bool done = false;
  for (std::size_t epoch = 1; epoch <= config.max_epochs && !done; ++epoch) {
    const auto batches = make_batches(train_set, config.batch_size, config.seed + epoch, config.bucket_batches);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto start = std::chrono::steady_clock::now();
      ParameterSet grads = zeros_like(params);
      const BatchLoss loss = batch_loss(model, params, batches[b], &grads);
      if (!std::isfinite(loss.total))
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b + 1));
      clip_global_norm(grads, config.clip_norm);
      adadelta_update(params, grads, opt);
      ++run.updates;
      run.batch_losses.push_back(loss.per_token());

      if (log != nullptr) {
        *log << "epoch=" << epoch << " batch=" << b + 1 << " update=" << run.updates
             << " loss=" << format_double(loss.per_token()) << " tokens=" << loss.tokens;
        if (config.log_timing) {
          const double secs =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
          *log << " tokens_per_sec=" << format_double(static_cast<double>(loss.tokens) / std::max(secs, 1e-9), 1);
        }
        *log << '\n';
      }
      if (config.max_updates > 0 && run.updates >= config.max_updates) {
        done = true;
        break;
      }
    }

    if (epoch % config.valid_every == 0 || epoch == config.max_epochs || done) {
      const double valid = corpus_loss(model, params, valid_set);
      if (!std::isfinite(valid)) throw NumericalError("non-finite validation loss at epoch " + std::to_string(epoch));
      const bool improved = valid < run.best_valid_loss;
      if (improved) {
        run.best_valid_loss = valid;
        run.best_epoch = epoch;
        run.best = snapshot(epoch, valid);
      }
      if (log != nullptr)
        *log << "epoch=" << epoch << " valid_loss=" << format_double(valid)
             << " best=" << (improved ? "true" : "false") << '\n';
    }
  }
  return run;
}

}  // namespace distract
