#pragma once

#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "distract/core/error.hpp"
#include "distract/search/beam_search.hpp"
#include "distract/train/trainer.hpp"

namespace distract::cli {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every tunable, with the CNN profile as default.
inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"batch_size", "64", "examples per mini-batch"},
      {"vocab_size", "25000", "vocabulary size limit K"},
      {"embed_dim", "120", "embedding width m"},
      {"hidden_dim", "600", "GRU hidden width n"},
      {"attention_dim", "600", "attention hidden width l"},
      {"bidirectional", "true", "bi-GRU encoder (false: uni-GRU)"},
      {"two_level", "true", "two-level decoder hidden output"},
      {"distract_content", "true", "content-vector history distraction"},
      {"distract_attention", "true", "attention-weight history distraction"},
      {"rho", "0.95", "Adadelta decay"},
      {"epsilon", "1e-06", "Adadelta epsilon"},
      {"max_epochs", "10", "training epochs"},
      {"max_updates", "0", "stop after this many updates (0: no limit)"},
      {"valid_every", "1", "epochs between validation passes"},
      {"seed", "1234", "random seed"},
      {"doc_length_cap", "2500", "drop longer training/validation documents"},
      {"char_mode", "false", "split tokens into characters"},
      {"clip_norm", "5", "global gradient-norm clip (0: off)"},
      {"init_scale", "0.08", "uniform initialization half-width"},
      {"bucket_batches", "20", "batches per length-sorting bucket"},
      {"log_timing", "false", "append tokens_per_sec to training log lines"},
      {"beam_size", "5", "beam size B"},
      {"max_len", "100", "maximum summary length N"},
      {"lambda1", "0.5", "weight on attention-distribution distraction"},
      {"lambda2", "-0.5", "weight on content-vector similarity"},
      {"lambda3", "-0.5", "weight on decoder-state similarity"},
      {"length_normalize", "false", "rank final hypotheses by score / length"},
      {"jobs", "1", "documents decoded in parallel"},
  };
  return keys;
}

/// Resolved key=value configuration: defaults, then a preset, then a config
/// file, then command-line flags, each overriding the last.
class RunConfig {
 public:
  RunConfig() {
    for (const auto& k : config_keys()) values_[k.name] = k.default_value;
  }

  static bool is_key(const std::string& key) {
    for (const auto& k : config_keys())
      if (k.name == key) return true;
    return false;
  }

  /// `cnn` (the defaults) or `lcsts` (characters, K 4000, m = n = 500, batch 256).
  void apply_preset(const std::string& name) {
    if (name == "cnn") {
      assign({{"batch_size", "64"}, {"vocab_size", "25000"}, {"embed_dim", "120"},
              {"hidden_dim", "600"}, {"attention_dim", "600"}, {"doc_length_cap", "2500"},
              {"char_mode", "false"}, {"beam_size", "5"}});
    } else if (name == "lcsts") {
      assign({{"batch_size", "256"}, {"vocab_size", "4000"}, {"embed_dim", "500"},
              {"hidden_dim", "500"}, {"attention_dim", "500"}, {"char_mode", "true"},
              {"beam_size", "5"}});
    } else {
      throw UsageError("unknown preset '" + name + "' (expected cnn or lcsts)");
    }
    preset_ = name;
  }

  void set(const std::string& key, const std::string& value) {
    require(is_key(key), "unknown configuration key '" + key + "'");
    values_[key] = value;
    explicit_.insert(key);
  }

  /// key=value lines; blank lines and lines starting with '#' are ignored.
  void load(std::istream& in) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto eq = line.find('=');
      require(eq != std::string::npos, "config line " + std::to_string(n) + ": expected key=value");
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }

  const std::string& get(const std::string& key) const {
    auto it = values_.find(key);
    require(it != values_.end(), "unknown configuration key '" + key + "'");
    return it->second;
  }

  std::size_t count(const std::string& key) const {
    const std::string& v = get(key);
    try {
      std::size_t used = 0;
      const long long x = std::stoll(v, &used);
      if (used == v.size() && x >= 0) return static_cast<std::size_t>(x);
    } catch (const std::logic_error&) {
    }
    throw UsageError("configuration key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }

  double real(const std::string& key) const {
    const std::string& v = get(key);
    try {
      std::size_t used = 0;
      const double x = std::stod(v, &used);
      if (used == v.size() && std::isfinite(x)) return x;
    } catch (const std::logic_error&) {
    }
    throw UsageError("configuration key '" + key + "' expects a number, got '" + v + "'");
  }

  bool flag(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("configuration key '" + key + "' expects true or false, got '" + v + "'");
  }

  /// Sorted key=value lines, one per key.
  std::string dump() const {
    std::string out;
    for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
    return out;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  TrainingConfig training() const {
    TrainingConfig c;
    c.model.vocab_size = count("vocab_size");
    c.model.embed_dim = count("embed_dim");
    c.model.hidden_dim = count("hidden_dim");
    c.model.attention_dim = count("attention_dim");
    c.model.bidirectional = flag("bidirectional");
    // The CNN profile uses 500 hidden units for a uni-GRU encoder.
    if (!c.model.bidirectional && (preset_.empty() || preset_ == "cnn")) {
      if (!explicit_.contains("hidden_dim")) c.model.hidden_dim = 500;
      if (!explicit_.contains("attention_dim")) c.model.attention_dim = 500;
    }
    c.model.two_level = flag("two_level");
    c.model.distract_content = flag("distract_content");
    c.model.distract_attention = flag("distract_attention");
    c.batch_size = count("batch_size");
    c.rho = real("rho");
    c.epsilon = real("epsilon");
    c.max_epochs = count("max_epochs");
    c.max_updates = count("max_updates");
    c.valid_every = count("valid_every");
    c.seed = count("seed");
    c.doc_length_cap = count("doc_length_cap");
    c.char_mode = flag("char_mode");
    c.clip_norm = real("clip_norm");
    c.init_scale = real("init_scale");
    c.bucket_batches = count("bucket_batches");
    c.log_timing = flag("log_timing");
    require(c.batch_size > 0 && c.max_epochs > 0 && c.valid_every > 0,
            "batch_size, max_epochs and valid_every must be positive");
    require(c.model.vocab_size >= 5, "vocab_size must be at least 5");
    return c;
  }

  BeamConfig beam() const {
    BeamConfig b;
    b.beam_size = count("beam_size");
    b.max_length = count("max_len");
    b.weights = {real("lambda1"), real("lambda2"), real("lambda3")};
    b.length_normalize = flag("length_normalize");
    b.validate();
    return b;
  }

  std::size_t jobs() const { return std::max<std::size_t>(count("jobs"), 1); }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  void assign(std::initializer_list<std::pair<const char*, const char*>> kv) {
    for (const auto& [k, v] : kv) values_[k] = v;
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> explicit_;
  std::string preset_;
};

}  // namespace distract::cli
