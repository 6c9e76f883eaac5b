#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "distract/cli/commands.hpp"
#include "distract/cli/config.hpp"

#ifndef DISTRACT_CLI_PATH
#error "DISTRACT_CLI_PATH must name the built command-line binary"
#endif

namespace distract::cli {
namespace {

namespace fs = std::filesystem;

TEST(RunConfig, DefaultsArePresetCnn) {
  RunConfig a, b;
  b.apply_preset("cnn");
  EXPECT_EQ(a.values(), b.values());
  const TrainingConfig t = a.training();
  EXPECT_EQ(t.batch_size, 64u);
  EXPECT_EQ(t.model.embed_dim, 120u);
  EXPECT_EQ(t.model.hidden_dim, 600u);
  EXPECT_EQ(t.doc_length_cap, 2500u);
  EXPECT_DOUBLE_EQ(t.rho, 0.95);
  EXPECT_DOUBLE_EQ(t.epsilon, 1e-6);
  EXPECT_EQ(a.beam().beam_size, 5u);
}

TEST(RunConfig, LcstsPreset) {
  RunConfig c;
  c.apply_preset("lcsts");
  const TrainingConfig t = c.training();
  EXPECT_EQ(t.batch_size, 256u);
  EXPECT_EQ(t.model.vocab_size, 4000u);
  EXPECT_EQ(t.model.embed_dim, 500u);
  EXPECT_EQ(t.model.hidden_dim, 500u);
  EXPECT_TRUE(t.char_mode);
  EXPECT_THROW(c.apply_preset("other"), UsageError);
}

TEST(RunConfig, UniGruUsesSmallerHiddenUnlessSet) {
  RunConfig c;
  c.set("bidirectional", "false");
  EXPECT_EQ(c.training().model.hidden_dim, 500u);
  c.set("hidden_dim", "64");
  EXPECT_EQ(c.training().model.hidden_dim, 64u);
}

TEST(RunConfig, FileLoadingAndValidation) {
  RunConfig c;
  std::istringstream in("# comment\n\nbatch_size = 8\nlambda1=0.25\n");
  c.load(in);
  EXPECT_EQ(c.training().batch_size, 8u);
  EXPECT_DOUBLE_EQ(c.beam().weights.attention, 0.25);
  std::istringstream bad_key("nonsense=1\n");
  EXPECT_THROW(c.load(bad_key), UsageError);
  std::istringstream bad_line("batch_size\n");
  EXPECT_THROW(c.load(bad_line), UsageError);
  c.set("batch_size", "-3");
  EXPECT_THROW(c.training(), UsageError);
  c.set("batch_size", "4");
  c.set("bidirectional", "maybe");
  EXPECT_THROW(c.training(), UsageError);
  c.set("bidirectional", "true");
  c.set("beam_size", "0");
  EXPECT_THROW(c.beam(), UsageError);
}

TEST(Evaluate, ReportAndLengthMismatch) {
  const fs::path dir = fs::temp_directory_path() / "distract_eval_test";
  fs::create_directories(dir);
  {
    std::ofstream(dir / "sys.jsonl") << R"({"summary": ["the", "cat", "sat"]})" "\n" R"({"summary": []})" "\n";
    std::ofstream(dir / "ref.jsonl") << R"({"summary": ["the", "cat"]})" "\n" R"({"summary": ["x"]})" "\n";
    std::ofstream(dir / "one.jsonl") << R"({"summary": ["the"]})" "\n";
  }
  std::ostringstream report;
  const RougeScore s = cmd_evaluate({(dir / "sys.jsonl").string(), (dir / "ref.jsonl").string(), "", false}, report);
  EXPECT_NEAR(s.rouge1.f1, 0.4, 1e-12);
  EXPECT_NE(report.str().find("documents=2\n"), std::string::npos);
  EXPECT_NE(report.str().find("rouge1_f1=0.400000\n"), std::string::npos);
  std::ostringstream ignored;
  EXPECT_THROW(cmd_evaluate({(dir / "sys.jsonl").string(), (dir / "one.jsonl").string(), "", false}, ignored),
               UsageError);
  fs::remove_all(dir);
}

// ---------------------------------------------------------------- binary

int run(const std::string& args, std::string* output = nullptr) {
  const std::string out_file = (fs::temp_directory_path() / "distract_cli_out.txt").string();
  const std::string cmd = std::string(DISTRACT_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int status = std::system(cmd.c_str());
  if (output != nullptr) {
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    *output = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Binary : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() / ("distract_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    std::ofstream corpus(dir / "corpus.jsonl");
    const char* w[] = {"red", "blue", "green", "fox", "dog", "runs"};
    for (int i = 0; i < 8; ++i)
      corpus << R"({"sentences": [[")" << w[i % 6] << R"(", ")" << w[(i + 1) % 6] << R"("], [")" << w[(i + 2) % 6]
             << R"("]], "summary": [")" << w[i % 6] << R"("]})" << "\n";
  }
  void TearDown() override { fs::remove_all(dir); }

  std::string p(const char* name) const { return (dir / name).string(); }
  fs::path dir;
};

TEST_F(Binary, UsageErrorsExitTwo) {
  std::string out;
  EXPECT_EQ(run("", &out), 2);
  EXPECT_EQ(run("frobnicate", &out), 2);
  EXPECT_EQ(run("train --corpus x", &out), 2);
  EXPECT_EQ(run("build-vocab --corpus " + p("missing.jsonl") + " --out " + p("v.txt"), &out), 2);
  EXPECT_NE(out.find("missing.jsonl"), std::string::npos) << out;
}

TEST_F(Binary, EndToEndPipelineIsReproducible) {
  std::string out;
  ASSERT_EQ(run("build-vocab --corpus " + p("corpus.jsonl") + " --out " + p("vocab.txt") + " --size 50", &out), 0) << out;
  EXPECT_TRUE(fs::exists(p("vocab.txt.manifest")));

  const std::string small = " --embed-dim 4 --hidden-dim 5 --attention-dim 5 --batch-size 4 --max-epochs 2 --seed 5";
  for (const char* run_dir : {"run_a", "run_b"})
    ASSERT_EQ(run("train --corpus " + p("corpus.jsonl") + " --vocab " + p("vocab.txt") + " --out " + p(run_dir) + small, &out), 0) << out;
  EXPECT_EQ(slurp(dir / "run_a" / "train.log"), slurp(dir / "run_b" / "train.log"));
  EXPECT_EQ(slurp(dir / "run_a" / "model.ckpt"), slurp(dir / "run_b" / "model.ckpt"));
  const std::string manifest = slurp(dir / "run_a" / "manifest.txt");
  for (const char* key : {"command=train", "code_version=", "seed=5", "started_utc=", "wall_clock_seconds=", "config.hidden_dim=5"})
    EXPECT_NE(manifest.find(key), std::string::npos) << key;

  ASSERT_EQ(run("summarize --checkpoint " + p("run_a/model.ckpt") + " --vocab " + p("vocab.txt") + " --input " +
                    p("corpus.jsonl") + " --out " + p("sums.jsonl") + " --beam-size 2 --max-len 4",
                &out), 0) << out;
  ASSERT_EQ(run("summarize --checkpoint " + p("run_a/model.ckpt") + " --vocab " + p("vocab.txt") + " --input " +
                    p("corpus.jsonl") + " --out " + p("sums2.jsonl") + " --beam-size 2 --max-len 4 --jobs 3",
                &out), 0) << out;
  EXPECT_EQ(slurp(dir / "sums.jsonl"), slurp(dir / "sums2.jsonl"));

  ASSERT_EQ(run("evaluate --system " + p("sums.jsonl") + " --reference " + p("corpus.jsonl"), &out), 0) << out;
  EXPECT_NE(out.find("documents=8"), std::string::npos);
  EXPECT_NE(out.find("rougeL_f1="), std::string::npos);

  // A different vocabulary must be refused.
  std::ofstream(dir / "other_vocab.txt") << "<pad>\n<unk>\n</s>\n</d>\nzzz\n";
  EXPECT_EQ(run("summarize --checkpoint " + p("run_a/model.ckpt") + " --vocab " + p("other_vocab.txt") +
                    " --input " + p("corpus.jsonl") + " --out " + p("bad.jsonl"),
                &out), 2);
  // So must a corrupt checkpoint.
  std::ofstream(dir / "junk.ckpt") << "not a checkpoint";
  EXPECT_EQ(run("summarize --checkpoint " + p("junk.ckpt") + " --vocab " + p("vocab.txt") + " --input " +
                    p("corpus.jsonl") + " --out " + p("bad.jsonl"),
                &out), 2);
  EXPECT_NE(out.find("magic"), std::string::npos) << out;
}

TEST_F(Binary, BooleanFlagsAndConfigFile) {
  std::string out;
  ASSERT_EQ(run("build-vocab --corpus " + p("corpus.jsonl") + " --out " + p("vocab.txt"), &out), 0) << out;
  std::ofstream(dir / "cfg.txt") << "embed_dim=3\nhidden_dim=4\nattention_dim=4\nmax_epochs=1\nbatch_size=8\n";
  ASSERT_EQ(run("train --corpus " + p("corpus.jsonl") + " --vocab " + p("vocab.txt") + " --out " + p("r") +
                    " --config " + p("cfg.txt") + " --bidirectional=false --two-level=false",
                &out), 0) << out;
  const ModelCheckpoint ckpt = load_checkpoint(p("r/model.ckpt"));
  EXPECT_EQ(ckpt.metadata.at("bidirectional"), "false");
  EXPECT_EQ(ckpt.metadata.at("two_level"), "false");
  EXPECT_EQ(ckpt.metadata.at("hidden_dim"), "4");
  EXPECT_EQ(run("train --corpus " + p("corpus.jsonl") + " --vocab " + p("vocab.txt") + " --out " + p("r2") +
                    " --config " + p("cfg.txt") + " --beam-size abc",
                &out), 0) << "beam size is not read by train";
  EXPECT_EQ(run("train --corpus " + p("corpus.jsonl") + " --vocab " + p("vocab.txt") + " --out " + p("r3") +
                    " --config " + p("cfg.txt") + " --batch-size abc",
                &out), 2);
}

}  // namespace
}  // namespace distract::cli
