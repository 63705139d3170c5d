#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include "dann/pipeline.hpp"

namespace dann::pipeline {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int exit_code;
  std::string out;
};

CliResult run(const std::string& args) {
  const std::string cmd = std::string(DANN_CLI_PATH) + " " + args + " 2>&1";
  CliResult r{-1, ""};
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) r.out.append(buf, n);
  const int status = pclose(p);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("dann_pipeline_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Three sentences; the pun words have 4, 2 and 1 candidate senses.
fs::path three_sentence_fixture(const std::string& name) {
  const fs::path d = fresh_dir(name);
  spit(d / "corpus.xml", R"(<?xml version="1.0"?>
<corpus>
  <text id="hom_1"><word id="hom_1_1">I</word><word id="hom_1_2">lose</word><word id="hom_1_3">interest</word></text>
  <text id="hom_2"><word id="hom_2_1">river</word><word id="hom_2_2">bank</word></text>
  <text id="hom_3"><word id="hom_3_1">a</word><word id="hom_3_2">good</word><word id="hom_3_3">read</word></text>
</corpus>
)");
  spit(d / "gold_location.txt", "hom_1\thom_1_3\nhom_2\thom_2_2\nhom_3\thom_3_3\n");
  spit(d / "gold_senses.txt", "hom_1_3 interest%1:09:00:: interest%1:21:00::\nhom_2_2 bank%1:14:00::;bank%1:17:01::\n");
  spit(d / "cmudict.txt", ";;; tiny\nREAD  R EH1 D\nREAD(1)  R IY1 D\nBANK  B AE1 NG K\nRIVER  R IH1 V ER0\n");
  spit(d / "senses.tsv",
       "interest\tinterest%1:09:00::\ta sense of concern with and curiosity about someone or something\n"
       "interest\tinterest%1:07:01::\ta reason for wanting something done\n"
       "interest\tinterest%2:37:00::\texcite the curiosity of; engage the interest of\n"
       "interest\tinterest%1:21:00::\ta fixed charge for borrowing money\n"
       "bank\tbank%1:14:00::\ta financial institution\n"
       "bank\tbank%1:17:01::\tsloping land beside a body of water\n"
       "read\tread%2:31:00::\tinterpret something that is written or printed\n");
  nlohmann::json cfg{{"xml", (d / "corpus.xml").string()},
                     {"gold_location", (d / "gold_location.txt").string()},
                     {"gold_senses", (d / "gold_senses.txt").string()},
                     {"cmudict", (d / "cmudict.txt").string()},
                     {"sense_tsv", (d / "senses.tsv").string()},
                     {"work_dir", (d / "work").string()},
                     {"d_model", 8},
                     {"d_p", 4},
                     {"d_A", 4},
                     {"epochs", 2},
                     {"k_folds", 3},
                     {"seed", 11}};
  spit(d / "config.json", cfg.dump(2));
  return d;
}

TEST(Config, RoundTripAndValidation) {
  RunConfig c;
  c.seed = 5;
  c.sweep_ds = {1, 3};
  c.interp_lr = 0.02;
  const RunConfig back = config_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_THROW(config_from_json({{"bogus", 1}}), ConfigError);
  RunConfig no_seed;
  EXPECT_THROW(no_seed.validate(), ConfigError);
  RunConfig bad_task = c;
  bad_task.task = "tag";
  EXPECT_THROW(bad_task.validate(), ConfigError);
}

TEST(Cli, PrepareCountsThreeSentenceFixture) {
  const fs::path d = three_sentence_fixture("prepare");
  const CliResult r = run("prepare --config " + (d / "config.json").string());
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_NE(r.out.find("instances: 3"), std::string::npos) << r.out;
  const auto summary = nlohmann::json::parse(slurp(d / "work" / "prepare_summary.json"));
  EXPECT_EQ(summary["instances"], 3);
  // Pairs exist for the two instances with gold senses: 4 + 2 candidates.
  EXPECT_EQ(summary["pairs"], 6);
  std::ifstream pairs(d / "work" / "pairs.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(pairs, line);) ++lines;
  EXPECT_EQ(lines, 6u);
}

TEST(Cli, ParseErrorsNameFileAndLine) {
  const fs::path d = three_sentence_fixture("parse_error");
  spit(d / "senses.tsv", "bank\tbank%1\n");
  const CliResult r = run("prepare --config " + (d / "config.json").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("senses.tsv"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find(":1"), std::string::npos) << r.out;
}

TEST(Cli, TrainWithoutPrepareNamesPrepare) {
  const fs::path d = three_sentence_fixture("no_prepare");
  const CliResult r = run("train --config " + (d / "config.json").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("prepare"), std::string::npos) << r.out;
}

TEST(Cli, MissingSeedAndUnknownKeyAreErrors) {
  const fs::path d = three_sentence_fixture("config_errors");
  auto cfg = nlohmann::json::parse(slurp(d / "config.json"));
  cfg.erase("seed");
  spit(d / "no_seed.json", cfg.dump());
  EXPECT_EQ(run("prepare --config " + (d / "no_seed.json").string()).exit_code, 1);
  EXPECT_EQ(run("prepare --config " + (d / "no_seed.json").string() + " --seed 3").exit_code, 0);
  cfg["seed"] = 1;
  cfg["learning_rate"] = 0.1;
  spit(d / "unknown.json", cfg.dump());
  EXPECT_EQ(run("prepare --config " + (d / "unknown.json").string()).exit_code, 1);
}

TEST(Cli, GradcheckCoversBothModelsAndCatchesCorruption) {
  CliResult ok = run("gradcheck --seed 7");
  EXPECT_EQ(ok.exit_code, 0) << ok.out;
  EXPECT_NE(ok.out.find("locator"), std::string::npos);
  EXPECT_NE(ok.out.find("interpreter"), std::string::npos);
  CliResult bad = run("gradcheck --seed 7 --corrupt-backward");
  EXPECT_EQ(bad.exit_code, 2) << bad.out;
}

TEST(Cli, LocateTrainEvalIsDeterministic) {
  const fs::path d = three_sentence_fixture("locate");
  const std::string cfg = " --config " + (d / "config.json").string();
  ASSERT_EQ(run("prepare" + cfg).exit_code, 0);
  const CliResult first = run("train" + cfg);
  ASSERT_EQ(first.exit_code, 0) << first.out;
  const std::string report = slurp(d / "work" / "report_locate.json");
  const std::string ckpt = slurp(d / "work" / "locate_fold0.ckpt");
  ASSERT_EQ(run("train" + cfg).exit_code, 0);
  EXPECT_EQ(slurp(d / "work" / "report_locate.json"), report);
  EXPECT_EQ(slurp(d / "work" / "locate_fold0.ckpt"), ckpt);

  const auto j = nlohmann::json::parse(report);
  EXPECT_EQ(j["task"], "locate");
  EXPECT_EQ(j["per_fold"].size(), 3u);
  for (const char* k : {"p", "r", "f1"}) {
    EXPECT_GE(j["mean"][k].get<double>(), 0.0);
    EXPECT_LE(j["mean"][k].get<double>(), 1.0);
  }
  std::ifstream log(d / "work" / "train_log_locate.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(log, line); ++lines) {
    const auto entry = nlohmann::json::parse(line);
    EXPECT_TRUE(entry.contains("epoch") && entry.contains("loss") && entry.contains("fold"));
  }
  EXPECT_EQ(lines, 6u);  // 3 folds x 2 epochs

  const CliResult eval = run("eval" + cfg);
  ASSERT_EQ(eval.exit_code, 0) << eval.out;
  EXPECT_EQ(nlohmann::json::parse(slurp(d / "work" / "eval_locate.json"))["mean"], j["mean"]);
}

TEST(Cli, AblationWritesSeparateReport) {
  const fs::path d = three_sentence_fixture("ablate");
  const std::string cfg = " --config " + (d / "config.json").string();
  ASSERT_EQ(run("prepare" + cfg).exit_code, 0);
  ASSERT_EQ(run("train --ablate sense --epochs 1" + cfg).exit_code, 0);
  EXPECT_TRUE(fs::exists(d / "work" / "report_locate_no_sense.json"));
  EXPECT_EQ(run("train --ablate nothing" + cfg).exit_code != 0, true);
}

TEST(Cli, InterpretMfsNeedsNoTraining) {
  const fs::path d = three_sentence_fixture("mfs");
  const std::string cfg = " --config " + (d / "config.json").string();
  ASSERT_EQ(run("prepare" + cfg).exit_code, 0);
  const CliResult r = run("train --task interpret --mfs --k-folds 2" + cfg);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_TRUE(fs::exists(d / "work" / "report_interpret_mfs.json"));
  for (const auto& entry : fs::directory_iterator(d / "work")) EXPECT_NE(entry.path().extension(), ".ckpt");
  const auto j = nlohmann::json::parse(slurp(d / "work" / "report_interpret_mfs.json"));
  EXPECT_EQ(j["task"], "interpret-mfs");
}

TEST(Cli, InterpretTrainsAndWritesPredictions) {
  const fs::path d = three_sentence_fixture("interpret");
  const std::string cfg = " --config " + (d / "config.json").string();
  ASSERT_EQ(run("prepare" + cfg).exit_code, 0);
  const CliResult r = run("train --task interpret --k-folds 2" + cfg);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  EXPECT_TRUE(fs::exists(d / "work" / "interpret_fold0.ckpt"));
  EXPECT_TRUE(fs::exists(d / "work" / "predictions_fold0.txt"));
  EXPECT_TRUE(fs::exists(d / "work" / "report_interpret.json"));
}

TEST(Cli, SweepWritesCsvRows) {
  const fs::path d = three_sentence_fixture("sweep");
  auto cfg = nlohmann::json::parse(slurp(d / "config.json"));
  cfg["sweep_ds"] = {1, 4, 9};
  cfg["epochs"] = 1;
  spit(d / "config.json", cfg.dump());
  const std::string flag = " --config " + (d / "config.json").string();
  ASSERT_EQ(run("prepare" + flag).exit_code, 0);
  const CliResult r = run("sweep" + flag);
  ASSERT_EQ(r.exit_code, 0) << r.out;
  std::istringstream csv(slurp(d / "work" / "sweep.csv"));
  std::vector<std::string> lines;
  for (std::string line; std::getline(csv, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "d_s,f1");
  // The fixture's largest inventory is 4 senses, so d_s = 9 pads inertly.
  EXPECT_EQ(lines[2].substr(lines[2].find(',')), lines[3].substr(lines[3].find(',')));
}

TEST(Cli, PredictReadsStdinLines) {
  const fs::path d = three_sentence_fixture("predict");
  const std::string cfg = " --config " + (d / "config.json").string();
  ASSERT_EQ(run("prepare" + cfg).exit_code, 0);
  ASSERT_EQ(run("train" + cfg).exit_code, 0);
  spit(d / "input.txt", "river bank\n\ni lose interest\n");
  const std::string cmd = std::string(DANN_CLI_PATH) + " predict" + cfg + " --checkpoint " +
                          (d / "work" / "locate_fold0.ckpt").string() + " < " + (d / "input.txt").string() +
                          " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  ASSERT_NE(p, nullptr);
  std::string out;
  char buf[1024];
  while (std::size_t n = fread(buf, 1, sizeof buf, p)) out.append(buf, n);
  EXPECT_EQ(WEXITSTATUS(pclose(p)), 0);
  std::istringstream lines(out);
  std::vector<std::string> got;
  for (std::string line; std::getline(lines, line);) got.push_back(line);
  ASSERT_EQ(got.size(), 3u) << out;
  EXPECT_EQ(got[1], "-1\t");
  for (std::size_t i : {0u, 2u}) {
    const auto tab = got[i].find('\t');
    ASSERT_NE(tab, std::string::npos);
    const std::size_t idx = std::stoul(got[i].substr(0, tab));
    const std::vector<std::string> words = i == 0 ? std::vector<std::string>{"river", "bank"}
                                                  : std::vector<std::string>{"i", "lose", "interest"};
    ASSERT_LT(idx, words.size());
    EXPECT_EQ(got[i].substr(tab + 1), words[idx]);
  }
}

}  // namespace
}  // namespace dann::pipeline
