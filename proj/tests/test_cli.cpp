#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "anomnet/commands.hpp"
#include "anomnet/errors.hpp"
#include "anomnet/eval.hpp"

namespace anomnet {
namespace {

namespace fs = std::filesystem;

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("anomnet_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "anomnet");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Result r;
    r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) {
    std::ofstream(dir_ / name) << text;
    return path(name);
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // A quick config: small GA so compare finishes in well under a second.
  std::string fast_config() {
    return write("fast.ini", "[ga]\ncycles = 2\npopulation = 3\n[mlp]\nmax_epochs = 30\n");
  }

  fs::path dir_;
};

TEST_F(Cli, SynthWritesDefaultDataset) {
  const auto r = run({"--out", path("o"), "synth"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("n=195 d=2"), std::string::npos);
  const Dataset ds = load_csv(path("o/synthetic.csv"));
  EXPECT_EQ(ds.size(), 195u);
  const std::string first = slurp(path("o/synthetic.csv"));
  ASSERT_EQ(run({"--out", path("o"), "synth"}).code, 0);
  EXPECT_EQ(first, slurp(path("o/synthetic.csv")));
}

TEST_F(Cli, SynthSingleRow) {
  const std::string cfg = write("one.ini", "[synth]\nblobs = 1 1 0 0 1\nscatter = 0\n");
  ASSERT_EQ(run({"--config", cfg, "--quiet", "synth", path("one.csv")}).code, 0);
  EXPECT_EQ(load_csv(path("one.csv")).size(), 1u);
}

TEST_F(Cli, UnwritablePathFailsWithStage) {
  write("blocker", "x");
  const auto r = run({"--quiet", "synth", path("blocker/sub/out.csv")});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("error [write]"), std::string::npos) << r.err;
}

TEST_F(Cli, LabelUnsupervisedGivesOneReport) {
  ASSERT_EQ(run({"--quiet", "--out", path("o"), "synth"}).code, 0);
  const auto r = run({"--out", path("o"), "label", path("o/synthetic.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const Dataset labeled = load_csv(path("o/labeled.csv"));
  EXPECT_TRUE(labeled.has_labels());
  EXPECT_EQ(labeled.size(), 195u);
  std::ifstream report(path("o/report.csv"));
  std::string header, row, extra;
  std::getline(report, header);
  std::getline(report, row);
  EXPECT_FALSE(std::getline(report, extra));
  EXPECT_EQ(row.rfind("dataset,195,5,", 0), 0u) << row;
  EXPECT_TRUE(fs::exists(path("o/normalization.txt")));
}

TEST_F(Cli, LabelRefusesAlreadyLabeledFile) {
  const std::string csv = write("done.csv", "x,y,label\n0,0,ND\n1,1,PA\n");
  const auto r = run({"--quiet", "--out", path("o"), "label", csv});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("--relabel"), std::string::npos) << r.err;
}

TEST_F(Cli, LabelSupervisedGivesOneReportPerClass) {
  std::ostringstream csv;
  csv << "a,b,class\n";
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 20; ++i) csv << (i * 7 % 13) * 0.1 + c << ',' << (i * 5 % 11) * 0.1 << ',' << c << '\n';
  const std::string input = write("classes.csv", csv.str());
  const std::string cfg = write("sup.ini", "[labeling]\nnum_clusters = 2\n");
  const auto r = run({"--quiet", "--config", cfg, "--out", path("o"), "label", input});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string report = slurp(path("o/report.csv"));
  for (const char* name : {"class 0,20,", "class 1,20,", "class 2,20,"}) {
    EXPECT_NE(report.find(name), std::string::npos) << report;
  }
}

TEST_F(Cli, TrainEvalAndRoc) {
  ASSERT_EQ(run({"--quiet", "--out", path("o"), "synth"}).code, 0);
  ASSERT_EQ(run({"--quiet", "--out", path("o"), "label", path("o/synthetic.csv")}).code, 0);
  const std::string cfg = fast_config();
  auto r = run({"--quiet", "--config", cfg, "--out", path("t"), "train", path("o/labeled.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("t/model.txt")));
  EXPECT_TRUE(fs::exists(path("t/history.csv")));

  r = run({"--out", path("e"), "eval", "--model", path("t/model.txt"), path("o/labeled.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out.find("nan"), std::string::npos);

  // Metrics recomputed from the emitted confusion CSV match the emitted metrics file.
  std::ifstream conf(path("e/confusion.csv"));
  const ConfusionMatrix m = read_confusion_csv(conf, 4);
  EXPECT_EQ(m.total(), 195);
  const std::string metrics = slurp(path("e/metrics.csv"));
  EXPECT_NE(metrics.find("test_error," + format_double(test_error(m))), std::string::npos) << metrics;
  const auto pr = precision_recall(m);
  if (pr[0].precision) {
    EXPECT_NE(metrics.find("ND," + format_double(*pr[0].precision)), std::string::npos);
  }

  r = run({"--quiet", "--out", path("r"), "roc", "--model", path("t/model.txt"), path("o/labeled.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(path("r/roc_ND.csv")));
  EXPECT_TRUE(fs::exists(path("r/roc_ND.svg")));
}

TEST_F(Cli, EvalRejectsWrongInputSize) {
  std::string weights;
  for (int i = 0; i < (3 + 1) * 2 + (2 + 1) * 4; ++i) weights += "0.5\n";
  const std::string model = write("model.txt", "topology 3 2 4\n" + weights);
  const std::string csv = write("l.csv", "x,y,label\n0,0,ND\n1,1,PA\n");
  const auto r = run({"--quiet", "--out", path("e"), "eval", "--model", model, csv});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find('3'), std::string::npos) << r.err;
  EXPECT_NE(r.err.find('2'), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("error [eval]"), std::string::npos) << r.err;
}

TEST_F(Cli, CompareWritesReportTree) {
  ASSERT_EQ(run({"--quiet", "--out", path("o"), "synth"}).code, 0);
  ASSERT_EQ(run({"--quiet", "--out", path("o"), "label", path("o/synthetic.csv")}).code, 0);
  const auto r = run({"--config", fast_config(), "--out", path("c"), "compare", path("o/labeled.csv")});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string summary = slurp(path("c/summary.txt"));
  EXPECT_EQ(summary.rfind("NN test error ", 0), 0u) << summary;
  EXPECT_NE(summary.find(", GA test error "), std::string::npos);
  for (const char* f : {"nn_confusion.txt", "ga_confusion.csv", "nn_metrics.csv", "tpr_fpr.csv", "ga_cycles.csv",
                        "comparison.csv", "config_used.ini", "roc_ND.svg", "nn_roc_ND.csv", "ga_roc_ND.csv"}) {
    EXPECT_TRUE(fs::exists(path("c/") + f)) << f;
  }
}

TEST_F(Cli, CompareWithEmptyTestSplitFails) {
  const std::string csv = write("l.csv", "x,label\n0,ND\n1,ND\n2,PA\n3,PA\n");
  const std::string cfg = write("split.ini", "[split]\ntrain = 0.85\nvalidation = 0.15\ntest = 0\n");
  const auto r = run({"--quiet", "--config", cfg, "--out", path("c"), "compare", csv});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("empty test split"), std::string::npos) << r.err;
}

TEST_F(Cli, BadArgumentsExitNonzero) {
  EXPECT_NE(run({}).code, 0);
  EXPECT_NE(run({"bogus"}).code, 0);
  EXPECT_NE(run({"--config", path("missing.ini"), "synth"}).code, 0);
  const auto r = run({"--quiet", "train", path("missing.csv")});
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("error [load]"), std::string::npos) << r.err;
}

}  // namespace
}  // namespace anomnet
