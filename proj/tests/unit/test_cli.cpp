// Copyright 2026 The icnn-metric Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "commands.hpp"

namespace icnn::cli {
namespace {

namespace fs = std::filesystem;

const std::string kFixtures = ICNNMETRIC_FIXTURE_DIR;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("icnnmetric_cli_" + std::string(info->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::vector<std::string> tiny_run(const std::string& sub, const fs::path& out) const {
    return {sub,
            "--out", out.string(),
            "--dataset.classes", "6",
            "--dataset.per_class", "12",
            "--dataset.dim", "6",
            "--dataset.split_train", "3",
            "--dataset.split_test", "3",
            "--episode.ways", "3",
            "--episode.shots", "2",
            "--episode.queries", "3",
            "--train.epochs", "2",
            "--train.tasks_per_epoch", "4",
            "--train.eval_tasks", "6",
            "--train.hidden", "8",
            "--train.embed_dim", "4",
            "--output.embedding_points", "20"};
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrorsExitTwo) {
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({"--help"}).code, 0);
  const Outcome v = invoke({"--version"});
  EXPECT_EQ(v.code, 0);
  EXPECT_NE(v.out.find(kToolVersion), std::string::npos);
}

TEST_F(CliTest, MissingConfigNamesPath) {
  const Outcome o = invoke({"train", "--config", "/nonexistent/cfg.ini"});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("/nonexistent/cfg.ini"), std::string::npos);
}

TEST_F(CliTest, ConfigErrorCitesLine) {
  const fs::path cfg = dir_ / "bad.ini";
  std::ofstream(cfg) << "[train]\nepochs = 2\nwat = 1\n";
  const Outcome o = invoke({"train", "--config", cfg.string()});
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.err.find("bad.ini:3"), std::string::npos);
  EXPECT_EQ(invoke({"train", "--train.epochs", "lots"}).code, 2);
}

TEST_F(CliTest, MissingDatasetExitsThree) {
  const Outcome o = invoke({"train", "--out", (dir_ / "r").string(), "--dataset.kind", "csv",
                            "--dataset.path", "/nonexistent/data.csv"});
  EXPECT_EQ(o.code, 3);
  EXPECT_NE(o.err.find("/nonexistent/data.csv"), std::string::npos);
}

TEST_F(CliTest, TrainWritesFourFilesAndIsDeterministic) {
  auto a = tiny_run("train", dir_ / "a");
  auto b = tiny_run("train", dir_ / "b");
  for (auto* args : {&a, &b}) {
    args->push_back("--seed");
    args->push_back("7");
    const Outcome o = invoke(*args);
    ASSERT_EQ(o.code, 0) << o.err;
    EXPECT_NE(o.out.find("test accuracy"), std::string::npos);
  }
  for (const char* f : {"manifest.json", "metrics.jsonl", "checkpoint.txt", "embeddings.csv"}) {
    ASSERT_TRUE(fs::exists(dir_ / "a" / f)) << f;
  }
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir_ / "a")) ++files;
  EXPECT_EQ(files, 4u);
  for (const char* f : {"metrics.jsonl", "checkpoint.txt", "embeddings.csv"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  const auto manifest = nlohmann::json::parse(slurp(dir_ / "a" / "manifest.json"));
  EXPECT_EQ(manifest["seed"], 7);
  EXPECT_EQ(manifest["config"]["train.seed"], "7");
  EXPECT_EQ(manifest["config"]["train.epochs"], "2");
  EXPECT_EQ(manifest["version"], kToolVersion);
  EXPECT_TRUE(manifest["dataset"]["digest"].is_string());
}

TEST_F(CliTest, ScoreFixturePrintsTwo) {
  const Outcome o = invoke({"score", kFixtures + "/four_points.csv"});
  ASSERT_EQ(o.code, 0) << o.err;
  const auto doc = nlohmann::json::parse(o.out);
  EXPECT_NEAR(doc["score"].get<double>(), 2.0, 1e-12);
  EXPECT_NEAR(doc["loss"].get<double>(), -std::log(2.0), 1e-12);
  ASSERT_EQ(doc["points"].size(), 4u);
  for (const auto& p : doc["points"]) {
    EXPECT_DOUBLE_EQ(p["lambda"].get<double>(), 2.0);
    EXPECT_DOUBLE_EQ(p["omega"].get<double>(), 2.0);
    EXPECT_DOUBLE_EQ(p["gamma"].get<double>(), 0.5);
  }
  EXPECT_EQ(doc["points"][2]["label"], "B");
}

TEST_F(CliTest, ScoreSingleClassExitsThree) {
  const Outcome o = invoke({"score", kFixtures + "/single_class.csv"});
  EXPECT_EQ(o.code, 3);
  EXPECT_FALSE(o.err.empty());
}

TEST_F(CliTest, ScoreIsScaleInvariantInLambdaAndGamma) {
  const fs::path orig = dir_ / "orig.csv";
  const fs::path scaled = dir_ / "scaled.csv";
  {
    std::ofstream a(orig), b(scaled);
    a << "id,label,f0,f1\n";
    b << "id,label,f0,f1\n";
    const double pts[][2] = {{0.3, 1.2}, {0.9, -0.4}, {2.5, 2.0}, {3.1, 1.1},
                             {-1.0, 4.0}, {-0.2, 3.3}, {0.7, 0.1}};
    const char* labels = "AABBCCA";
    for (int i = 0; i < 7; ++i) {
      a << "p" << i << ',' << labels[i] << ',' << pts[i][0] << ',' << pts[i][1] << '\n';
      b << "p" << i << ',' << labels[i] << ',' << pts[i][0] * 10 << ',' << pts[i][1] * 10 << '\n';
    }
  }
  const Outcome x = invoke({"score", orig.string(), "--k", "2"});
  const Outcome y = invoke({"score", scaled.string(), "--k", "2"});
  ASSERT_EQ(x.code, 0) << x.err;
  ASSERT_EQ(y.code, 0) << y.err;
  const auto dx = nlohmann::json::parse(x.out);
  const auto dy = nlohmann::json::parse(y.out);
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_NEAR(dx["points"][i]["lambda"].get<double>(), dy["points"][i]["lambda"].get<double>(),
                1e-12);
    EXPECT_EQ(dx["points"][i]["gamma"], dy["points"][i]["gamma"]);
  }
}

TEST_F(CliTest, ScoreRejectsBadFlags) {
  EXPECT_EQ(invoke({"score", kFixtures + "/four_points.csv", "--k", "0"}).code, 2);
  EXPECT_EQ(invoke({"score", kFixtures + "/four_points.csv", "--lambda", "x"}).code, 2);
  EXPECT_EQ(invoke({"score", kFixtures + "/four_points.csv", "--epsilon", "0.1"}).code, 2);
  EXPECT_EQ(invoke({"score", "/nonexistent/x.csv"}).code, 3);
}

TEST_F(CliTest, CheckFilterRunsOnlyMatching) {
  const Outcome o = invoke({"check", "--filter", "prop1"});
  EXPECT_EQ(o.code, 0) << o.out;
  EXPECT_NE(o.out.find("prop1"), std::string::npos);
  EXPECT_EQ(o.out.find("prop2"), std::string::npos);
  EXPECT_NE(o.out.find("1/1 checks passed"), std::string::npos);
  EXPECT_EQ(invoke({"check", "--filter", "no_such_check"}).code, 2);
}

TEST_F(CliTest, InjectedSignErrorFailsNamingTheOp) {
  const Outcome o = invoke({"check", "--filter", "grad_", "--seeds", "5",
                            "--inject-sign-error", "grad_proto_triplet_k"});
  EXPECT_EQ(o.code, 1);
  std::istringstream lines(o.out);
  int failing = 0;
  for (std::string line; std::getline(lines, line);) {
    if (line.find("FAIL") == std::string::npos) continue;
    ++failing;
    EXPECT_EQ(line.rfind("grad_proto_triplet_k ", 0), 0u) << line;
    EXPECT_NE(line.find("proto_triplet_k"), std::string::npos);
  }
  EXPECT_EQ(failing, 1);
}

TEST_F(CliTest, AblateWritesTwelveRows) {
  const Outcome o = invoke(tiny_run("ablate", dir_ / "abl"));
  ASSERT_EQ(o.code, 0) << o.err;
  std::istringstream csv(slurp(dir_ / "abl" / "ablation.csv"));
  int rows = -1;
  for (std::string line; std::getline(csv, line);) ++rows;
  EXPECT_EQ(rows, 12);
  EXPECT_TRUE(fs::exists(dir_ / "abl" / "manifest.json"));
}

}  // namespace
}  // namespace icnn::cli
