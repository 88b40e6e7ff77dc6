#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "hmaj/cli.hpp"
#include "hmaj/error.hpp"
#include "hmaj/serialize.hpp"

namespace hmaj {
namespace {

namespace fs = std::filesystem;
using io::Json;

std::string config_error(const Json& j) {
  try {
    io::simulate_config_from_json(j);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  ADD_FAILURE() << "accepted " << j.dump();
  return {};
}

Json valid_config() {
  return Json{{"schema_version", 1}, {"counts", {60, 40}}, {"h", 3}, {"max_rounds", 100}, {"seed", 5}};
}

TEST(SimulateConfig, Parses) {
  const auto c = io::simulate_config_from_json(valid_config());
  EXPECT_EQ(c.config0.counts, (std::vector<Count>{60, 40}));
  EXPECT_EQ(c.params.h, 3);
  EXPECT_EQ(c.params.seed, 5u);
  EXPECT_EQ(c.params.step_mode, StepMode::AgentLevel);
}

TEST(SimulateConfig, HRule) {
  auto j = valid_config();
  j.erase("h");
  j["h_rule_c"] = 1.0;
  EXPECT_EQ(io::simulate_config_from_json(j).params.h, static_cast<Count>(std::ceil(std::log(100.0) / 0.6)));
}

TEST(SimulateConfig, ErrorsNameTheField) {
  auto j = valid_config();
  j["max_rounds"] = "ten";
  EXPECT_NE(config_error(j).find("max_rounds"), std::string::npos);

  j = valid_config();
  j.erase("counts");
  EXPECT_NE(config_error(j).find("counts"), std::string::npos);

  j = valid_config();
  j["colour"] = "red";
  EXPECT_NE(config_error(j).find("colour"), std::string::npos);

  j = valid_config();
  j["h_rule_c"] = 2.0;
  EXPECT_NE(config_error(j).find("h_rule_c"), std::string::npos);

  j = valid_config();
  j["step_mode"] = "fast";
  EXPECT_NE(config_error(j).find("step_mode"), std::string::npos);

  j = valid_config();
  j["counts"] = Json::array({0, 0});
  EXPECT_NE(config_error(j).find("counts"), std::string::npos);
}

TEST(SweepSpec, ParsesAndRoundTrips) {
  const Json j{{"schema_version", 1}, {"n", {1000, 10000}}, {"k", {16}}, {"h_rule", {{"c", 324}}},
               {"pattern", "balanced_plus_bias"}, {"bias_lambda", 10}, {"trials", 3}, {"master_seed", 7},
               {"max_rounds", 1000}};
  const auto s = io::sweep_spec_from_json(j);
  EXPECT_EQ(s.ns, (std::vector<Count>{1000, 10000}));
  EXPECT_EQ(*s.h_rule_c, 324.0);
  const auto again = io::sweep_spec_from_json(io::to_json(s));
  EXPECT_EQ(again.ns, s.ns);
  EXPECT_EQ(again.ks, s.ks);
  EXPECT_EQ(again.master_seed, 7u);
  EXPECT_EQ(again.trials, 3);
}

TEST(SweepSpec, UnknownField) {
  const Json j{{"schema_version", 1}, {"n", {100}}, {"k", {2}}, {"h", {3}}, {"trials", 1}, {"bogus", 1}};
  try {
    io::sweep_spec_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
}

TEST(Trajectory, RoundTrip) {
  RunParams p;
  p.h = 3;
  p.max_rounds = 50;
  p.seed = 11;
  const auto t = run(Configuration{{50, 30, 20}, 100}, p);
  const Json j = io::to_json(t);
  EXPECT_EQ(j.at("schema_version"), 1);
  const auto back = io::trajectory_from_json(j);
  EXPECT_EQ(back.rounds.size(), t.rounds.size());
  EXPECT_EQ(back.consensus_round, t.consensus_round);
  EXPECT_EQ(back.final_config, t.final_config);
  EXPECT_EQ(io::summary_line(back), io::summary_line(t));
  EXPECT_EQ(io::to_json(back), j);
}

TEST(TrialRecord, RoundTrip) {
  mc::TrialRecord r;
  r.cell_id = 2;
  r.trial = 5;
  r.seed = 0xffffffffffffffffULL;
  r.n = 1000;
  r.k = 3;
  r.h = 7;
  r.b0 = 40;
  r.max_rounds = 10;
  r.consensus_round = 4;
  r.winner = 1;
  r.initial_plurality = 1;
  r.plurality_preserved = true;
  r.bias_trace = {{0, 0.04, 0.4, 0.36}, {1, 0.1, 0.5, 0.4}};
  const Json j = io::to_json(r);
  EXPECT_EQ(io::to_json(io::trial_record_from_json(j)), j);
  r.error = "boom";
  r.consensus_round.reset();
  r.winner.reset();
  EXPECT_EQ(io::to_json(io::trial_record_from_json(io::to_json(r))), io::to_json(r));
}

// ---------------------------------------------------------------------------
// Command line

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    static std::mt19937_64 gen(std::random_device{}());
    dir_ = fs::temp_directory_path() / ("hmaj_cli_" + std::to_string(gen()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    out_.str("");
    err_.str("");
    return cli::run(args, out_, err_);
  }
  std::string write(const std::string& name, const Json& j) {
    const auto path = dir_ / name;
    std::ofstream(path) << j.dump();
    return path.string();
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), {}};
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

TEST_F(Cli, SimulateConsensusStart) {
  const auto cfg = write("c.json", Json{{"schema_version", 1}, {"counts", {0, 9}}, {"h", 3}, {"max_rounds", 5}});
  EXPECT_EQ(run({"simulate", "--config", cfg, "--out", (dir_ / "s").string()}), 0);
  const Json t = Json::parse(slurp(dir_ / "s" / "trajectory.json"));
  EXPECT_EQ(t.at("consensus_round"), 0);
  EXPECT_NE(out_.str().find("consensus_round=0"), std::string::npos);
  // refuses to overwrite without --force
  EXPECT_EQ(run({"simulate", "--config", cfg, "--out", (dir_ / "s").string()}), 2);
  EXPECT_EQ(run({"simulate", "--config", cfg, "--out", (dir_ / "s").string(), "--force"}), 0);
}

TEST_F(Cli, SimulateBadConfigNamesField) {
  auto j = valid_config();
  j["h"] = -1.5;
  const auto cfg = write("bad.json", j);
  EXPECT_EQ(run({"simulate", "--config", cfg, "--out", (dir_ / "s").string()}), 2);
  EXPECT_NE(err_.str().find("'h'"), std::string::npos) << err_.str();
  EXPECT_EQ(run({"simulate", "--config", (dir_ / "missing.json").string(), "--out", dir_.string()}), 2);
}

TEST_F(Cli, SimulateThenReportReproducesSummary) {
  const auto cfg = write("c.json", valid_config());
  ASSERT_EQ(run({"simulate", "--config", cfg, "--out", (dir_ / "s").string()}), 0);
  const std::string line = out_.str();
  ASSERT_EQ(run({"report", "--in", (dir_ / "s").string(), "--out", (dir_ / "r").string()}), 0);
  EXPECT_EQ(out_.str(), line);
  EXPECT_EQ(slurp(dir_ / "r" / "summary.txt"), line);
}

TEST_F(Cli, ReportMissingInput) {
  EXPECT_EQ(run({"report", "--in", (dir_ / "nope").string(), "--out", (dir_ / "r").string()}), 2);
  EXPECT_EQ(run({"report", "--in", dir_.string(), "--out", (dir_ / "r").string()}), 2);
}

TEST_F(Cli, ReportEmptyRecords) {
  fs::create_directories(dir_ / "e");
  std::ofstream(dir_ / "e" / "records.jsonl");
  ASSERT_EQ(run({"report", "--in", (dir_ / "e").string(), "--out", (dir_ / "r").string()}), 0);
  EXPECT_EQ(slurp(dir_ / "r" / "summary.csv"),
            "cell_id,n,k,h,B0,trials,plurality_success_rate,median_consensus_round,p90_consensus_round,"
            "mean_wall_time_ms\n");
}

TEST_F(Cli, SweepWritesAndProtectsRecords) {
  const auto spec = write("spec.json", Json{{"schema_version", 1}, {"n", {100, 200, 400}}, {"k", {2}}, {"h", {3}},
                                            {"pattern", "balanced_plus_bias"}, {"bias_lambda", 1}, {"trials", 3},
                                            {"master_seed", 1}, {"max_rounds", 100}});
  const auto out = (dir_ / "w").string();
  ASSERT_EQ(run({"sweep", "--spec", spec, "--out", out, "--workers", "2"}), 0) << err_.str();
  EXPECT_NE(out_.str().find("trials=9 cells=3"), std::string::npos) << out_.str();
  const std::string first = slurp(dir_ / "w" / "records.jsonl");

  EXPECT_EQ(run({"sweep", "--spec", spec, "--out", out}), 2);
  EXPECT_EQ(slurp(dir_ / "w" / "records.jsonl"), first);
  ASSERT_EQ(run({"sweep", "--spec", spec, "--out", out, "--force", "--workers", "1"}), 0);
  EXPECT_EQ(slurp(dir_ / "w" / "records.jsonl"), first);
  ASSERT_EQ(run({"sweep", "--spec", spec, "--out", out, "--append"}), 0);
  EXPECT_EQ(slurp(dir_ / "w" / "records.jsonl"), first + first);

  ASSERT_EQ(run({"report", "--in", out, "--out", (dir_ / "r").string()}), 0);
  EXPECT_NE(out_.str().find("records=18 cells=3"), std::string::npos) << out_.str();
  std::ifstream scaling(dir_ / "r" / "scaling.csv");
  std::string line;
  int rows = 0;
  while (std::getline(scaling, line)) ++rows;
  EXPECT_EQ(rows, 4);  // header plus one row per n
}

TEST_F(Cli, SweepRejectsBadSpec) {
  const auto spec = write("spec.json", Json{{"schema_version", 1}, {"n", {100}}, {"k", {2}}, {"h", {3}},
                                            {"trials", 0}, {"master_seed", 1}, {"max_rounds", 10}});
  EXPECT_EQ(run({"sweep", "--spec", spec, "--out", (dir_ / "w").string()}), 2);
}

TEST_F(Cli, OracleReports) {
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.6,0.4"}), 0);
  const Json j = Json::parse(out_.str());
  EXPECT_NEAR(j.at("q")[0].get<double>(), 0.648, 1e-12);
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.4,0.6"}), 0);  // the win law needs no ordering
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.4,0.6", "--report", "event"}), 2);
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.4,0.6", "--report", "tiemap"}), 2);
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.5,0.4"}), 2);
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.5,abc"}), 2);
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.5,0.3,0.2", "--report", "event"}), 0);
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.5,0.3,0.2", "--report", "tiemap"}), 0);
  EXPECT_EQ(run({"oracle", "--h", "3", "--p", "0.5,0.5", "--report", "nope"}), 2);
}

TEST_F(Cli, VerifyExitCodes) {
  EXPECT_EQ(run({"verify", "--suite", "oracle"}), 0);
  EXPECT_NE(out_.str().find("PASS oracle"), std::string::npos);
  EXPECT_EQ(run({"verify", "--suite", "diff_equality", "--inject-tiebreak-fault"}), 1);
  EXPECT_NE(out_.str().find("FAIL diff_equality"), std::string::npos);
  EXPECT_EQ(run({"verify", "--suite", "no_such_suite"}), 2);
  const auto report = (dir_ / "v" / "report.json").string();
  EXPECT_EQ(run({"verify", "--suite", "lemma9", "--out", report}), 1);
  EXPECT_EQ(Json::parse(slurp(report)).at("suites")[0].at("suite"), "lemma9");
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"frobnicate"}), 2);
  EXPECT_EQ(run({"simulate"}), 2);
  EXPECT_EQ(run({"--help"}), 0);
}

}  // namespace
}  // namespace hmaj
