#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("combforge_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args, const std::string& env = "") const {
    const std::string cmd = env + (env.empty() ? "" : " ") + std::string(COMBFORGE_CLI) + " " + args + " >" + (dir_ / "stdout").string() + " 2>" +
                            (dir_ / "stderr").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  json load(const std::string& name) const { return json::parse(slurp(path(name))); }

  void save(const std::string& name, const json& j) const { std::ofstream(path(name)) << j.dump(); }

  fs::path dir_;
};

json sharp_pair() {
  auto povm = [](double sx, double sz) {
    // effects (1 +- n.sigma)/2 for n = (sx, 0, sz)
    json effects = json::array();
    for (int sign : {1, -1}) {
      const double s = sign;
      effects.push_back({{"systems", {{{"index", 0}, {"dim", 1}}, {{"index", 1}, {"dim", 2}}}},
                         {"matrix", {{(1 + s * sz) / 2, 0}, {s * sx / 2, 0}, {s * sx / 2, 0}, {(1 - s * sz) / 2, 0}}}});
    }
    return json{{"slots", 1}, {"effects", effects}};
  };
  return {{"testers", {povm(1, 0), povm(0, 1)}}};
}

}  // namespace

TEST_F(Cli, Theorem1ProbeTrivialExample) {
  ASSERT_EQ(run("theorem1 --random --slots 1 --probe-trivial --outcomes 2 --testers 2 --seed 7 --out " + path("r.json")), 0);
  const auto r = load("r.json");
  const auto& rep = r["result"]["instances"][0]["report"];
  EXPECT_GT(rep["measure"].get<double>(), 1e-3);
  EXPECT_NEAR(rep["ratio"].get<double>(), 1.0 + rep["measure"].get<double>(), 1e-4);
  EXPECT_TRUE(rep["witness_valid"].get<bool>());
  EXPECT_EQ(rep["bound_violations"].get<int>(), 0);
  EXPECT_TRUE(fs::exists(path("r.json.timing.json")));
}

TEST_F(Cli, ReportsEmbedProvenance) {
  ASSERT_EQ(run("robustness --collection " + path("c.json") + " --out " + path("r.json")), 2);
  save("c.json", sharp_pair());
  ASSERT_EQ(run("robustness --collection " + path("c.json") + " --seed 9 --out " + path("r.json")), 0);
  const auto r = load("r.json");
  EXPECT_EQ(r["version"], "0.1.0");
  EXPECT_EQ(r["seed"], 9);
  EXPECT_TRUE(r.contains("config"));
  EXPECT_TRUE(r.contains("tolerances"));
  EXPECT_NEAR(r["result"]["robustness"]["value"].get<double>(), 0.171572875254, 1e-6);
}

TEST_F(Cli, DeterministicReports) {
  for (const char* cmd : {"theorem1 --random --slots 1 --seed 11", "theorem2 --random --slots 1 --probe-trivial --seed 4",
                          "weight --random --slots 1 --testers 2 --outcomes 2 --seed 5"}) {
    ASSERT_EQ(run(std::string(cmd) + " --out " + path("a.json") + " --csv " + path("a.csv")), 0) << cmd;
    ASSERT_EQ(run(std::string(cmd) + " --out " + path("b.json")), 0) << cmd;
    EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json"))) << cmd;
    ASSERT_EQ(run(std::string(cmd) + " --out " + path("c.json"), "COMBFORGE_THREADS=3"), 0) << cmd;
    EXPECT_EQ(slurp(path("a.json")), slurp(path("c.json"))) << cmd;
  }
}

TEST_F(Cli, CompatiblePairHasZeroRobustness) {
  auto c = sharp_pair();
  c["testers"][1] = c["testers"][0];
  save("c.json", c);
  ASSERT_EQ(run("robustness --collection " + path("c.json") + " --out " + path("r.json")), 0);
  EXPECT_LE(load("r.json")["result"]["robustness"]["value"].get<double>(), 1e-6);
  ASSERT_EQ(run("compatible --collection " + path("c.json") + " --out " + path("k.json")), 0);
  EXPECT_EQ(load("k.json")["result"]["compatibility"]["verdict"], "compatible");
}

TEST_F(Cli, ValidateReportsResiduals) {
  const auto c = sharp_pair();
  save("t.json", c["testers"][0]);
  ASSERT_EQ(run("validate --tester " + path("t.json") + " --out " + path("v.json")), 0);
  auto v = load("v.json");
  EXPECT_TRUE(v["result"]["valid"].get<bool>());
  EXPECT_TRUE(v["result"]["items"][0].contains("residuals"));

  auto bad = c["testers"][0];
  bad["effects"][0]["matrix"][0][0] = bad["effects"][0]["matrix"][0][0].get<double>() + 1e-3;
  save("bad.json", bad);
  ASSERT_EQ(run("validate --tester " + path("bad.json") + " --out " + path("v.json")), 2);
  v = load("v.json");
  EXPECT_FALSE(v["result"]["valid"].get<bool>());
  EXPECT_EQ(v["result"]["items"][0]["error"]["kind"], "NormalizationViolation");
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("robustness --random --outcomes 3 --testers 4"), 4);
  EXPECT_EQ(run("robustness --random --tolerance-gap 0.5"), 2);
  EXPECT_EQ(run("robustness --random --tolerance-gap 0"), 2);
  EXPECT_EQ(run("robustness --collection " + path("missing.json")), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  std::ofstream(path("junk.json")) << "{not json";
  EXPECT_EQ(run("weight --collection " + path("junk.json")), 2);
  EXPECT_EQ(run("robustness --random --slots 2 --cap-dim 8"), 4);
}

TEST_F(Cli, GameAndExclusion) {
  ASSERT_EQ(run("game --random --slots 1 --probe-trivial --seed 2 --out " + path("g.json")), 0);
  const auto g = load("g.json")["result"];
  EXPECT_LE(g["incompatible_value"].get<double>(), 1.0 + 1e-8);
  EXPECT_GE(g["incompatible_value"].get<double>(), g["compatible_value"].get<double>() - 1e-7);
  save("e.json", g["ensembles"]);
  save("c.json", g["collection"]);
  ASSERT_EQ(run("exclusion --collection " + path("c.json") + " --ensembles " + path("e.json") + " --out " + path("x.json")), 0);
  const auto x = load("x.json")["result"];
  EXPECT_NEAR(x["incompatible_error"].get<double>() + x["incompatible_success"].get<double>(), 1.0, 1e-11);
  EXPECT_LE(x["compatible_error"].get<double>(), x["incompatible_error"].get<double>() + 1e-7);
}

TEST_F(Cli, CsvUsesDotDecimal) {
  ASSERT_EQ(run("theorem1 --random --slots 1 --probe-trivial --instances 2 --seed 1 --csv " + path("s.csv")), 0);
  const auto text = slurp(path("s.csv"));
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "instance,measure,ratio,predicted,gap,witness_valid,wall_time_s");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
  }
  EXPECT_EQ(rows, 2);
}

TEST_F(Cli, Demo) {
  ASSERT_EQ(run("demo --out " + path("d.json")), 0);
  const auto d = load("d.json")["result"];
  EXPECT_EQ(d["compatibility"]["verdict"], "incompatible");
  EXPECT_NEAR(d["theorem1"]["ratio"].get<double>(), d["theorem1"]["predicted_ratio"].get<double>(), 1e-4);
  EXPECT_NEAR(d["theorem2"]["ratio"].get<double>(), d["theorem2"]["predicted_ratio"].get<double>(), 1e-4);
}
