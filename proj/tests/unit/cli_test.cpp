#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using iat::cli::run;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("iat_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  int call(const std::vector<std::string>& args) {
    out_.str("");
    err_.str("");
    return run(args, out_, err_);
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, GenerateWritesFieldAndCompanion) {
  ASSERT_EQ(call({"generate", "--name", "example1:p=2", "--resolution", "50", "--out", path("psi.csv")}), 0);
  const auto psi = iat::io::load_field(path("psi.csv"));
  EXPECT_EQ(psi.size(), 50u);
  ASSERT_EQ(call({"generate", "--name", "two_bump", "--resolution", "100", "--out", path("phi.csv"), "--companion",
                  path("sharp.csv")}),
            0);
  EXPECT_TRUE(fs::exists(path("sharp.csv")));
  EXPECT_EQ(call({"generate", "--name", "nonsense", "--out", path("x.csv")}), 2);
}

TEST_F(CliTest, VerifyQuadraticPasses) {
  ASSERT_EQ(call({"verify", "--problem", "quadratic", "--resolution", "16", "--panels", "256", "--report",
                  path("r.json")}),
            0)
      << err_.str();
  const auto j = nlohmann::json::parse(slurp(path("r.json")));
  EXPECT_TRUE(j["passed"].get<bool>());
  EXPECT_EQ(j["points"].size(), 5u);
  EXPECT_TRUE(j["points"][0].contains("fd_laplacian"));
}

TEST_F(CliTest, VerifyFailureExitsOne) {
  EXPECT_EQ(call({"--tolerance", "1e-300", "verify", "--problem", "harmonic", "--resolution", "16", "--panels", "64",
                  "--report", path("r.json")}),
            1);
}

TEST_F(CliTest, MissingInputIsAUsageError) {
  EXPECT_EQ(call({"pai-report", "--density", path("absent.csv"), "--observed", path("absent.csv"), "--out",
                  path("o.json")}),
            2);
  const auto j = nlohmann::json::parse(err_.str());
  EXPECT_EQ(j["error"]["code"], "io.IoError");
  EXPECT_FALSE(fs::exists(path("o.json")));
  EXPECT_EQ(call({"pai-report"}), 2);
  EXPECT_EQ(call({"no-such-command"}), 2);
}

TEST_F(CliTest, DegenerateDensityExitsThree) {
  {
    std::ofstream f(path("zero.csv"));
    f << "dim,1\norigin,0\nspacing,0.5\nshape,2\n0\n0\n";
  }
  EXPECT_EQ(call({"pai-report", "--density", path("zero.csv"), "--observed", path("zero.csv"), "--out",
                  path("o.json")}),
            3);
  const auto j = nlohmann::json::parse(err_.str());
  EXPECT_EQ(j["error"]["code"], "pai.DegenerateDensity");
}

TEST_F(CliTest, HelpExitsZero) {
  EXPECT_EQ(call({"--help"}), 0);
  EXPECT_NE(out_.str().find("pai-report"), std::string::npos);
}

TEST_F(CliTest, RunsAreByteIdentical) {
  ASSERT_EQ(call({"generate", "--name", "two_bump", "--resolution", "200", "--out", path("phi.csv"), "--companion",
                  path("psi.csv")}),
            0);
  for (const char* tag : {"a", "b"}) {
    const std::string t(tag);
    ASSERT_EQ(call({"pai-report", "--density", path("psi.csv"), "--observed", path("phi.csv"), "--levels", "50",
                    "--out", path("rep_" + t + ".json")}),
              0);
    ASSERT_EQ(call({"--seed", "7", "verify", "--problem", "harmonic", "--resolution", "16", "--panels", "64",
                    "--report", path("ver_" + t + ".json")}),
              0)
        << err_.str();
  }
  EXPECT_EQ(slurp(path("rep_a.json")), slurp(path("rep_b.json")));
  EXPECT_EQ(slurp(path("ver_a.json")), slurp(path("ver_b.json")));
}

TEST_F(CliTest, ThreadCountDoesNotChangeResults) {
  ASSERT_EQ(call({"generate", "--name", "gaussian3d", "--resolution", "8", "--out", path("f.csv")}), 0);
  ASSERT_EQ(call({"iat-eval", "--field", path("f.csv"), "--weight", "ball", "--panels", "64", "--out",
                  path("u1.csv")}),
            0)
      << err_.str();
  ASSERT_EQ(call({"--threads", "3", "iat-eval", "--field", path("f.csv"), "--weight", "ball", "--panels", "64",
                  "--out", path("u3.csv")}),
            0);
  EXPECT_EQ(slurp(path("u1.csv")), slurp(path("u3.csv")));
}

TEST_F(CliTest, PoissonSolveWritesPointTable) {
  ASSERT_EQ(call({"generate", "--name", "gaussian3d", "--resolution", "16", "--out", path("f.csv")}), 0);
  {
    std::ofstream p(path("pts.csv"));
    p << "x,y,z\n0,0,0\n1,0,0\n";
  }
  ASSERT_EQ(call({"poisson-solve", "--forcing", path("f.csv"), "--points", path("pts.csv"), "--center", "0,0,0",
                  "--support", "6", "--panels", "512", "--out", path("u.csv")}),
            0)
      << err_.str();
  const auto pts = iat::io::load_points(path("u.csv"), 4);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_NEAR(pts[0][3], 1.0, 0.1);
  EXPECT_EQ(call({"poisson-solve", "--forcing", path("f.csv"), "--points", path("pts.csv"), "--mode", "bogus", "--out",
                  path("u.csv")}),
            2);
}

TEST_F(CliTest, SharpWrongPredictionOutscoresBroadCorrectOne) {
  ASSERT_EQ(call({"generate", "--name", "two_bump", "--resolution", "400", "--out", path("phi.csv"), "--companion",
                  path("sharp.csv")}),
            0);
  ASSERT_EQ(call({"pai-report", "--density", path("sharp.csv"), "--observed", path("phi.csv"), "--levels", "200",
                  "--out", path("sharp.json")}),
            0);
  ASSERT_EQ(call({"pai-report", "--density", path("phi.csv"), "--observed", path("phi.csv"), "--levels", "200",
                  "--out", path("broad.json")}),
            0);
  const auto sharp = nlohmann::json::parse(slurp(path("sharp.json")));
  const auto broad = nlohmann::json::parse(slurp(path("broad.json")));
  EXPECT_GT(sharp["P"].get<double>(), broad["P"].get<double>());
  EXPECT_LT(sharp["hot_spot"]["high_density_coverage"].get<double>(), 0.2);
  EXPECT_EQ(sharp["hot_spot"]["off_peak_components"].get<int>(), 1);
}
