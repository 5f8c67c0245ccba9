#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "rnimage/image.hpp"

namespace fs = std::filesystem;
using namespace rnimage;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("rnimage_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = std::string(RNIMAGE_CLI_PATH) + " " + args + " > " + (dir_ / "stdout.txt").string() +
                            " 2> " + (dir_ / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  }

  static std::vector<std::vector<double>> read_csv(const std::string& p) {
    std::istringstream in(slurp(p));
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      std::vector<double> row;
      std::istringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
      rows.push_back(row);
    }
    return rows;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, RungeDefaultsBoundedRn) {
  ASSERT_EQ(run("runge --n 7 --extra-x 3 --out " + path("r.csv")), 0);
  const std::string text = slurp(path("r.csv"));
  EXPECT_EQ(text.substr(0, text.find('\n')), "x,f,A_LS,A_RN,df,ADf_LS,ADf_RN,DAf_LS,DAf_RN");
  const auto rows = read_csv(path("r.csv"));
  ASSERT_EQ(rows.size(), 1002u);
  EXPECT_DOUBLE_EQ(rows.front()[0], -1.5);
  EXPECT_DOUBLE_EQ(rows[1000][0], 1.5);
  for (std::size_t i = 0; i < 1001; ++i) {
    EXPECT_LE(std::abs(rows[i][3]), 1.0);
    EXPECT_GE(rows[i][3], 1.0 / 26.0 - 1e-9);
  }
  const auto& last = rows.back();
  EXPECT_DOUBLE_EQ(last[0], 3.0);
  EXPECT_GT(std::abs(last[2]), 1.0);
  EXPECT_GE(last[3], 1.0 / 26.0);
  EXPECT_LE(last[3], 1.0);
}

TEST_F(CliTest, RungeSingleElementIsConstantMean) {
  ASSERT_EQ(run("runge --n 1 --basis legendre --grid 11 --out " + path("r1.csv")), 0);
  const double mean = 0.4 * std::atan(5.0) / 2.0;
  for (const auto& row : read_csv(path("r1.csv"))) {
    EXPECT_NEAR(row[2], mean, 1e-13);
    EXPECT_NEAR(row[3], mean, 1e-13);
  }
}

TEST_F(CliTest, RungeIsDeterministic) {
  ASSERT_EQ(run("runge --grid 101 --out " + path("a.csv")), 0);
  ASSERT_EQ(run("runge --grid 101 --out " + path("b.csv")), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
}

TEST_F(CliTest, ImageConstantRoundTrips) {
  GrayImage img(20, 16, 77.0 / 255.0);
  write_pgm_file(path("flat.pgm"), img);
  ASSERT_EQ(run(path("flat.pgm") + " --n 5"), 1) << "input must follow the subcommand";
  ASSERT_EQ(run("image " + path("flat.pgm") + " --n 5"), 0);
  const std::string original = slurp(path("flat.pgm"));
  EXPECT_EQ(slurp(path("flat.ls.pgm")), original);
  EXPECT_EQ(slurp(path("flat.rn.pgm")), original);
  const auto metrics = nlohmann::json::parse(slurp(path("flat.metrics.json")));
  EXPECT_EQ(metrics["rn"]["max_abs"], 0.0);
  EXPECT_TRUE(metrics["rn"]["psnr"].is_null());
  EXPECT_TRUE(fs::exists(path("flat.timing.json")));
}

TEST_F(CliTest, ImageCrossBasisByteIdentical) {
  write_pgm_file(path("grad.pgm"), oracle::gradient_image(64, 64));
  ASSERT_EQ(run("image " + path("grad.pgm") + " --n 8 --basis chebyshev --out " + path("cheb")), 0);
  ASSERT_EQ(run("image " + path("grad.pgm") + " --n 8 --basis legendre --out " + path("leg")), 0);
  EXPECT_EQ(slurp(path("cheb.ls.pgm")), slurp(path("leg.ls.pgm")));
  EXPECT_EQ(slurp(path("cheb.rn.pgm")), slurp(path("leg.rn.pgm")));
  EXPECT_EQ(slurp(path("cheb.metrics.json")).size() > 0, true);
}

TEST_F(CliTest, ImageRandomSignPreservationAndDeterminism) {
  std::mt19937 rng(5);
  write_pgm_file(path("rand.pgm"), oracle::random_byte_image(32, 32, rng));
  ASSERT_EQ(run("image " + path("rand.pgm") + " --n 6 --out " + path("a")), 0);
  ASSERT_EQ(run("image " + path("rand.pgm") + " --n 6 --out " + path("b")), 0);
  const auto m = nlohmann::json::parse(slurp(path("a.metrics.json")));
  EXPECT_GE(m["rn"]["pre_clamp_min"].get<double>(), -1e-9);
  EXPECT_EQ(slurp(path("a.metrics.json")), slurp(path("b.metrics.json")));
  EXPECT_EQ(slurp(path("a.rn.pgm")), slurp(path("b.rn.pgm")));
  EXPECT_EQ(slurp(path("a.ls.pgm")), slurp(path("b.ls.pgm")));
}

TEST_F(CliTest, ImageSingleMethod) {
  write_pgm_file(path("g.pgm"), oracle::gradient_image(16, 16));
  ASSERT_EQ(run("image " + path("g.pgm") + " --nx 4 --ny 3 --method rn"), 0);
  EXPECT_TRUE(fs::exists(path("g.rn.pgm")));
  EXPECT_FALSE(fs::exists(path("g.ls.pgm")));
  const auto m = nlohmann::json::parse(slurp(path("g.metrics.json")));
  EXPECT_EQ(m["n"], nlohmann::json::array({4, 3}));
}

TEST_F(CliTest, NaturalConstantImage) {
  write_pgm_file(path("c.pgm"), GrayImage(10, 10, 51.0 / 255.0));
  ASSERT_EQ(run("natural " + path("c.pgm") + " --n 3 --bins 1 --out " + path("n.json")), 0);
  const auto j = nlohmann::json::parse(slurp(path("n.json")));
  for (double l : j["lambda"].get<std::vector<double>>()) EXPECT_NEAR(l, 0.2, 1e-12);
  EXPECT_NEAR(j["spur_average"].get<double>(), 0.2, 1e-12);
  EXPECT_EQ(j["mu"], nlohmann::json::array({9.0}));
  EXPECT_EQ(j["psi"].size(), 9u);
}

TEST_F(CliTest, NaturalSpurMatchesEigenvalueMean) {
  std::mt19937 rng(9);
  write_pgm_file(path("r.pgm"), oracle::random_byte_image(16, 16, rng));
  ASSERT_EQ(run("natural " + path("r.pgm") + " --n 4 --out " + path("n.json")), 0);
  const auto j = nlohmann::json::parse(slurp(path("n.json")));
  const auto lambda = j["lambda"].get<std::vector<double>>();
  double mean = 0.0;
  for (double l : lambda) mean += l;
  mean /= static_cast<double>(lambda.size());
  EXPECT_EQ(lambda.size(), 16u);
  EXPECT_NEAR(mean, j["spur_average"].get<double>(), 1e-9);
  EXPECT_LE(j["residuals"]["gramm"].get<double>(), 1e-8);
  EXPECT_FALSE(j.contains("mu"));
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("runge --bogus"), 1);
  EXPECT_EQ(run("image " + path("missing.pgm")), 2);
  std::ofstream(path("bad.pgm")) << "P6 2 2 255\n....";
  EXPECT_EQ(run("natural " + path("bad.pgm")), 2);
  write_pgm_file(path("tiny.pgm"), GrayImage(4, 4, 0.5));
  EXPECT_EQ(run("image " + path("tiny.pgm") + " --n 5"), 3);
  EXPECT_EQ(run("runge --out " + path("no/such/dir/x.csv")), 2);
  EXPECT_EQ(run("image " + path("tiny.pgm") + " --method xx"), 1);
}
