#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "ulsa/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = ulsa::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "ulsa_unit_cli";
    fs::remove_all(root_);
    fs::create_directories(root_);
    ASSERT_EQ(cli({"phantom", "--frames", "4", "--size", "8", "--seed", "1", "--out", (root_ / "data").string()}).code, 0);
  }
  static std::vector<std::string> run_args(const std::string& out) {
    return {"run", "--input", (root_ / "data").string(), "--policy", "equispaced", "--lines-per-frame", "2",
            "--first-frame-steps", "20", "--steps", "5", "--out", (root_ / out).string()};
  }
  static inline fs::path root_;
};

}  // namespace

TEST_F(Cli, PhantomWritesContainersAndManifest) {
  for (const char* f : {"seq.ulsa", "labels.ulsa", "manifest"}) EXPECT_TRUE(fs::exists(root_ / "data" / f)) << f;
  EXPECT_NE(slurp(root_ / "data" / "manifest").find("\"command\": \"phantom\""), std::string::npos);
}

TEST_F(Cli, EquispacedRunLogsExpectedLines) {
  ASSERT_EQ(cli(run_args("eq")).code, 0);
  std::istringstream log(slurp(root_ / "eq" / "log.csv"));
  std::string header, first;
  std::getline(log, header);
  std::getline(log, first);
  EXPECT_EQ(header, "t,policy,K,psnr_db,gcnr,mean_entropy,perception_ms,action_ms,lines");
  EXPECT_EQ(first.substr(first.rfind(',') + 1), "0;4");
  EXPECT_EQ(first.substr(0, 15), "1,equispaced,2,");
}

TEST_F(Cli, RerunsAreByteIdentical) {
  ASSERT_EQ(cli(run_args("r1")).code, 0);
  ASSERT_EQ(cli(run_args("r2")).code, 0);
  ASSERT_EQ(cli({"rerun", "--manifest", (root_ / "r1" / "manifest").string(), "--out", (root_ / "r3").string()}).code, 0);
  for (const char* f : {"recon.ulsa", "log.csv", "summary.csv"}) {
    EXPECT_EQ(slurp(root_ / "r1" / f), slurp(root_ / "r2" / f)) << f;
    EXPECT_EQ(slurp(root_ / "r1" / f), slurp(root_ / "r3" / f)) << f;
  }
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"dance"}).code, 2);
  EXPECT_EQ(cli({"phantom", "--frames", "0", "--out", (root_ / "bad").string()}).code, 2);
  EXPECT_EQ(cli({"run", "--input", (root_ / "missing").string(), "--out", (root_ / "x").string()}).code, 3);
  auto bad_gamma = run_args("g");
  bad_gamma.insert(bad_gamma.end(), {"--gamma", "-1"});
  EXPECT_EQ(cli(bad_gamma).code, 2);
  auto too_many = run_args("k");
  too_many.insert(too_many.end(), {"--lines-per-frame", "9"});
  EXPECT_EQ(cli(too_many).code, 2);
  EXPECT_EQ(cli({"rerun", "--manifest", (root_ / "nope").string()}).code, 3);
  EXPECT_EQ(cli({"--version"}).code, 0);
}

TEST_F(Cli, TrainWithEmptyDatasetIsUsageError) {
  const Result r = cli({"train", "--out", (root_ / "t").string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(r.err.empty());
}

TEST_F(Cli, TrainFailingGateExitsFive) {
  EXPECT_EQ(cli({"train", "--phantoms", "2", "--size", "8", "--frames", "6", "--steps", "1", "--batch", "2",
                 "--features", "2", "--buckets", "2", "--validation-samples", "8", "--out", (root_ / "t5").string(),
                 "--max-validation-mse", "0.000001"})
                .code,
            5);
}
