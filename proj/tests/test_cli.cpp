#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(EBN_FORGE_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("ebn_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

}  // namespace

TEST(Cli, DumpDefaultsSucceeds) { EXPECT_EQ(run("network --dump-defaults"), 0); }

TEST(Cli, UnknownExperimentIsConfigError) { EXPECT_EQ(run("three-synapse"), 2); }

TEST(Cli, UnknownKeyIsConfigError) {
  const auto dir = scratch("badkey");
  const auto cfg = write(dir / "c.yaml", "experiment: network\nnetwork.bogus: 1\n");
  EXPECT_EQ(run("network --config " + cfg.string() + " --out " + (dir / "o").string()), 2);
  EXPECT_FALSE(fs::exists(dir / "o"));
  fs::remove_all(dir);
}

TEST(Cli, MissingConfigIsConfigError) {
  EXPECT_EQ(run("network --config /nonexistent/ebn.yaml"), 2);
}

TEST(Cli, ExperimentMismatchIsConfigError) {
  const auto dir = scratch("mismatch");
  const auto cfg = write(dir / "c.yaml", "experiment: network\n");
  EXPECT_EQ(run("single-synapse --config " + cfg.string()), 2);
  fs::remove_all(dir);
}

TEST(Cli, RunsAndWritesOnlyIntoOutDir) {
  const auto dir = scratch("ok");
  const auto cfg = write(dir / "c.yaml", "experiment: single-synapse\nhw.duration: 0.5\n");
  EXPECT_EQ(run("single-synapse --config " + cfg.string() + " --out " + (dir / "o").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "o" / "trace.csv"));
  EXPECT_TRUE(fs::exists(dir / "o" / "config.yaml"));
  std::size_t entries = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++entries;
  EXPECT_EQ(entries, 2u);
  fs::remove_all(dir);
}

TEST(Cli, NonConvergenceExitsThree) {
  const auto dir = scratch("stuck");
  const auto cfg = write(dir / "c.yaml", "experiment: single-synapse\nhw.i_unit: 1e-15\n");
  EXPECT_EQ(run("single-synapse --config " + cfg.string() + " --out " + (dir / "o").string()), 3);
  fs::remove_all(dir);
}

TEST(Cli, SweepWritesOneDirectoryPerValue) {
  const auto dir = scratch("sweep");
  EXPECT_EQ(run("network --iterations 2 --out " + dir.string() + " --sweep seed=1..3"), 0);
  for (int s = 1; s <= 3; ++s)
    EXPECT_TRUE(fs::exists(dir / ("seed=" + std::to_string(s)) / "metrics.csv")) << s;
  EXPECT_EQ(run("network --sweep seed=3..1"), 2);
  EXPECT_EQ(run("network --sweep nokey=1..2"), 2);
  fs::remove_all(dir);
}
