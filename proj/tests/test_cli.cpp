#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path& work() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "tnr_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    std::ofstream(d / "small.cfg") << "[world]\n"
                                      "waypoints = 0 0; 4 0; 6 1\n"
                                      "landmark_count = 30\n"
                                      "[teach]\nspacing_mean = 0.5\n"
                                      "[repeat]\nspacing_mean = 0.5\nlateral_sigma = 0.03\n"
                                      "[dataset]\nconditions = day-green, night-snow\nrandom_repeats = 1\n"
                                      "[model]\npreset = tiny\ninput_width = 32\ninput_height = 24\n"
                                      "[train]\nbatch_size = 8\nmax_epochs = 2\n";
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = "cd '" + work().string() + "' && '" TNR_CLI "' " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string checkpoint_step(const fs::path& p) {
  std::istringstream is(slurp(p));
  for (std::string line; std::getline(is, line);)
    if (line.rfind("step ", 0) == 0) return line.substr(5);
  return "";
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    ASSERT_EQ(run("generate --config small.cfg --out data"), 0);
    ASSERT_EQ(run("sample --graph data/graph.pgraph --out s --kind loc --n 40 --seed 3"), 0);
    ASSERT_EQ(run("sample --graph data/graph.pgraph --out svo --kind vo --n 40"), 0);
    ASSERT_EQ(run("train --config small.cfg --out m --samples s/samples.csv --graph data/graph.pgraph"), 0);
  }
};

}  // namespace

TEST_F(Cli, PipelineWritesArtifactsAndManifests) {
  for (const char* f : {"data/graph.pgraph", "data/images.manifest", "data/run_manifest.txt",
                        "s/samples.csv", "s/run_manifest.txt", "m/best.ckpt", "m/train_report.csv",
                        "m/run_manifest.txt"})
    EXPECT_TRUE(fs::exists(work() / f)) << f;
  ASSERT_EQ(run("evaluate --config small.cfg --out e --graph data/graph.pgraph "
                "--vo m/best.ckpt --loc m/best.ckpt --runs 1,2"),
            0);
  for (const char* f : {"rmse_matrix.csv", "rmse_tables.csv", "vo_tracks.csv", "error_cdf.csv",
                        "fusion_trace.csv", "rmse_matrix.png", "run_manifest.txt"})
    EXPECT_GT(fs::file_size(work() / "e" / f), 0u) << f;
  const std::string manifest = slurp(work() / "m/run_manifest.txt");
  EXPECT_NE(manifest.find("command = train"), std::string::npos);
  EXPECT_NE(manifest.find("# config file contents"), std::string::npos);
}

TEST_F(Cli, SampleCountsAndHeader) {
  const std::string s = slurp(work() / "s/samples.csv");
  EXPECT_EQ(s.rfind("kind,a_run,a_index,b_run,b_index,x,y,theta\n", 0), 0u);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 41);
  const std::string v = slurp(work() / "svo/samples.csv");
  EXPECT_NE(v.find("\nvo,"), std::string::npos);
}

TEST_F(Cli, StubOracleGivesZeroMatrixWithConditionLabels) {
  ASSERT_EQ(run("evaluate --config small.cfg --out eo --graph data/graph.pgraph --stub-oracle"), 0);
  std::istringstream csv(slurp(work() / "eo/rmse_matrix.csv"));
  std::string line;
  std::getline(csv, line);
  int rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream ls(line);
    std::string r, t, x, y, th;
    std::getline(ls, r, ',');
    std::getline(ls, t, ',');
    std::getline(ls, x, ',');
    std::getline(ls, y, ',');
    std::getline(ls, th, ',');
    EXPECT_EQ(std::stod(x), 0.0) << line;
    EXPECT_EQ(std::stod(y), 0.0) << line;
    EXPECT_LT(std::stod(th), 1e-6) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 9);
  const std::string tables = slurp(work() / "eo/rmse_tables.csv");
  EXPECT_NE(tables.find("1:day-green"), std::string::npos);
  EXPECT_NE(tables.find("2:night-snow"), std::string::npos);
}

TEST_F(Cli, ResumeContinuesStepCounter) {
  ASSERT_EQ(run("train --config small.cfg --out m2 --samples s/samples.csv --graph data/graph.pgraph "
                "--resume m/best.ckpt"),
            0);
  const long a = std::stol(checkpoint_step(work() / "m/best.ckpt"));
  const long b = std::stol(checkpoint_step(work() / "m2/best.ckpt"));
  EXPECT_GT(a, 0);
  EXPECT_EQ(b, 2 * a);
}

TEST_F(Cli, SameSeedSameGraph) {
  ASSERT_EQ(run("generate --config small.cfg --out data2"), 0);
  EXPECT_EQ(slurp(work() / "data/graph.pgraph"), slurp(work() / "data2/graph.pgraph"));
  ASSERT_EQ(run("generate --config small.cfg --out data3 --seed 99"), 0);
  EXPECT_NE(slurp(work() / "data/graph.pgraph"), slurp(work() / "data3/graph.pgraph"));
}

TEST_F(Cli, ErrorsGiveNonZeroExit) {
  std::ofstream(work() / "bad.cfg") << "[world]\nbogus = 1\n";
  EXPECT_NE(run("generate --config bad.cfg --out x"), 0);
  std::ofstream(work() / "badsec.cfg") << "[nonsense]\nx = 1\n";
  EXPECT_NE(run("generate --config badsec.cfg --out x"), 0);
  EXPECT_NE(run("sample --graph missing.pgraph --out x"), 0);
  EXPECT_NE(run("sample --graph data/graph.pgraph --out x --kind sideways"), 0);
  EXPECT_NE(run("train --config small.cfg --out x --samples missing.csv --graph data/graph.pgraph"), 0);
  EXPECT_NE(run("evaluate --config small.cfg --out x --graph data/graph.pgraph"), 0);
  EXPECT_NE(run("frobnicate"), 0);
  EXPECT_EQ(run("--help"), 0);
}
