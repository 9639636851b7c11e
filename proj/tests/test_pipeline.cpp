#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "fracanalog/pipeline.hpp"
#include "fracanalog/series_io.hpp"

using namespace fracanalog;
namespace fs = std::filesystem;

namespace {

const char* const kSmall =
    "n_database = 16384\n"
    "n_measure = 2048\n"
    "big_t = 128\n"
    "k = 20\n";

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "fracanalog_pipeline_tests" / name;
  fs::remove_all(dir);
  return dir;
}

RunConfig small_config(const std::string& extra = "") { return parse_config(std::string(kSmall) + extra); }

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> read_fits(const fs::path& path) {
  std::map<std::string, std::string> kv;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  return kv;
}

const std::vector<std::string> kCsvs{"structure_functions.csv", "zeta.csv", "volumes.csv", "successor_volumes.csv",
                                     "pdf.csv", "pdf_rescaled.csv", "dispersion.csv"};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FRACANALOG_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Pipeline, EmitsDeclaredArtifacts) {
  auto c = small_config();
  c.output_dir = scratch("artifacts");
  const auto r = run_pipeline(c);
  for (const auto& name : kCsvs) {
    ASSERT_TRUE(fs::exists(c.output_dir / name)) << name;
    const auto text = slurp(c.output_dir / name);
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_EQ(text.back(), '\n');
  }
  EXPECT_TRUE(fs::exists(c.output_dir / "fits.txt"));
  const auto manifest = slurp(c.output_dir / "manifest.txt");
  for (const auto& name : kCsvs) EXPECT_NE(manifest.find(name + " crc32="), std::string::npos) << name;
  for (const char* stage : {"synthesis", "structure_functions", "embedding", "index", "volumes", "statistics"}) {
    EXPECT_NE(manifest.find(std::string("\n") + stage + " "), std::string::npos) << stage;
  }
  EXPECT_NE(manifest.find("hurst = 0.5"), std::string::npos);

  EXPECT_EQ(slurp(c.output_dir / "volumes.csv").substr(0, 21), "target_index,delta_a\n");
  EXPECT_EQ(slurp(c.output_dir / "dispersion.csv").substr(0, 35), "tau,mean_delta_s,alpha,alpha_stderr");
  EXPECT_EQ(r.volumes.records.size(), 2046u);
  EXPECT_EQ(r.volumes.taus.back(), 512u);
}

TEST(Pipeline, CsvContentsMatchResult) {
  auto c = small_config();
  c.output_dir = scratch("contents");
  const auto r = run_pipeline(c);
  std::istringstream in(slurp(c.output_dir / "volumes.csv"));
  std::string line;
  std::getline(in, line);
  for (const auto& rec : r.volumes.records) {
    ASSERT_TRUE(std::getline(in, line));
    const auto comma = line.find(',');
    EXPECT_EQ(std::stoul(line.substr(0, comma)), rec.target_time_index);
    EXPECT_EQ(std::stod(line.substr(comma + 1)), rec.delta_a);
  }
  const auto fits = read_fits(c.output_dir / "fits.txt");
  EXPECT_EQ(std::stod(fits.at("log_delta_a.std")), r.pdf.stddev);
  EXPECT_EQ(std::stod(fits.at("inertial.slope")), r.fits.inertial.slope);
  EXPECT_EQ(std::stod(fits.at("plateau.level")), r.fits.plateau_level);
  EXPECT_TRUE(fits.count("inertial.minus_h"));
  EXPECT_TRUE(fits.count("inertial.minus_2h"));
  EXPECT_TRUE(fits.count("zeta.q2"));
}

TEST(Pipeline, ByteIdenticalAcrossRunsAndThreadCounts) {
  auto a = small_config("threads = 1\n");
  a.output_dir = scratch("det_a");
  auto b = small_config("threads = 3\n");
  b.output_dir = scratch("det_b");
  run_pipeline(a);
  run_pipeline(b);
  for (const auto& name : kCsvs) EXPECT_EQ(slurp(a.output_dir / name), slurp(b.output_dir / name)) << name;
  EXPECT_EQ(slurp(a.output_dir / "fits.txt"), slurp(b.output_dir / "fits.txt"));
}

TEST(Pipeline, SeedsChangeOutputs) {
  const auto a = execute_pipeline(small_config());
  const auto b = execute_pipeline(small_config("seed_measure = 9\n"));
  EXPECT_NE(a.pdf.mean, b.pdf.mean);
}

TEST(Pipeline, StageNamedOnFailure) {
  auto c = small_config();
  c.seed_measure = c.seed_database;
  try {
    execute_pipeline(c);
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
  auto d = small_config();
  d.output_dir = "/proc/fracanalog_cannot_write";
  try {
    run_pipeline(d);
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_EQ(e.stage(), "output");
  }
}

TEST(Pipeline, OptionalSuccessorExport) {
  auto c = small_config("write_successor_volumes = false\n");
  c.output_dir = scratch("no_successors");
  run_pipeline(c);
  EXPECT_FALSE(fs::exists(c.output_dir / "successor_volumes.csv"));
  EXPECT_TRUE(fs::exists(c.output_dir / "dispersion.csv"));
}

TEST(Sweep, OneDirectoryPerPointAndSummaryMatchesFits) {
  auto c = small_config("hurst_grid = 0.3, 0.5, 0.7\nwrite_successor_volumes = false\n");
  c.output_dir = scratch("sweep_h");
  const auto s = run_sweep(c);
  ASSERT_EQ(s.rows.size(), 3u);
  std::istringstream summary(slurp(c.output_dir / "summary.csv"));
  std::string line;
  std::getline(summary, line);
  EXPECT_EQ(line.substr(0, 9), "hurst,c2,");
  for (const auto& row : s.rows) {
    EXPECT_EQ(row.status, "ok");
    const auto dir = c.output_dir / row.directory;
    ASSERT_TRUE(fs::is_directory(dir)) << dir;
    const auto fits = read_fits(dir / "fits.txt");
    ASSERT_TRUE(std::getline(summary, line));
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string col; std::getline(ls, col, ',');) cols.push_back(col);
    ASSERT_EQ(cols.size(), 12u);
    EXPECT_EQ(cols[0], fits.at("hurst"));
    EXPECT_EQ(cols[2], fits.at("log_delta_a.mean"));
    EXPECT_EQ(cols[3], fits.at("log_delta_a.std"));
    EXPECT_EQ(cols[4], fits.at("dissipative.slope"));
    EXPECT_EQ(cols[5], fits.at("inertial.slope"));
    EXPECT_EQ(cols[6], fits.at("plateau.level"));
    EXPECT_EQ(cols[7], fits.at("gamma.sxy"));
    EXPECT_EQ(cols[8], fits.at("gamma.sxx"));
    EXPECT_EQ(cols[11], "ok");
  }
  EXPECT_FALSE(s.pooled_gamma.has_value());  // no c2 > 0 points
}

TEST(Sweep, SinglePointEqualsSingleRun) {
  auto c = small_config("write_successor_volumes = false\n");
  c.output_dir = scratch("sweep_one");
  const auto s = run_sweep(c);
  ASSERT_EQ(s.rows.size(), 1u);
  auto single = c;
  single.output_dir = scratch("single_run");
  run_pipeline(single);
  EXPECT_EQ(slurp(c.output_dir / s.rows[0].directory / "fits.txt"), slurp(single.output_dir / "fits.txt"));
  EXPECT_EQ(slurp(c.output_dir / s.rows[0].directory / "pdf.csv"), slurp(single.output_dir / "pdf.csv"));
}

TEST(Sweep, FullGridAndPooledGamma) {
  auto c = parse_config(
      "n_database = 8192\nn_measure = 1024\nbig_t = 128\nk = 10\nwrite_successor_volumes = false\n"
      "hurst_grid = 0.3, 0.4, 0.5, 0.6, 0.7\nc2_grid = 0, 0.025, 0.05, 0.075, 0.1\n");
  c.output_dir = scratch("sweep_grid");
  const auto s = run_sweep(c);
  EXPECT_EQ(s.rows.size(), 25u);
  ASSERT_TRUE(s.pooled_gamma.has_value()) << s.pooled_gamma_error;
  EXPECT_EQ(s.pooled_gamma->n_curves, 20u);
  GammaSums total;
  for (const auto& row : s.rows) {
    if (row.c2 > 0.0) total += row.gamma;
  }
  EXPECT_EQ(gamma_from_sums(total).gamma, s.pooled_gamma->gamma);
  EXPECT_NE(slurp(c.output_dir / "sweep_fits.txt").find("gamma = "), std::string::npos);
}

TEST(Sweep, FailedPointRecordedAndSweepContinues) {
  // A point whose tau grid cannot reach the plateau fails in the statistics stage.
  auto c = small_config("hurst_grid = 0.5, 0.7\nwrite_successor_volumes = false\n");
  c.output_dir = scratch("sweep_fail");
  c.windows.plateau_factor = 3.9;  // fewer than 3 taus above 3.9 T
  const auto s = run_sweep(c);
  ASSERT_EQ(s.rows.size(), 2u);
  for (const auto& row : s.rows) {
    EXPECT_EQ(row.status, "failed:statistics");
    EXPECT_FALSE(row.error.empty());
  }
  EXPECT_NE(slurp(c.output_dir / "summary.csv").find("failed:statistics"), std::string::npos);
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir = scratch("cli");
  fs::path config = dir / "run.cfg";

  void write_config(const std::string& text) {
    fs::create_directories(dir);
    std::ofstream(config) << text;
  }
};

TEST_F(Cli, RunSucceeds) {
  write_config(std::string(kSmall) + "output_dir = " + (dir / "out").string() + "\n");
  EXPECT_EQ(run_cli("run --config " + config.string() + " --threads 2"), 0);
  EXPECT_TRUE(fs::exists(dir / "out" / "manifest.txt"));
}

TEST_F(Cli, ConfigErrorsExitOne) {
  write_config("hurst = 1.5\n");
  EXPECT_EQ(run_cli("run --config " + config.string()), 1);
  write_config("mystery = 3\n");
  EXPECT_EQ(run_cli("run --config " + config.string()), 1);
  EXPECT_EQ(run_cli("run --config " + (dir / "missing.cfg").string()), 1);
  EXPECT_EQ(run_cli("run"), 1);
  EXPECT_EQ(run_cli("frobnicate"), 1);
  write_config(kSmall);
  EXPECT_EQ(run_cli("run --config " + config.string() + " --preset huge"), 1);
}

TEST_F(Cli, RuntimeErrorsExitTwo) {
  write_config(std::string(kSmall) + "output_dir = /proc/fracanalog_cannot_write\n");
  EXPECT_EQ(run_cli("run --config " + config.string()), 2);
}

TEST_F(Cli, SynthWritesSeries) {
  write_config(std::string(kSmall) + "hurst = 0.3\nseed_database = 77\n");
  const auto out = dir / "series.bin";
  EXPECT_EQ(run_cli("synth --config " + config.string() + " --out " + out.string()), 0);
  const auto ts = read_series_binary(out);
  EXPECT_EQ(ts.size(), 16384u);
  ASSERT_TRUE(ts.params.has_value());
  EXPECT_EQ(ts.params->hurst, 0.3);
  EXPECT_EQ(ts.params->seed, 77u);
  EXPECT_EQ(ts.values, synthesize(small_config("hurst = 0.3\nseed_database = 77\n").database_params()).values);
}

TEST_F(Cli, SweepSucceeds) {
  write_config(std::string(kSmall) + "write_successor_volumes = false\nc2_grid = 0, 0.1\noutput_dir = " +
               (dir / "sweep").string() + "\n");
  EXPECT_EQ(run_cli("sweep --config " + config.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "sweep" / "summary.csv"));
  EXPECT_TRUE(fs::is_directory(dir / "sweep" / "H0.5_c20.1"));
}
