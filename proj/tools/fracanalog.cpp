#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "fracanalog/fracanalog.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw fracanalog::ConfigError(0, "cannot read config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct Common {
  std::string config_path;
  std::string preset;
  std::string output_dir;
  int threads = -1;

  fracanalog::RunConfig load() const {
    std::optional<std::string> preset_override;
    if (!preset.empty()) preset_override = preset;
    auto c = fracanalog::parse_config(read_file(config_path), preset_override);
    if (threads >= 0) c.threads = static_cast<unsigned>(threads);
    if (!output_dir.empty()) c.output_dir = output_dir;
    return c;
  }
};

void add_common(CLI::App* cmd, Common& opts) {
  cmd->add_option("--config", opts.config_path, "key=value configuration file")->required();
  cmd->add_option("--preset", opts.preset, "size preset applied before the file's keys")
      ->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--threads", opts.threads, "worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--output-dir", opts.output_dir, "override output_dir");
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analogue-volume statistics of regularized fractional processes"};
  app.set_version_flag("--version", std::string(fracanalog::kVersion));
  app.require_subcommand(1);

  Common run_opts, sweep_opts, synth_opts;
  auto* run = app.add_subcommand("run", "synthesize, search analogues and write all outputs");
  add_common(run, run_opts);
  auto* sweep = app.add_subcommand("sweep", "run every point of hurst_grid x c2_grid");
  add_common(sweep, sweep_opts);
  auto* synth = app.add_subcommand("synth", "synthesize one series and write it in binary form");
  add_common(synth, synth_opts);
  std::string synth_out, synth_csv, which = "database";
  synth->add_option("--out", synth_out, "binary series file")->required();
  synth->add_option("--csv", synth_csv, "also export as CSV");
  synth->add_option("--which", which, "realization to synthesize")->check(CLI::IsMember({"database", "measure"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (run->parsed()) {
      const auto config = run_opts.load();
      print_warnings(fracanalog::config_warnings(config));
      const auto result = fracanalog::run_pipeline(config);
      std::cout << fracanalog::fits_text(result);
      std::cerr << "outputs written to " << config.output_dir.string() << '\n';
    } else if (sweep->parsed()) {
      const auto config = sweep_opts.load();
      print_warnings(fracanalog::config_warnings(config));
      const auto result = fracanalog::run_sweep(config);
      std::cout << fracanalog::summary_csv(result.rows) << fracanalog::sweep_fits_text(result);
      for (const auto& row : result.rows) {
        if (row.status != "ok") return kRuntimeError;
      }
    } else if (synth->parsed()) {
      const auto config = synth_opts.load();
      const auto params = which == "measure" ? config.measure_params() : config.database_params();
      const auto series = fracanalog::synthesize(params);
      fracanalog::write_series_binary(synth_out, series);
      if (!synth_csv.empty()) fracanalog::write_series_csv(synth_csv, series);
    }
  } catch (const fracanalog::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const fracanalog::PipelineError& e) {
    std::cerr << "error in stage " << e.stage() << ": " << e.what() << '\n';
    return e.stage() == "config" ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kOk;
}
