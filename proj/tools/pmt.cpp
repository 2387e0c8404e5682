#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pmt/error.hpp"
#include "pmt/harness.hpp"
#include "pmt/parallel.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

int run_command(const std::string& config_path, const std::string& out, const std::vector<int>& resolutions,
                bool quiet) {
  pmt::ExperimentConfig config = pmt::load_config(config_path);
  if (!out.empty()) config.output = out;
  if (!resolutions.empty()) {
    for (std::size_t i = 0; i < resolutions.size(); ++i) {
      if (resolutions[i] < 8 || (i > 0 && resolutions[i] <= resolutions[i - 1])) {
        throw pmt::ConfigError("--resolution-override: expected a strictly increasing list of values >= 8");
      }
    }
    config.resolutions = resolutions;
  }
  const pmt::RunRecord record = pmt::run(config, {quiet, true});
  for (const pmt::VerdictRecord& v : record.verdicts) {
    if (!quiet || v.status != pmt::Verdict::Pass) {
      std::cout << pmt::status_label(v) << "  " << v.rule << "  " << v.detail << "\n";
    }
  }
  std::cout << "record written to " << (std::filesystem::path(config.output) / "record.jsonl").string() << "\n";
  return record.exit_code();
}

int table_command(const std::string& path) {
  std::filesystem::path record(path);
  if (std::filesystem::is_directory(record)) record /= "record.jsonl";
  const std::vector<pmt::ResolutionSample> ladder = pmt::read_ladder(record.string());
  if (ladder.size() < 3) {
    std::cerr << "error: " << record.string() << " holds " << ladder.size()
              << " resolution record(s); the table needs at least three\n";
    return kExitUsage;
  }
  std::cout << pmt::format_convergence_table(pmt::convergence_table(ladder));
  return kExitPass;
}

int list_metrics_command() {
  for (const pmt::MetricFamilyInfo& f : pmt::metric_families()) {
    std::cout << f.name << "\n  parameters: " << f.parameters << "\n  " << f.description << "\n";
  }
  return kExitPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Positive mass toolkit: mass extrapolation, harmonic coordinates and the mass lower bound"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", pmt::toolkit_version());

  std::string config_path;
  std::string out;
  int workers = 0;
  std::vector<int> resolutions;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "Run the experiment described by a config file");
  run->add_option("--config", config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out, "Output directory (overrides the config)");
  run->add_option("--resolution-override", resolutions, "Comma-separated resolution ladder")->delimiter(',');

  CLI::App* table = app.add_subcommand("table", "Print the convergence table of a finished run");
  std::string record_path;
  table->add_option("record", record_path, "record.jsonl or its directory");
  table->add_option("--out", out, "Output directory of the run");

  app.add_subcommand("list-metrics", "List metric families and their parameters");
  CLI::App* describe = app.add_subcommand("describe-config", "Print the config schema, or a parsed config with defaults");
  describe->add_option("--config", config_path, "Config to parse and echo")->check(CLI::ExistingFile);

  app.add_option("--workers", workers, "Worker threads (default: PMT_WORKERS or 1)")->check(CLI::PositiveNumber);
  app.add_flag("--quiet", quiet, "Suppress progress output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  if (workers > 0) pmt::set_worker_count(workers);

  try {
    if (run->parsed()) return run_command(config_path, out, resolutions, quiet);
    if (table->parsed()) {
      const std::string path = !record_path.empty() ? record_path : out;
      if (path.empty()) {
        std::cerr << "error: table needs a record path or --out\n";
        return kExitUsage;
      }
      return table_command(path);
    }
    if (app.got_subcommand("list-metrics")) return list_metrics_command();
    if (describe->parsed()) {
      if (config_path.empty()) {
        std::cout << pmt::describe_config_schema();
      } else {
        std::cout << pmt::echo_config(pmt::load_config(config_path)) << "\n";
      }
      return kExitPass;
    }
  } catch (const pmt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pmt::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitUsage;
}
