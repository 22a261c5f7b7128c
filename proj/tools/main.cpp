#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "thermint/run_config.hpp"

namespace {

using namespace thermint;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> blocks;
  std::optional<std::uint64_t> shots;
  std::optional<std::string> out;
  bool full = false;
  int threads = 0;
};

void add_common_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "master seed (overrides the config)");
  cmd->add_option("--blocks", o.blocks, "Monte-Carlo repetitions M");
  cmd->add_option("--shots", o.shots, "shots per setting N");
  cmd->add_option("--out", o.out, "output CSV path");
  cmd->add_flag("--full", o.full, "restore M = 10^4 (presets default to 10^3)");
  cmd->add_option("--threads", o.threads,
                  "worker threads (0 = hardware concurrency)");
}

void apply_overrides(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.blocks)
    cfg.blocks = *o.blocks;
  else if (o.full)
    cfg.blocks = 10000;
  if (o.shots) cfg.shots = *o.shots;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << content;
  if (!out) throw std::runtime_error(path + ": write failed");
}

std::size_t row_count(const std::string& csv) {
  std::size_t rows = 0;
  for (char c : csv)
    if (c == '\n') ++rows;
  return rows > 0 ? rows - 1 : 0;  // minus the header
}

void finish(const RunOutput& result, const std::string& out_path) {
  write_file(out_path, result.csv);
  std::cout << result.summary;
  std::cout << "wrote " << out_path << " (" << row_count(result.csv)
            << " rows)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "interferometric estimation of an unknown Gaussian process: "
      "experiment sweeps, figure presets and analytic expectation tables"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_id;
  Overrides run_o, rep_o;

  CLI::App* run = app.add_subcommand(
      "run", "execute a sweep described by a JSON config, write a CSV");
  run->add_option("--config", config_path, "JSON config path")->required();
  add_common_flags(run, run_o);

  std::string preset_help = "figure id (";
  for (std::size_t i = 0; i < preset_ids().size(); ++i)
    preset_help += (i ? ", " : "") + preset_ids()[i];
  preset_help += ")";
  CLI::App* rep = app.add_subcommand(
      "reproduce", "run the baked-in config for a known figure");
  rep->add_option("id", preset_id, preset_help)->required();
  add_common_flags(rep, rep_o);

  std::string expect_path;
  CLI::App* exp = app.add_subcommand(
      "expect",
      "print analytic detector expectations for a config (no sampling)");
  exp->add_option("--config", expect_path, "JSON config path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      RunConfig cfg = parse_config(slurp(config_path), config_path);
      apply_overrides(cfg, run_o);
      if (run_o.out) cfg.out = *run_o.out;
      finish(execute_run(cfg, run_o.threads), cfg.out);
    } else if (rep->parsed()) {
      std::vector<RunConfig> configs = preset_configs(preset_id, rep_o.full);
      for (RunConfig& cfg : configs) apply_overrides(cfg, rep_o);
      const std::string out_path =
          rep_o.out ? *rep_o.out : preset_id + ".csv";
      finish(execute_batch(configs, rep_o.threads), out_path);
    } else {
      RunConfig cfg = parse_config(slurp(expect_path), expect_path,
                                   /*require_sweep=*/false);
      std::cout << expect_table(cfg);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
