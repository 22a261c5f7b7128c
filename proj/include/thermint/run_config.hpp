#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "thermint/estimators.hpp"

namespace thermint {

/// Configuration or validation failure; the message carries
/// "<origin>:<line>: <what>" when the offending key could be located.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One experiment description. Mirrors the flat-key JSON schema one to one;
/// see README for the key-by-key documentation.
struct RunConfig {
  std::string scheme = "passive";  // passive | active | direct
  double mu = 0.5;                 // splitter reflectivity (passive)
  double gain = 0.5;               // splitter/combiner gain (active)

  double source_R = 1.0;
  double source_D = 0.0;
  std::optional<double> source2_R;  // second source for two-source pipelines
  double source2_D = 0.0;

  double q = 1.0;  // process truth
  double Phi = 0.0;
  double d = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  std::optional<double> channel_T;  // transmission channel, both-or-neither
  std::optional<double> channel_Veps;
  std::optional<double> process_T;  // process-arm loss, both-or-neither
  std::optional<double> process_Veps;
  double eta = 1.0;

  std::uint64_t shots = 10000;  // N per setting
  std::uint64_t blocks = 1000;  // M repetitions
  std::uint64_t seed = 1;
  std::string estimator = "ideal";

  std::string sweep_parameter;  // exactly one per run
  std::vector<double> sweep_values;

  std::string out = "results.csv";
  std::string label;  // optional qualifier appended to the sweep_param column
};

/// Parse and validate a JSON config. `origin` names the source (file path or
/// preset id) in error messages. `require_sweep` is on for `run`, off for
/// `expect` (which evaluates the base point only).
RunConfig parse_config(const std::string& json_text, const std::string& origin,
                       bool require_sweep = true);

/// Semantic validation alone (used on programmatically built configs and
/// re-run on every materialized sweep point before any simulation starts).
void validate_config(const RunConfig& cfg, const std::string& origin,
                     bool require_sweep = true);

/// Sweepable keys: every scalar field plus the derived sweeps
/// `thermal_ratio` (R^2/V at fixed total variance) and `source_V` (total
/// variance at fixed thermal ratio).
const std::vector<std::string>& sweepable_parameters();

/// The config with one sweep value substituted in (sweep block cleared).
RunConfig at_sweep_point(const RunConfig& base, double value);

// Resolved simulation inputs for one concrete (post-sweep) config.
SchemeConfig scheme_of(const RunConfig& cfg);
ProcessParams process_of(const RunConfig& cfg);
std::vector<Source> sources_of(const RunConfig& cfg);
Selector selector_of(const RunConfig& cfg);

struct RunOutput {
  std::string csv;      // complete file body: header plus one row per
                        // (sweep value x estimated parameter), LF endings
  std::string summary;  // human-readable per-point digest for stdout
};

/// Execute all sweep points of one config. Per-point master seeds derive
/// from cfg.seed via stream_seed(seed, point index), so any row can be
/// reproduced in isolation. threads = 0 picks hardware concurrency.
RunOutput execute_run(const RunConfig& cfg, int threads = 0);

/// Concatenate runs that share one CSV (sub-runs of a preset): single
/// header, rows in order, summaries joined.
RunOutput execute_batch(const std::vector<RunConfig>& configs,
                        int threads = 0);

/// Known figure-reproduction ids.
const std::vector<std::string>& preset_ids();

/// Baked-in configs for an id (several sub-runs when a figure overlays
/// schemes or estimators). `full` restores M = 10^4; default is M = 10^3.
/// Unknown ids throw ConfigError listing the known ids.
std::vector<RunConfig> preset_configs(const std::string& id, bool full);

/// Analytic expectation table for the config's base point: closed forms and
/// the moment-propagation oracle side by side with relative deviations,
/// including the commonly quoted printed variants where those differ.
std::string expect_table(const RunConfig& cfg);

}  // namespace thermint
