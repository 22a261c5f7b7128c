#include "thermint/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "thermint/rng.hpp"
#include "thermint/statistics.hpp"

namespace thermint {
namespace {

using nlohmann::json;

constexpr double kPi = 3.14159265358979323846;

// 1-based line of the first occurrence of "key" in the raw text; 0 if the
// key cannot be located (config built in code, not parsed).
std::size_t line_of_key(const std::string* text, const std::string& key) {
  if (!text) return 0;
  const std::string needle = "\"" + key + "\"";
  const auto pos = text->find(needle);
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(
                 std::count(text->begin(),
                            text->begin() + static_cast<std::ptrdiff_t>(pos),
                            '\n'));
}

[[noreturn]] void fail_at(const std::string& origin, std::size_t line,
                          const std::string& what) {
  std::string msg = origin;
  if (line > 0) {
    msg += ':';
    msg += std::to_string(line);
  }
  msg += ": ";
  msg += what;
  throw ConfigError(msg);
}

double source_variance(double R, double D) { return R * R + D * D / 2.0; }

enum class ValidateMode { run_base, run_point, expect_only };

void validate_impl(const RunConfig& cfg, const std::string& origin,
                   ValidateMode mode, const std::string* text) {
  auto bad = [&](const std::string& key, const std::string& what) {
    fail_at(origin, line_of_key(text, key), what);
  };

  const bool for_run = mode != ValidateMode::expect_only;

  if (cfg.scheme != "passive" && cfg.scheme != "active" &&
      cfg.scheme != "direct")
    bad("scheme", "\"scheme\" must be passive, active or direct");
  if (cfg.scheme == "direct" && for_run)
    bad("scheme",
        "the direct scheme has no estimation pipeline; use the expect "
        "subcommand");
  if (cfg.scheme == "passive" && !(cfg.mu > 0.0 && cfg.mu < 1.0))
    bad("mu", "\"mu\" must lie strictly between 0 and 1");
  if (cfg.scheme == "active" && !(cfg.gain > 0.0))
    bad("gain", "\"gain\" must be positive");

  if (!(cfg.source_R >= 1.0))
    bad("source_R", "\"source_R\" must be >= 1 (the vacuum floor)");
  if (!(cfg.source_D >= 0.0))
    bad("source_D", "\"source_D\" must be non-negative");
  const double V1 = source_variance(cfg.source_R, cfg.source_D);
  if (for_run && !(V1 > 1.0))
    bad("source_R",
        "source variance R^2 + D^2/2 must exceed 1 for estimation");

  if (cfg.source2_R) {
    if (!(*cfg.source2_R >= 1.0))
      bad("source2_R", "\"source2_R\" must be >= 1 (the vacuum floor)");
    if (!(cfg.source2_D >= 0.0))
      bad("source2_D", "\"source2_D\" must be non-negative");
    const double V2 = source_variance(*cfg.source2_R, cfg.source2_D);
    if (!(V2 > V1))
      bad("source2_R",
          "the second source must be stronger than the first (V2 > V1)");
  } else if (cfg.source2_D != 0.0) {
    bad("source2_D", "\"source2_D\" given without \"source2_R\"");
  }

  if (!(cfg.q > 0.0)) bad("q", "\"q\" must be positive");

  auto check_noise_pair = [&](const char* name,
                              const std::optional<double>& T,
                              const std::optional<double>& Veps) {
    const std::string kT = std::string(name) + "_T";
    const std::string kV = std::string(name) + "_Veps";
    if (T.has_value() != Veps.has_value())
      bad(T ? kV : kT,
          "\"" + kT + "\" and \"" + kV + "\" must be given together");
    if (T) {
      if (!(*T > 0.0 && *T <= 1.0))
        bad(kT, "\"" + kT + "\" must lie in (0, 1]");
      if (!(*Veps >= 1.0))
        bad(kV, "\"" + kV + "\" must be >= 1 (thermal noise floor)");
    }
  };
  check_noise_pair("channel", cfg.channel_T, cfg.channel_Veps);
  check_noise_pair("process", cfg.process_T, cfg.process_Veps);

  if (!(cfg.eta > 0.0 && cfg.eta <= 1.0))
    bad("eta", "\"eta\" must lie in (0, 1]");
  if (cfg.shots < 1) bad("shots", "\"shots\" must be >= 1");
  if (cfg.blocks < 1) bad("blocks", "\"blocks\" must be >= 1");

  if (for_run) {
    const auto sel = selector_from_name(cfg.estimator);
    if (!sel) {
      std::string known;
      for (int i = 0; i <= static_cast<int>(Selector::combined); ++i) {
        if (i) known += ", ";
        known += selector_name(static_cast<Selector>(i));
      }
      bad("estimator",
          "unknown estimator \"" + cfg.estimator + "\"; known: " + known);
    }
    const bool two_source_sel =
        *sel == Selector::two_source || *sel == Selector::combined;
    if (two_source_sel && !cfg.source2_R)
      bad("estimator",
          "estimator \"" + cfg.estimator + "\" needs a second source "
          "(\"source2_R\")");
    if (!two_source_sel && cfg.source2_R)
      bad("source2_R",
          "estimator \"" + cfg.estimator + "\" uses a single source; remove "
          "\"source2_R\"");
    if (*sel == Selector::channel_known && !cfg.channel_T)
      bad("estimator",
          "estimator \"channel-known\" needs \"channel_T\" and "
          "\"channel_Veps\"");
    if (cfg.scheme == "active" &&
        !(*sel == Selector::ideal || *sel == Selector::naive))
      bad("estimator",
          "active schemes support only the ideal and naive pipelines");
  }

  if (mode == ValidateMode::run_base) {
    const auto& keys = sweepable_parameters();
    if (cfg.sweep_parameter.empty())
      bad("sweep_parameter", "\"sweep_parameter\" is required for a run");
    if (std::find(keys.begin(), keys.end(), cfg.sweep_parameter) == keys.end()) {
      std::string options;
      for (const std::string& k : keys) {
        if (!options.empty()) options += ", ";
        options += k;
      }
      bad("sweep_parameter", "\"" + cfg.sweep_parameter +
                                 "\" is not sweepable; sweep_parameter must "
                                 "be one of: " +
                                 options);
    }
    if (cfg.sweep_values.empty())
      bad("sweep_values", "\"sweep_values\" must not be empty");
    if (cfg.sweep_parameter == "shots") {
      for (double v : cfg.sweep_values)
        if (!(v >= 1.0) || v != std::floor(v))
          bad("sweep_values",
              "\"shots\" sweep values must be positive integers");
    }
    if (cfg.sweep_parameter == "thermal_ratio") {
      const double V = source_variance(cfg.source_R, cfg.source_D);
      for (double v : cfg.sweep_values)
        if (!(v > 0.0 && v <= 1.0) || v * V < 1.0)
          bad("sweep_values",
              "\"thermal_ratio\" values must lie in [1/V, 1]");
    }
    if ((cfg.sweep_parameter == "source_V" ||
         cfg.sweep_parameter == "thermal_ratio") &&
        cfg.source2_R)
      bad("sweep_parameter",
          "derived source sweeps support single-source runs only");
    if (cfg.out.empty()) bad("out", "\"out\" must not be empty");
    // materialize every point up front so range errors surface before any
    // simulation starts
    for (double v : cfg.sweep_values) {
      const RunConfig point = at_sweep_point(cfg, v);
      validate_impl(point, origin, ValidateMode::run_point, text);
    }
  }
}

double json_double(const json& v, const std::string& key,
                   const std::string& origin, const std::string* text) {
  if (!v.is_number())
    fail_at(origin, line_of_key(text, key), "\"" + key + "\" must be a number");
  return v.get<double>();
}

std::uint64_t json_u64(const json& v, const std::string& key,
                       const std::string& origin, const std::string* text) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return v.get<std::uint64_t>();
  if (v.is_number_float()) {
    const double x = v.get<double>();  // accept exact integers such as 1e5
    if (x >= 0.0 && x <= 1.8e19 && x == std::floor(x))
      return static_cast<std::uint64_t>(x);
  }
  fail_at(origin, line_of_key(text, key),
          "\"" + key + "\" must be a non-negative integer");
}

std::string json_string(const json& v, const std::string& key,
                        const std::string& origin, const std::string* text) {
  if (!v.is_string())
    fail_at(origin, line_of_key(text, key), "\"" + key + "\" must be a string");
  return v.get<std::string>();
}

// Shortest round-trip decimal representation.
std::string fmt_double(double x) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::string fmt_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

bool approx_columns_apply(const RunConfig& point) {
  return point.scheme == "passive" && point.estimator == "ideal" &&
         !point.channel_T && !point.process_T && point.source_D == 0.0 &&
         point.d == 0.0 && !point.source2_R;
}

struct ApproxCells {
  std::optional<double> approx_var;
  std::optional<double> cr;
};

ApproxCells approx_cells(const RunConfig& point) {
  ApproxCells cells;
  if (!approx_columns_apply(point)) return cells;
  const double V = source_variance(point.source_R, point.source_D);
  try {
    cells.approx_var = qhat_normal_approx(point.q, V, point.mu, point.shots)
                           .q_var;
  } catch (const std::exception&) {
    // quadrature refuses near q = 1; leave the cell empty
  }
  const double cr =
      cramer_rao_bound(fisher_information_normal(point.q, V, point.mu,
                                                 point.shots));
  if (std::isfinite(cr)) cells.cr = cr;
  return cells;
}

const char* kCsvHeader =
    "sweep_param,sweep_value,target,truth,mse,bias,variance,approx_variance,"
    "cr_bound,n_shots,n_blocks,clamp_fraction,seed\n";

void append_row(std::string& csv, const std::string& sweep_param,
                double sweep_value, const MseResult& r,
                const ApproxCells& cells, std::uint64_t seed) {
  csv += sweep_param;
  csv += ',';
  csv += fmt_double(sweep_value);
  csv += ',';
  csv += r.parameter;
  csv += ',';
  csv += fmt_double(r.truth);
  csv += ',';
  csv += fmt_double(r.mse);
  csv += ',';
  csv += fmt_double(r.bias);
  csv += ',';
  csv += fmt_double(r.variance);
  csv += ',';
  if (r.parameter == "q" && cells.approx_var) csv += fmt_double(*cells.approx_var);
  csv += ',';
  if (r.parameter == "q" && cells.cr) csv += fmt_double(*cells.cr);
  csv += ',';
  csv += std::to_string(r.shots);
  csv += ',';
  csv += std::to_string(r.blocks);
  csv += ',';
  csv += fmt_double(r.clamp_fraction);
  csv += ',';
  csv += std::to_string(seed);
  csv += '\n';
}

void run_one_config(const RunConfig& cfg, int threads, std::string& csv,
                    std::string& summary) {
  const std::string sweep_label =
      cfg.label.empty() ? cfg.sweep_parameter
                        : cfg.sweep_parameter + "(" + cfg.label + ")";
  summary += "sweep " + sweep_label + " over " +
             std::to_string(cfg.sweep_values.size()) + " points, estimator " +
             cfg.estimator + ", M=" + std::to_string(cfg.blocks) + "\n";
  for (std::size_t i = 0; i < cfg.sweep_values.size(); ++i) {
    const double value = cfg.sweep_values[i];
    const RunConfig point = at_sweep_point(cfg, value);
    const std::uint64_t seed = stream_seed(cfg.seed, i);
    const auto scheme = scheme_of(point);
    const auto process = process_of(point);
    const auto sources = sources_of(point);
    const auto selector = selector_of(point);
    const auto plan = build_plan(selector, sources, point.shots, point.blocks);
    std::vector<MseResult> results;
    try {
      results = empirical_mse(scheme, process, plan, selector,
                              MseOptions{seed, threads});
    } catch (const std::exception& e) {
      throw std::runtime_error("at " + sweep_label + "=" + fmt_double(value) +
                               ": " + e.what());
    }
    const ApproxCells cells = approx_cells(point);
    summary += "  " + sweep_label + "=" + fmt_short(value) + ":";
    for (const MseResult& r : results) {
      append_row(csv, sweep_label, value, r, cells, seed);
      summary += "  " + r.parameter + " mse=" + fmt_short(r.mse);
      if (r.blocks_failed > 0)
        summary += " (" + std::to_string(r.blocks_failed) + " blocks failed)";
    }
    summary += "\n";
  }
}

std::vector<double> log_decades(double lo, double hi) {
  std::vector<double> out;
  for (double v = lo; v <= hi * 1.5; v *= 10.0) out.push_back(v);
  return out;
}

std::vector<double> linear_grid(double lo, double hi, double step) {
  std::vector<double> out;
  for (double v = lo; v <= hi + step / 2.0; v += step)
    out.push_back(std::round(v * 1e12) / 1e12);
  return out;
}

// --- expect table ------------------------------------------------------

double rel_dev(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

void table_row(std::string& out, const char* term, double form,
               std::optional<double> printed, double oracle) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "  %-10s %16.9g %16.9g", term, form, oracle);
  out += buf;
  std::snprintf(buf, sizeof buf, "   %9.2e", rel_dev(form, oracle));
  out += buf;
  if (printed) {
    std::snprintf(buf, sizeof buf, " %16.9g   %9.2e", *printed,
                  rel_dev(*printed, oracle));
    out += buf;
  }
  out += '\n';
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& origin,
                       bool require_sweep) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    const std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    const std::size_t upto = std::min(byte, json_text.size());
    const std::size_t line =
        1 + static_cast<std::size_t>(
                std::count(json_text.begin(),
                           json_text.begin() + static_cast<std::ptrdiff_t>(upto),
                           '\n'));
    fail_at(origin, line, std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) fail_at(origin, 1, "the config must be a JSON object");

  RunConfig cfg;
  const std::string* text = &json_text;
  for (const auto& [key, value] : j.items()) {
    if (key == "scheme")
      cfg.scheme = json_string(value, key, origin, text);
    else if (key == "mu")
      cfg.mu = json_double(value, key, origin, text);
    else if (key == "gain")
      cfg.gain = json_double(value, key, origin, text);
    else if (key == "source_R")
      cfg.source_R = json_double(value, key, origin, text);
    else if (key == "source_D")
      cfg.source_D = json_double(value, key, origin, text);
    else if (key == "source2_R")
      cfg.source2_R = json_double(value, key, origin, text);
    else if (key == "source2_D")
      cfg.source2_D = json_double(value, key, origin, text);
    else if (key == "q")
      cfg.q = json_double(value, key, origin, text);
    else if (key == "Phi")
      cfg.Phi = json_double(value, key, origin, text);
    else if (key == "d")
      cfg.d = json_double(value, key, origin, text);
    else if (key == "alpha")
      cfg.alpha = json_double(value, key, origin, text);
    else if (key == "beta")
      cfg.beta = json_double(value, key, origin, text);
    else if (key == "channel_T")
      cfg.channel_T = json_double(value, key, origin, text);
    else if (key == "channel_Veps")
      cfg.channel_Veps = json_double(value, key, origin, text);
    else if (key == "process_T")
      cfg.process_T = json_double(value, key, origin, text);
    else if (key == "process_Veps")
      cfg.process_Veps = json_double(value, key, origin, text);
    else if (key == "eta")
      cfg.eta = json_double(value, key, origin, text);
    else if (key == "shots")
      cfg.shots = json_u64(value, key, origin, text);
    else if (key == "blocks")
      cfg.blocks = json_u64(value, key, origin, text);
    else if (key == "seed")
      cfg.seed = json_u64(value, key, origin, text);
    else if (key == "estimator")
      cfg.estimator = json_string(value, key, origin, text);
    else if (key == "sweep_parameter")
      cfg.sweep_parameter = json_string(value, key, origin, text);
    else if (key == "sweep_values") {
      if (!value.is_array())
        fail_at(origin, line_of_key(text, key),
                "\"sweep_values\" must be an array of numbers");
      for (const auto& v : value)
        cfg.sweep_values.push_back(json_double(v, key, origin, text));
    } else if (key == "out")
      cfg.out = json_string(value, key, origin, text);
    else if (key == "label")
      cfg.label = json_string(value, key, origin, text);
    else
      fail_at(origin, line_of_key(text, key), "unknown key \"" + key + "\"");
  }

  validate_impl(cfg, origin,
                require_sweep ? ValidateMode::run_base
                              : ValidateMode::expect_only,
                text);
  return cfg;
}

void validate_config(const RunConfig& cfg, const std::string& origin,
                     bool require_sweep) {
  validate_impl(cfg, origin,
                require_sweep ? ValidateMode::run_base
                              : ValidateMode::expect_only,
                nullptr);
}

const std::vector<std::string>& sweepable_parameters() {
  static const std::vector<std::string> keys{
      "mu",        "gain",        "source_R",  "source_D",  "source2_R",
      "source2_D", "q",           "Phi",       "d",         "alpha",
      "beta",      "channel_T",   "channel_Veps", "process_T",
      "process_Veps", "eta",      "shots",     "thermal_ratio", "source_V"};
  return keys;
}

RunConfig at_sweep_point(const RunConfig& base, double value) {
  RunConfig c = base;
  c.sweep_parameter.clear();
  c.sweep_values.clear();
  const std::string& p = base.sweep_parameter;
  if (p == "mu")
    c.mu = value;
  else if (p == "gain")
    c.gain = value;
  else if (p == "source_R")
    c.source_R = value;
  else if (p == "source_D")
    c.source_D = value;
  else if (p == "source2_R")
    c.source2_R = value;
  else if (p == "source2_D")
    c.source2_D = value;
  else if (p == "q")
    c.q = value;
  else if (p == "Phi")
    c.Phi = value;
  else if (p == "d")
    c.d = value;
  else if (p == "alpha")
    c.alpha = value;
  else if (p == "beta")
    c.beta = value;
  else if (p == "channel_T")
    c.channel_T = value;
  else if (p == "channel_Veps")
    c.channel_Veps = value;
  else if (p == "process_T")
    c.process_T = value;
  else if (p == "process_Veps")
    c.process_Veps = value;
  else if (p == "eta")
    c.eta = value;
  else if (p == "shots")
    c.shots = static_cast<std::uint64_t>(std::llround(value));
  else if (p == "thermal_ratio") {
    const double V = source_variance(base.source_R, base.source_D);
    c.source_R = std::sqrt(value * V);
    c.source_D = std::sqrt(std::max(0.0, 2.0 * V * (1.0 - value)));
  } else if (p == "source_V") {
    const double V = source_variance(base.source_R, base.source_D);
    const double scale = std::sqrt(value / V);
    c.source_R = base.source_R * scale;
    c.source_D = base.source_D * scale;
  } else
    throw ConfigError("unknown sweep parameter \"" + p + "\"");
  return c;
}

SchemeConfig scheme_of(const RunConfig& cfg) {
  SchemeConfig s = cfg.scheme == "passive" ? SchemeConfig::passive(cfg.mu)
                   : cfg.scheme == "active" ? SchemeConfig::active(cfg.gain)
                                            : SchemeConfig::direct();
  if (cfg.channel_T)
    s.channel_noise = NoiseChannel{*cfg.channel_T, *cfg.channel_Veps};
  if (cfg.process_T)
    s.process_noise = NoiseChannel{*cfg.process_T, *cfg.process_Veps};
  s.eta = cfg.eta;
  return s;
}

ProcessParams process_of(const RunConfig& cfg) {
  return ProcessParams(cfg.q, cfg.Phi, cfg.d, cfg.alpha, cfg.beta);
}

std::vector<Source> sources_of(const RunConfig& cfg) {
  std::vector<Source> out{Source(cfg.source_R, cfg.source_D)};
  if (cfg.source2_R) out.emplace_back(*cfg.source2_R, cfg.source2_D);
  return out;
}

Selector selector_of(const RunConfig& cfg) {
  const auto sel = selector_from_name(cfg.estimator);
  if (!sel) throw ConfigError("unknown estimator \"" + cfg.estimator + "\"");
  return *sel;
}

RunOutput execute_run(const RunConfig& cfg, int threads) {
  return execute_batch({cfg}, threads);
}

RunOutput execute_batch(const std::vector<RunConfig>& configs, int threads) {
  for (const RunConfig& cfg : configs)
    validate_config(cfg, "config", /*require_sweep=*/true);
  RunOutput out;
  out.csv = kCsvHeader;
  for (const RunConfig& cfg : configs)
    run_one_config(cfg, threads, out.csv, out.summary);
  return out;
}

const std::vector<std::string>& preset_ids() {
  static const std::vector<std::string> ids{
      "fig2a", "fig2b", "fig3", "fig4a", "fig4b",
      "fig5",  "supp7", "supp8", "supp9"};
  return ids;
}

std::vector<RunConfig> preset_configs(const std::string& id, bool full) {
  RunConfig base;
  base.blocks = full ? 10000 : 1000;
  base.seed = 7;
  base.shots = 10000;
  base.mu = 0.3;
  base.gain = 0.5;
  base.source_R = 5.0;
  base.source_D = 10.0;
  base.q = 1.23;
  base.Phi = 0.63;
  base.d = 1.67;
  base.out = id + ".csv";
  const std::vector<double> n_grid = log_decades(1e3, 1e6);

  auto bs_opa_pair = [&](RunConfig c) {
    RunConfig bs = c;
    bs.scheme = "passive";
    bs.label = "bs";
    RunConfig opa = c;
    opa.scheme = "active";
    opa.label = "opa";
    return std::vector<RunConfig>{bs, opa};
  };

  if (id == "fig2a") {
    RunConfig c = base;
    c.sweep_parameter = "mu";
    c.sweep_values = linear_grid(0.05, 0.95, 0.05);
    return {c};
  }
  if (id == "fig2b") {
    RunConfig c = base;
    c.scheme = "active";
    c.sweep_parameter = "gain";
    c.sweep_values = linear_grid(0.1, 1.2, 0.1);
    return {c};
  }
  if (id == "fig3") {
    RunConfig c = base;
    c.sweep_parameter = "shots";
    c.sweep_values = n_grid;
    return bs_opa_pair(c);
  }
  if (id == "fig4a") {
    RunConfig c = base;
    c.source_R = std::sqrt(50.0);  // V = 100 split evenly at the base point
    c.source_D = 10.0;
    c.sweep_parameter = "thermal_ratio";
    c.sweep_values = linear_grid(0.05, 1.0, 0.05);
    c.sweep_values.insert(c.sweep_values.begin(), 0.01);
    return bs_opa_pair(c);
  }
  if (id == "fig4b") {
    RunConfig c = base;
    c.source_R = 2.0;  // R = D: half thermal, half coherent at every point
    c.source_D = 2.0;
    c.sweep_parameter = "source_V";
    c.sweep_values = {1.5, 3, 6, 12, 25, 50, 100, 250, 500, 1000};
    return bs_opa_pair(c);
  }
  if (id == "fig5") {
    RunConfig c = base;
    c.estimator = "combined";
    c.process_T = 0.9;
    c.process_Veps = 1.1;
    c.channel_T = 0.7;
    c.channel_Veps = 1.3;
    c.source_D = 0.0;
    c.source2_D = 0.0;
    c.sweep_parameter = "shots";
    c.sweep_values = n_grid;
    RunConfig weak = c;
    weak.source_R = std::sqrt(10.0);
    weak.source2_R = std::sqrt(40.0);
    weak.label = "V1=10";
    RunConfig strong = c;
    strong.source_R = std::sqrt(1000.0);
    strong.source2_R = std::sqrt(4000.0);
    strong.label = "V1=1000";
    return {weak, strong};
  }
  if (id == "supp7") {
    RunConfig c = base;
    c.mu = 0.2;
    c.source_R = 5.0;
    c.source_D = 0.0;
    c.q = 3.0;
    c.Phi = 0.0;
    c.d = 0.0;
    c.sweep_parameter = "shots";
    c.sweep_values = n_grid;
    return {c};
  }
  if (id == "supp8") {
    RunConfig c = base;
    c.source_R = std::sqrt(75.0);
    c.source_D = 0.0;
    c.channel_T = 0.9;
    c.channel_Veps = 1.1;
    c.sweep_parameter = "shots";
    c.sweep_values = n_grid;
    RunConfig naive = c;
    naive.estimator = "naive";
    naive.label = "naive";
    RunConfig calibrated = c;
    calibrated.estimator = "channel-calibrated";
    calibrated.label = "calibrated";
    RunConfig known = c;
    known.estimator = "channel-known";
    known.label = "known";
    return {naive, calibrated, known};
  }
  if (id == "supp9") {
    RunConfig c = base;
    c.source_R = std::sqrt(75.0);
    c.source_D = 0.0;
    c.process_T = 0.9;
    c.process_Veps = 1.1;
    c.sweep_parameter = "shots";
    c.sweep_values = n_grid;
    RunConfig naive = c;
    naive.estimator = "naive";
    naive.label = "naive";
    RunConfig two = c;
    two.estimator = "two-source";
    two.source2_R = std::sqrt(300.0);
    two.source2_D = 0.0;
    two.label = "two-source";
    return {naive, two};
  }

  std::string known;
  for (const std::string& k : preset_ids()) {
    if (!known.empty()) known += ", ";
    known += k;
  }
  throw ConfigError("unknown preset \"" + id + "\"; known ids: " + known);
}

std::string expect_table(const RunConfig& cfg) {
  validate_config(cfg, "config", /*require_sweep=*/false);
  const auto process = process_of(cfg);
  const double V = source_variance(cfg.source_R, cfg.source_D);
  const Source src(cfg.source_R, cfg.source_D);

  std::string out;
  char buf[160];

  if (cfg.scheme == "direct") {
    auto scheme = SchemeConfig::direct();
    const double oracle = oracle_expected(scheme, process, src).plus;
    const double form = expected_direct(V, cfg.q, cfg.d);
    const double printed = expected_direct_printed(V, cfg.q, cfg.d);
    out += "direct scheme, V=" + fmt_short(V) + "\n";
    out +=
        "  term          closed form           oracle    rel. dev. "
        "    printed form   rel. dev.\n";
    table_row(out, "intensity", form, printed, oracle);
    return out;
  }

  const bool active = cfg.scheme == "active";
  std::optional<NoiseChannel> channel, proc_noise;
  if (cfg.channel_T) channel = NoiseChannel{*cfg.channel_T, *cfg.channel_Veps};
  if (cfg.process_T)
    proc_noise = NoiseChannel{*cfg.process_T, *cfg.process_Veps};
  const bool printed_applies = active && !channel && !proc_noise;

  std::snprintf(buf, sizeof buf, "%s scheme, V=%s, %s=%s\n",
                active ? "active" : "passive", fmt_short(V).c_str(),
                active ? "gain" : "mu",
                fmt_short(active ? cfg.gain : cfg.mu).c_str());
  out += buf;
  out +=
      "  term          closed form           oracle    rel. dev. ";
  if (printed_applies) out += "    printed form   rel. dev.";
  out += "\n";

  for (double phi : {0.0, kPi / 2.0}) {
    auto scheme = scheme_of(cfg);
    scheme.phi_ref = phi;
    const Expectation oracle = oracle_expected(scheme, process, src);
    const Expectation form =
        active ? expected_active(process, V, cfg.gain, cfg.gain, phi, channel,
                                 proc_noise)
               : expected_passive(process, V, cfg.mu, phi, channel,
                                  proc_noise);
    std::optional<Expectation> printed;
    if (printed_applies)
      printed = expected_active_printed(process, V, cfg.gain, cfg.gain, phi);
    const char* suffix = phi == 0.0 ? "@0" : "@90";
    const std::string mterm = std::string("i-") + suffix;
    const std::string pterm = std::string("i+") + suffix;
    table_row(out, mterm.c_str(), form.minus,
              printed ? std::optional<double>(printed->minus) : std::nullopt,
              oracle.minus);
    table_row(out, pterm.c_str(), form.plus,
              printed ? std::optional<double>(printed->plus) : std::nullopt,
              oracle.plus);
  }
  return out;
}

}  // namespace thermint
