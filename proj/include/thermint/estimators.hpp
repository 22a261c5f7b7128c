#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermint/interferometer.hpp"

namespace thermint {

/// Diagnostic conditions raised by the estimators. Every clamp or fallback
/// that changed an output leaves one of these behind.
enum class Flag {
  clamped_c,                 // fringe amplitude below the q = 1 boundary
  negative_radicand,         // photon budget left nothing for the displacement
  degenerate_interference,   // setup cannot produce a fringe
  calibration_indeterminate, // lossless channel hides the noise variance
  ill_conditioned,           // source-strength gap too small to separate terms
  clamped_T,                 // transmittance estimate forced into its range
};

const char* flag_name(Flag f);

/// Result of one estimation pipeline: point estimates for the process
/// parameters that are in scope for the pipeline, nuisance estimates where
/// the pipeline produces them, and a record of every clamp/assumption.
struct EstimateReport {
  double Phi = 0.0;
  std::optional<double> q;
  std::optional<double> d;
  std::optional<double> T_channel;     // transmission-channel loss
  std::optional<double> Veps_channel;  // transmission-channel noise variance
  std::optional<double> T_process;     // loss inside the process arm
  std::vector<Flag> flags;
  std::vector<std::string> assumptions;

  bool has(Flag f) const;
};

struct ChannelEstimate {
  double T = 1.0;
  double Veps = 1.0;
  std::vector<Flag> flags;
};

// Difference- and sum-channel means at reference phases 0 and pi/2 invert to
// (Phi, q, d) for a splitter of reflectivity mu and source second moment V.
EstimateReport estimate_ideal_passive(const SettingStats& at0,
                                      const SettingStats& at90, double V,
                                      double mu);

// Same inversion for the amplifier scheme with equal splitter/combiner gain r:
// the fringe lives in the sum channel, the photon budget in the difference.
EstimateReport estimate_ideal_active(const SettingStats& at0,
                                     const SettingStats& at90, double V,
                                     double r);

// Transmission-channel nuisances from a process-bypass round.
ChannelEstimate calibrate_channel(const SettingStats& cal, double V, double mu);

// Undo a known (or calibrated) transmission channel, then invert as ideal.
EstimateReport estimate_with_channel_noise(const SettingStats& at0,
                                           const SettingStats& at90, double T,
                                           double Veps, double V, double mu);

// Process-arm loss elimination with two sources of different strength.
// Recovers (Phi, q) and the arm loss T without knowing the arm noise; d is
// only available under an assumed noise variance, recorded in the report.
EstimateReport estimate_with_process_noise(
    const SettingStats& s1_at0, const SettingStats& s1_at90,
    const SettingStats& s2_at0, const SettingStats& s2_at90, double V1,
    double V2, double mu, double assumed_Veps = 1.0);

// Full pipeline when both error types act at once: calibrate the
// transmission channel, correct all process-round stats, then run the
// two-source elimination. d and the process noise stay entangled and are
// not reported.
EstimateReport estimate_combined(const SettingStats& cal,
                                 const SettingStats& s1_at0,
                                 const SettingStats& s1_at90,
                                 const SettingStats& s2_at0,
                                 const SettingStats& s2_at90, double V1,
                                 double V2, double mu);

// Unbias intensity statistics for detector efficiency eta in (0, 1].
SettingStats correct_efficiency(const SettingStats& stats, double eta);

/// Estimation pipelines selectable by name in configs. `naive` runs the
/// ideal inversion on stats that may carry unmodeled noise (bias study);
/// `channel_known` consumes the scheme's true channel parameters.
enum class Selector {
  ideal,
  naive,
  channel_known,
  channel_calibrated,
  two_source,
  combined,
};

const char* selector_name(Selector s);
std::optional<Selector> selector_from_name(std::string_view name);

// Number of measurement settings the selector consumes, in the fixed layout
// produced by build_plan below.
int selector_setting_count(Selector s);

// Canonical measurement plan for a selector: reference phases 0 and pi/2 per
// source, preceded by a process-bypass calibration round where the pipeline
// needs one. Two-source pipelines expect exactly two sources, the rest one.
ExperimentPlan build_plan(Selector s, const std::vector<Source>& sources,
                          std::uint64_t shots, std::uint64_t blocks);

// Dispatch a pipeline over per-setting statistics laid out by build_plan.
// Stats must already be efficiency-corrected.
EstimateReport run_pipeline(Selector s, const SchemeConfig& scheme,
                            std::span<const SettingStats> stats,
                            const std::vector<Source>& sources);

}  // namespace thermint
