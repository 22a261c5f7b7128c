#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "thermint/gaussian.hpp"

namespace thermint {

// Interferometer wiring used by the oracle and the shot simulator alike:
// mode 0 is the reference arm, mode 1 the signal arm. The source enters the
// signal input port, vacuum the reference port. The splitter acts on
// (mode 0, mode 1); with the beam-splitter convention of gaussian.hpp this
// leaves a fraction mu of the source variance in the signal arm. The signal
// arm then passes the unknown process (and, if configured, the process-type
// noise channel), the reference arm the phase phi_ref; an optional
// transmission channel acts on both arms; the combiner closes the loop.
// Detector intensities are i0 (reference port) and i1 (signal port).
// Difference channel: i- = i0 - i1 for a beam-splitter combiner and
// i- = i1 - i0 for an OPA combiner (the sign that makes the interference
// fringe amplitude positive at Phi = phi_ref = 0); i+ = i0 + i1 always.

/// Unknown Gaussian process: squeeze by q = exp(w) along axis alpha, rotate
/// by Phi, displace by d at angle beta. Stored with the canonical q >= 1
/// representative (q < 1 flips to 1/q with alpha += pi/2, d < 0 flips to -d
/// with beta += pi; both are exact identities).
struct ProcessParams {
  double q = 1.0;
  double Phi = 0.0;
  double d = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  ProcessParams() = default;
  ProcessParams(double q_, double Phi_, double d_, double alpha_ = 0.0,
                double beta_ = 0.0);

  double w() const { return std::log(q); }
};

/// Splitter or combiner element.
struct OpticalElement {
  enum class Kind { beam_splitter, opa };
  Kind kind = Kind::beam_splitter;
  double param = 0.5;  // reflectivity mu, or two-mode squeezing gain r
};

/// Full measurement-scheme description. Both splitter and combiner empty
/// means the direct scheme (process straight onto one detector).
struct SchemeConfig {
  std::optional<OpticalElement> splitter;
  std::optional<OpticalElement> combiner;
  double phi_ref = 0.0;
  std::optional<NoiseChannel> channel_noise;   // both arms, before combiner
  std::optional<NoiseChannel> process_noise;   // signal arm, after process
  double eta = 1.0;                            // detector efficiency

  static SchemeConfig direct();
  static SchemeConfig passive(double mu, double phi_ref = 0.0);
  static SchemeConfig active(double r, double phi_ref = 0.0);

  bool is_direct() const { return !splitter && !combiner; }
  bool has_opa() const;
  // Mixed BS/OPA pairs carry no first-order fringe; flagged for diagnostics.
  bool interference_expected() const;
  int detector_sign() const;
  void validate() const;
};

/// One measurement setting: which source enters, the reference phase, whether
/// the process (with its noise) is in the loop, and the shot budget.
struct PlanSetting {
  int source_index = 0;
  double phi_ref = 0.0;
  bool apply_process = true;
  std::uint64_t shots = 0;
};

struct ExperimentPlan {
  std::vector<Source> sources;
  std::vector<PlanSetting> settings;
  std::uint64_t blocks = 1;

  void validate() const;
};

/// Per-setting shot summary. Variances are unbiased sample variances of the
/// per-shot values (zero when shots == 1).
struct SettingStats {
  double mean_minus = 0.0;
  double mean_plus = 0.0;
  double var_minus = 0.0;
  double var_plus = 0.0;
  std::uint64_t shots = 0;
};

struct Expectation {
  double minus = 0.0;
  double plus = 0.0;
};

// --- Closed-form expectations (phase-averaged) ---------------------------

// Signal/reference arm second moments behind a splitter.
double arm_variance_signal(double V, double mu);     // mu V + 1 - mu
double arm_variance_reference(double V, double mu);  // mu + V - mu V
double arm_variance_signal_opa(double V, double r);     // cosh^2 r V + sinh^2 r
double arm_variance_reference_opa(double V, double r);  // sinh^2 r V + cosh^2 r

// Direct scheme: single detector behind the process.
double expected_direct(double V, double q, double d);
// Variant with the two-detector offset (-1 instead of -1/2); kept only for
// the `expect` diagnostic, deviates from the oracle by exactly 1/2.
double expected_direct_printed(double V, double q, double d);

Expectation expected_passive(
    const ProcessParams& p, double V, double mu, double phi_ref,
    const std::optional<NoiseChannel>& channel = std::nullopt,
    const std::optional<NoiseChannel>& process_noise = std::nullopt);

Expectation expected_active(
    const ProcessParams& p, double V, double r1, double r2, double phi_ref,
    const std::optional<NoiseChannel>& channel = std::nullopt,
    const std::optional<NoiseChannel>& process_noise = std::nullopt);
// Variant using signal/reference variances linear in cosh/sinh; kept only
// for the `expect` diagnostic (not symplectically realizable).
Expectation expected_active_printed(const ProcessParams& p, double V,
                                    double r1, double r2, double phi_ref);

// Calibration round expectations (q = 1, d = 0, Phi = phi_ref = 0) under a
// transmission channel.
Expectation expected_calibration(double V, double mu, const NoiseChannel& ch);

// --- Oracle ----------------------------------------------------------------

// First-principles check: propagate (mean, cov) through the full chain
// conditional on the source phase theta (and the shared OPA pump phase psi),
// evaluate mean_photon at the detectors, and average by trapezoid quadrature
// with `nodes` points per phase (the integrands are low-degree trigonometric
// polynomials, so this is exact); a doubled-node check guards the result and
// throws if it moves by more than 1e-10.
Expectation oracle_expected(const SchemeConfig& scheme, const ProcessParams& p,
                            const Source& source, int nodes = 256);

// --- Shot simulator ---------------------------------------------------------

// Simulate plan.settings in order, consuming `rng` sequentially (per shot:
// theta, then psi if an OPA is present, then the Gaussian draws). Returns one
// SettingStats per setting. Settings with apply_process = false bypass the
// process and its noise channel; the transmission channel always applies.
// Deterministic: a given (scheme, process, plan, rng state) yields
// bit-identical results.
std::vector<SettingStats> simulate_shots(const SchemeConfig& scheme,
                                         const ProcessParams& process,
                                         const ExperimentPlan& plan,
                                         std::mt19937_64& rng);

}  // namespace thermint
