#include "thermint/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace thermint {

namespace {

constexpr double kMinT = 1e-6;   // calibration floor for the transmittance
constexpr double kTwoSourceTFloor = 0.01;  // keeps rare bad draws bounded

void check_passive_setup(double V, double mu) {
  if (!(V > 1.0))
    throw std::invalid_argument(
        "estimation needs a source above the vacuum limit (V > 1)");
  if (!(mu > 0.0) || !(mu < 1.0))
    throw std::invalid_argument(
        "estimation needs an interfering splitter (mu strictly inside (0, 1))");
}

// Quadratic inversion of c = q + 1/q on the q >= 1 branch.
double q_from_c(double c, std::vector<Flag>& flags) {
  if (c < 2.0) {
    flags.push_back(Flag::clamped_c);
    return 1.0;
  }
  return (c + std::sqrt(c * c - 4.0)) / 2.0;
}

double d_from_budget(double radicand, std::vector<Flag>& flags) {
  if (radicand < 0.0) {
    flags.push_back(Flag::negative_radicand);
    return 0.0;
  }
  return std::sqrt(radicand);
}

SettingStats undo_channel(const SettingStats& s, double T, double Veps) {
  SettingStats out = s;
  out.mean_minus = s.mean_minus / T;
  out.mean_plus = (s.mean_plus + 1.0 - Veps * (1.0 - T)) / T - 1.0;
  out.var_minus = s.var_minus / (T * T);
  out.var_plus = s.var_plus / (T * T);
  return out;
}

}  // namespace

const char* flag_name(Flag f) {
  switch (f) {
    case Flag::clamped_c: return "clamped-c";
    case Flag::negative_radicand: return "negative-radicand";
    case Flag::degenerate_interference: return "degenerate-interference";
    case Flag::calibration_indeterminate: return "calibration-indeterminate";
    case Flag::ill_conditioned: return "ill-conditioned";
    case Flag::clamped_T: return "clamped-T";
  }
  return "unknown";
}

bool EstimateReport::has(Flag f) const {
  for (Flag g : flags)
    if (g == f) return true;
  return false;
}

EstimateReport estimate_ideal_passive(const SettingStats& at0,
                                      const SettingStats& at90, double V,
                                      double mu) {
  check_passive_setup(V, mu);
  EstimateReport rep;
  rep.Phi = std::atan2(at90.mean_minus, at0.mean_minus);

  const double amp = std::hypot(at0.mean_minus, at90.mean_minus);
  const double c = 2.0 * amp / (std::sqrt(mu * (1.0 - mu)) * (V - 1.0));
  const double q = q_from_c(c, rep.flags);
  rep.q = q;

  const double iplus = (at0.mean_plus + at90.mean_plus) / 2.0;
  const double VS = arm_variance_signal(V, mu);
  const double VR = arm_variance_reference(V, mu);
  const double qq = q * q + 1.0 / (q * q);
  rep.d = d_from_budget(4.0 * iplus + 4.0 - qq * VS - 2.0 * VR, rep.flags);
  return rep;
}

EstimateReport estimate_ideal_active(const SettingStats& at0,
                                     const SettingStats& at90, double V,
                                     double r) {
  if (!(V >= 1.0))
    throw std::invalid_argument("estimation needs a physical source (V >= 1)");
  if (!(r > 0.0))
    throw std::invalid_argument(
        "amplifier gain r = 0 produces no fringe; estimation is degenerate");
  EstimateReport rep;

  const double VS = arm_variance_signal_opa(V, r);
  const double VR = arm_variance_reference_opa(V, r);
  // photon budget of the signal arm from the (phase-independent) difference
  const double iminus = (at0.mean_minus + at90.mean_minus) / 2.0;
  const double X = 4.0 * iminus + 2.0 * VR;

  // fringe residuals in the sum channel
  const double base = std::cosh(2.0 * r) * (X + 2.0 * VR) / 4.0 - 1.0;
  const double u = at0.mean_plus - base;
  const double v = at90.mean_plus - base;
  rep.Phi = std::atan2(-v, u);

  const double gain = std::pow(std::sinh(2.0 * r), 2) * (V + 1.0) / 4.0;
  const double c = std::hypot(u, v) / gain;
  const double q = q_from_c(c, rep.flags);
  rep.q = q;

  const double qq = q * q + 1.0 / (q * q);
  rep.d = d_from_budget(X - qq * VS, rep.flags);
  return rep;
}

ChannelEstimate calibrate_channel(const SettingStats& cal, double V,
                                  double mu) {
  check_passive_setup(V, mu);
  ChannelEstimate est;
  est.T = cal.mean_minus / ((V - 1.0) * std::sqrt(mu * (1.0 - mu)));
  if (est.T > 1.0 || est.T < kMinT) {
    est.T = std::clamp(est.T, kMinT, 1.0);
    est.flags.push_back(Flag::clamped_T);
  }
  if (est.T >= 1.0 - 1e-9) {
    // a lossless channel admits no noise estimate; default to vacuum noise
    est.Veps = 1.0;
    est.flags.push_back(Flag::calibration_indeterminate);
  } else {
    est.Veps =
        (cal.mean_plus + 1.0 - est.T * (V + 1.0) / 2.0) / (1.0 - est.T);
  }
  return est;
}

EstimateReport estimate_with_channel_noise(const SettingStats& at0,
                                           const SettingStats& at90, double T,
                                           double Veps, double V, double mu) {
  if (!(T > 0.0) || !(T <= 1.0))
    throw std::invalid_argument("channel correction needs T in (0, 1]");
  return estimate_ideal_passive(undo_channel(at0, T, Veps),
                                undo_channel(at90, T, Veps), V, mu);
}

EstimateReport estimate_with_process_noise(
    const SettingStats& s1_at0, const SettingStats& s1_at90,
    const SettingStats& s2_at0, const SettingStats& s2_at90, double V1,
    double V2, double mu, double assumed_Veps) {
  check_passive_setup(V1, mu);
  if (!(V2 > V1))
    throw std::invalid_argument("two-source estimation needs V2 > V1");
  EstimateReport rep;
  const double dV = V2 - V1;
  if (dV < 0.01 * (V1 - 1.0)) rep.flags.push_back(Flag::ill_conditioned);

  rep.Phi = std::atan2(s1_at90.mean_minus + s2_at90.mean_minus,
                       s1_at0.mean_minus + s2_at0.mean_minus);

  // sqrt(T) (q + 1/q), one reading per source
  const double root = std::sqrt(mu * (1.0 - mu));
  const double P1 =
      2.0 * std::hypot(s1_at0.mean_minus, s1_at90.mean_minus) / (root * (V1 - 1.0));
  const double P2 =
      2.0 * std::hypot(s2_at0.mean_minus, s2_at90.mean_minus) / (root * (V2 - 1.0));
  const double P = (P1 + P2) / 2.0;

  // T (q^2 + 1/q^2) from the sum-channel gap between the sources
  const double iplus1 = (s1_at0.mean_plus + s1_at90.mean_plus) / 2.0;
  const double iplus2 = (s2_at0.mean_plus + s2_at90.mean_plus) / 2.0;
  const double Q =
      (iplus2 - iplus1 - (1.0 - mu) * dV / 2.0) * 4.0 / (mu * dV);

  // (q + 1/q)^2 - (q^2 + 1/q^2) = 2 isolates the arm loss
  double T = (P * P - Q) / 2.0;
  if (T < kTwoSourceTFloor || T > 1.0) {
    T = std::clamp(T, kTwoSourceTFloor, 1.0);
    rep.flags.push_back(Flag::clamped_T);
  }
  rep.T_process = T;

  const double q = q_from_c(P / std::sqrt(T), rep.flags);
  rep.q = q;

  // the displacement shares the energy budget with the arm noise; split it
  // under an assumed noise variance
  const double qq = q * q + 1.0 / (q * q);
  auto d2_for = [&](double V, double iplus) {
    const double VR = arm_variance_reference(V, mu);
    const double VS = arm_variance_signal(V, mu);
    return (iplus + 1.0 - VR / 2.0 - (1.0 - T) * assumed_Veps / 2.0) * 4.0 / T -
           qq * VS;
  };
  rep.d = d_from_budget((d2_for(V1, iplus1) + d2_for(V2, iplus2)) / 2.0,
                        rep.flags);
  rep.assumptions.push_back("arm noise variance assumed " +
                            std::to_string(assumed_Veps) +
                            " for the displacement estimate");
  return rep;
}

EstimateReport estimate_combined(const SettingStats& cal,
                                 const SettingStats& s1_at0,
                                 const SettingStats& s1_at90,
                                 const SettingStats& s2_at0,
                                 const SettingStats& s2_at90, double V1,
                                 double V2, double mu) {
  const ChannelEstimate ch = calibrate_channel(cal, V1, mu);
  EstimateReport rep = estimate_with_process_noise(
      undo_channel(s1_at0, ch.T, ch.Veps), undo_channel(s1_at90, ch.T, ch.Veps),
      undo_channel(s2_at0, ch.T, ch.Veps), undo_channel(s2_at90, ch.T, ch.Veps),
      V1, V2, mu);
  rep.T_channel = ch.T;
  rep.Veps_channel = ch.Veps;
  rep.flags.insert(rep.flags.end(), ch.flags.begin(), ch.flags.end());
  // with loss and noise both inside the arm and around it, the displacement
  // cannot be separated from the arm noise at all; drop it
  rep.d.reset();
  rep.assumptions.assign(
      {"displacement and arm noise jointly unidentifiable; d not reported"});
  return rep;
}

SettingStats correct_efficiency(const SettingStats& stats, double eta) {
  if (!(eta > 0.0) || !(eta <= 1.0))
    throw std::invalid_argument("detector efficiency must be in (0, 1]");
  SettingStats out = stats;
  out.mean_minus /= eta;
  out.mean_plus /= eta;
  out.var_minus /= eta * eta;
  out.var_plus /= eta * eta;
  return out;
}

const char* selector_name(Selector s) {
  switch (s) {
    case Selector::ideal: return "ideal";
    case Selector::naive: return "naive";
    case Selector::channel_known: return "channel-known";
    case Selector::channel_calibrated: return "channel-calibrated";
    case Selector::two_source: return "two-source";
    case Selector::combined: return "combined";
  }
  return "unknown";
}

std::optional<Selector> selector_from_name(std::string_view name) {
  for (Selector s :
       {Selector::ideal, Selector::naive, Selector::channel_known,
        Selector::channel_calibrated, Selector::two_source, Selector::combined})
    if (name == selector_name(s)) return s;
  return std::nullopt;
}

int selector_setting_count(Selector s) {
  switch (s) {
    case Selector::ideal:
    case Selector::naive:
    case Selector::channel_known: return 2;
    case Selector::channel_calibrated: return 3;
    case Selector::two_source: return 4;
    case Selector::combined: return 5;
  }
  return 0;
}

ExperimentPlan build_plan(Selector s, const std::vector<Source>& sources,
                          std::uint64_t shots, std::uint64_t blocks) {
  const bool two_sources =
      s == Selector::two_source || s == Selector::combined;
  if (two_sources && sources.size() != 2)
    throw std::invalid_argument("pipeline needs exactly two sources");
  if (!two_sources && sources.empty())
    throw std::invalid_argument("pipeline needs a source");

  constexpr double half_pi = 1.5707963267948966;
  ExperimentPlan plan;
  plan.sources = sources;
  plan.blocks = blocks;
  const bool calibrated =
      s == Selector::channel_calibrated || s == Selector::combined;
  if (calibrated) {
    // A calibration round runs once per setup, so practice affords it far
    // more samples than each measurement round. Giving it 10x the shots
    // keeps the transmittance uncertainty from dominating the corrected
    // estimates. The combined pipeline keeps a 1x round: its accuracy is
    // governed by the two-source elimination, and the calibration share
    // already competes with four measurement rounds per block.
    const std::uint64_t cal_shots =
        s == Selector::channel_calibrated ? 10 * shots : shots;
    plan.settings.push_back(PlanSetting{0, 0.0, false, cal_shots});
  }
  plan.settings.push_back(PlanSetting{0, 0.0, true, shots});
  plan.settings.push_back(PlanSetting{0, half_pi, true, shots});
  if (two_sources) {
    plan.settings.push_back(PlanSetting{1, 0.0, true, shots});
    plan.settings.push_back(PlanSetting{1, half_pi, true, shots});
  }
  plan.validate();
  return plan;
}

EstimateReport run_pipeline(Selector s, const SchemeConfig& scheme,
                            std::span<const SettingStats> stats,
                            const std::vector<Source>& sources) {
  scheme.validate();
  if (scheme.is_direct())
    throw std::invalid_argument("estimation needs a two-detector scheme");
  if (!scheme.interference_expected())
    throw std::invalid_argument(
        "scheme carries no fringe; interference estimation is degenerate");
  if (static_cast<int>(stats.size()) != selector_setting_count(s))
    throw std::invalid_argument("pipeline received a wrong number of settings");
  if (sources.empty()) throw std::invalid_argument("pipeline needs a source");

  const double V1 = sources[0].variance();
  const bool opa = scheme.splitter->kind == OpticalElement::Kind::opa;
  if (opa) {
    if (s != Selector::ideal && s != Selector::naive)
      throw std::invalid_argument(
          "noise-aware pipelines are defined for the beam-splitter scheme");
    if (scheme.combiner->param != scheme.splitter->param)
      throw std::invalid_argument(
          "amplifier estimation assumes equal splitter/combiner gain");
    return estimate_ideal_active(stats[0], stats[1], V1,
                                 scheme.splitter->param);
  }

  const double mu = scheme.splitter->param;
  switch (s) {
    case Selector::ideal:
    case Selector::naive:
      return estimate_ideal_passive(stats[0], stats[1], V1, mu);
    case Selector::channel_known: {
      if (!scheme.channel_noise)
        throw std::invalid_argument(
            "channel-known pipeline needs a channel in the scheme");
      return estimate_with_channel_noise(stats[0], stats[1],
                                         scheme.channel_noise->T,
                                         scheme.channel_noise->Veps, V1, mu);
    }
    case Selector::channel_calibrated: {
      const ChannelEstimate ch = calibrate_channel(stats[0], V1, mu);
      EstimateReport rep = estimate_with_channel_noise(stats[1], stats[2],
                                                       ch.T, ch.Veps, V1, mu);
      rep.T_channel = ch.T;
      rep.Veps_channel = ch.Veps;
      rep.flags.insert(rep.flags.end(), ch.flags.begin(), ch.flags.end());
      return rep;
    }
    case Selector::two_source: {
      if (sources.size() != 2)
        throw std::invalid_argument("pipeline needs exactly two sources");
      return estimate_with_process_noise(stats[0], stats[1], stats[2],
                                         stats[3], V1, sources[1].variance(),
                                         mu);
    }
    case Selector::combined: {
      if (sources.size() != 2)
        throw std::invalid_argument("pipeline needs exactly two sources");
      return estimate_combined(stats[0], stats[1], stats[2], stats[3],
                               stats[4], V1, sources[1].variance(), mu);
    }
  }
  throw std::invalid_argument("unknown pipeline selector");
}

}  // namespace thermint
