#include "thermint/interferometer.hpp"

#include <array>
#include <cmath>
#include <numbers>

namespace thermint {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double sq(double x) { return x * x; }

}  // namespace

ProcessParams::ProcessParams(double q_, double Phi_, double d_, double alpha_,
                             double beta_)
    : q(q_), Phi(Phi_), d(d_), alpha(alpha_), beta(beta_) {
  if (!(q > 0.0)) throw std::invalid_argument("process needs q > 0");
  if (!std::isfinite(q) || !std::isfinite(Phi) || !std::isfinite(d))
    throw std::invalid_argument("process parameters must be finite");
  if (q < 1.0) {  // exact: Rot(pi/2) diag(a, b) Rot(-pi/2) = diag(b, a)
    q = 1.0 / q;
    alpha += std::numbers::pi / 2.0;
  }
  if (d < 0.0) {
    d = -d;
    beta += std::numbers::pi;
  }
}

SchemeConfig SchemeConfig::direct() { return SchemeConfig{}; }

SchemeConfig SchemeConfig::passive(double mu, double phi_ref) {
  SchemeConfig s;
  s.splitter = OpticalElement{OpticalElement::Kind::beam_splitter, mu};
  s.combiner = OpticalElement{OpticalElement::Kind::beam_splitter, 0.5};
  s.phi_ref = phi_ref;
  return s;
}

SchemeConfig SchemeConfig::active(double r, double phi_ref) {
  SchemeConfig s;
  s.splitter = OpticalElement{OpticalElement::Kind::opa, r};
  s.combiner = OpticalElement{OpticalElement::Kind::opa, r};
  s.phi_ref = phi_ref;
  return s;
}

bool SchemeConfig::has_opa() const {
  auto is_opa = [](const std::optional<OpticalElement>& e) {
    return e && e->kind == OpticalElement::Kind::opa;
  };
  return is_opa(splitter) || is_opa(combiner);
}

bool SchemeConfig::interference_expected() const {
  if (is_direct()) return false;
  if (splitter->kind != combiner->kind) return false;
  if (splitter->kind == OpticalElement::Kind::beam_splitter)
    return splitter->param > 0.0 && splitter->param < 1.0 &&
           combiner->param > 0.0 && combiner->param < 1.0;
  return splitter->param > 0.0 && combiner->param > 0.0;
}

int SchemeConfig::detector_sign() const {
  if (is_direct()) return +1;
  return combiner->kind == OpticalElement::Kind::beam_splitter ? +1 : -1;
}

void SchemeConfig::validate() const {
  if (static_cast<bool>(splitter) != static_cast<bool>(combiner))
    throw std::invalid_argument(
        "scheme needs either both splitter and combiner or neither");
  if (!(eta > 0.0) || !(eta <= 1.0))
    throw std::invalid_argument("detector efficiency eta must be in (0, 1]");
  if (is_direct() && (channel_noise || process_noise))
    throw std::invalid_argument("noise channels need an interferometer scheme");
  for (const auto* e : {&splitter, &combiner}) {
    if (!*e) continue;
    const OpticalElement& el = **e;
    if (el.kind == OpticalElement::Kind::beam_splitter) {
      if (!(el.param >= 0.0) || !(el.param <= 1.0))
        throw std::invalid_argument("splitter reflectivity must be in [0, 1]");
    } else if (!(el.param >= 0.0)) {
      throw std::invalid_argument("OPA gain must be >= 0");
    }
  }
}

void ExperimentPlan::validate() const {
  if (sources.empty()) throw std::invalid_argument("plan needs a source");
  if (settings.empty()) throw std::invalid_argument("plan needs settings");
  if (blocks < 1) throw std::invalid_argument("plan needs blocks >= 1");
  for (const PlanSetting& s : settings) {
    if (s.shots < 1) throw std::invalid_argument("every setting needs shots >= 1");
    if (s.source_index < 0 ||
        s.source_index >= static_cast<int>(sources.size()))
      throw std::invalid_argument("setting source index out of range");
  }
}

// --- Closed forms -----------------------------------------------------------

double arm_variance_signal(double V, double mu) { return mu * V + 1.0 - mu; }
double arm_variance_reference(double V, double mu) {
  return mu + V - mu * V;
}
double arm_variance_signal_opa(double V, double r) {
  return sq(std::cosh(r)) * V + sq(std::sinh(r));
}
double arm_variance_reference_opa(double V, double r) {
  return sq(std::sinh(r)) * V + sq(std::cosh(r));
}

namespace {

void check_source_moment(double V) {
  if (!(V >= 1.0))
    throw std::invalid_argument("source second moment V must be >= 1");
}

}  // namespace

double expected_direct(double V, double q, double d) {
  check_source_moment(V);
  if (!(q > 0.0)) throw std::invalid_argument("expected_direct needs q > 0");
  return ((q * q + 1.0 / (q * q)) * V + d * d - 2.0) / 4.0;
}

double expected_direct_printed(double V, double q, double d) {
  return ((q * q + 1.0 / (q * q)) * V + d * d) / 4.0 - 1.0;
}

Expectation expected_passive(const ProcessParams& p, double V, double mu,
                             double phi_ref,
                             const std::optional<NoiseChannel>& channel,
                             const std::optional<NoiseChannel>& process_noise) {
  check_source_moment(V);
  if (!(mu >= 0.0) || !(mu <= 1.0))
    throw std::invalid_argument("reflectivity mu must be in [0, 1]");
  const double qq = p.q * p.q + 1.0 / (p.q * p.q);
  const double qp = p.q + 1.0 / p.q;
  const double VS = arm_variance_signal(V, mu);
  const double VR = arm_variance_reference(V, mu);

  double minus = 0.5 * (V - 1.0) * std::sqrt(mu * (1.0 - mu)) * qp *
                 std::cos(p.Phi - phi_ref);
  double signal_total = qq * VS + p.d * p.d;
  if (process_noise) {
    minus *= std::sqrt(process_noise->T);
    signal_total = process_noise->T * signal_total +
                   2.0 * (1.0 - process_noise->T) * process_noise->Veps;
  }
  double plus = (signal_total + 2.0 * VR) / 4.0 - 1.0;
  if (channel) {
    minus *= channel->T;
    plus = channel->T * (plus + 1.0) + channel->Veps * (1.0 - channel->T) - 1.0;
  }
  return {minus, plus};
}

Expectation expected_active(const ProcessParams& p, double V, double r1,
                            double r2, double phi_ref,
                            const std::optional<NoiseChannel>& channel,
                            const std::optional<NoiseChannel>& process_noise) {
  check_source_moment(V);
  if (r1 < 0.0 || r2 < 0.0)
    throw std::invalid_argument("OPA gains must be >= 0");
  const double qq = p.q * p.q + 1.0 / (p.q * p.q);
  const double qp = p.q + 1.0 / p.q;
  const double VS = arm_variance_signal_opa(V, r1);
  const double VR = arm_variance_reference_opa(V, r1);

  double core = qq * VS + p.d * p.d;  // signal-arm second-moment total
  double interf = std::sinh(2.0 * r2) * std::sinh(2.0 * r1) * (V + 1.0) / 4.0 *
                  qp * std::cos(p.Phi + phi_ref);
  if (process_noise) {
    core = process_noise->T * core +
           2.0 * (1.0 - process_noise->T) * process_noise->Veps;
    interf *= std::sqrt(process_noise->T);
  }
  double refs = 2.0 * VR;
  double minus, plus;
  if (channel) {
    minus = channel->T * (core - refs) / 4.0;
    plus = std::cosh(2.0 * r2) *
               (channel->T * (core + refs) +
                4.0 * (1.0 - channel->T) * channel->Veps) /
               4.0 +
           channel->T * interf - 1.0;
  } else {
    minus = (core - refs) / 4.0;
    plus = std::cosh(2.0 * r2) * (core + refs) / 4.0 + interf - 1.0;
  }
  return {minus, plus};
}

Expectation expected_active_printed(const ProcessParams& p, double V,
                                    double r1, double r2, double phi_ref) {
  const double qq = p.q * p.q + 1.0 / (p.q * p.q);
  const double qp = p.q + 1.0 / p.q;
  const double VS = std::cosh(r1) * V + std::sinh(r1);
  const double VR = std::sinh(r1) * V + std::cosh(r1);
  const double core = qq * VS + p.d * p.d;
  const double interf = std::sinh(2.0 * r2) * std::sinh(2.0 * r1) *
                        (V + 1.0) / 4.0 * qp * std::cos(p.Phi + phi_ref);
  return {(core - 2.0 * VR) / 4.0,
          std::cosh(2.0 * r2) * (core + 2.0 * VR) / 4.0 + interf - 1.0};
}

Expectation expected_calibration(double V, double mu, const NoiseChannel& ch) {
  check_source_moment(V);
  if (!(mu > 0.0) || !(mu < 1.0))
    throw std::invalid_argument("calibration needs mu in (0, 1)");
  return {ch.T * (V - 1.0) * std::sqrt(mu * (1.0 - mu)),
          ch.T * (V + 1.0) / 2.0 + ch.Veps * (1.0 - ch.T) - 1.0};
}

// --- Oracle ------------------------------------------------------------------

namespace {

// Generic-propagation route, intentionally separate from the compiled
// simulator path below: every stage goes through the gaussian.hpp ops.
Expectation chain_detectors(const SchemeConfig& scheme, const ProcessParams& p,
                            const Source& source, bool apply_process,
                            double theta, double psi) {
  const std::array<int, 2> both{0, 1};
  const std::array<int, 1> ref_mode{0};
  const std::array<int, 1> sig_mode{1};

  if (scheme.is_direct()) {
    GaussianState st = displaced_thermal(source, theta);
    if (apply_process) {
      st = apply(squeezer(p.w(), p.alpha), st);
      st = apply(phase_shift(p.Phi), st);
      st = apply(displacement(p.d, p.beta), st);
    }
    const double i = scheme.eta * mean_photon(st, 0);
    return {i, i};
  }

  GaussianState st = GaussianState::vacuum(2);
  const GaussianState src = displaced_thermal(source, theta);
  st.mean.segment<2>(2) = src.mean;
  st.cov.block<2, 2>(2, 2) = src.cov;

  auto element = [&](const OpticalElement& e) {
    return e.kind == OpticalElement::Kind::beam_splitter
               ? beam_splitter(e.param)
               : two_mode_squeezer(e.param, psi);
  };

  st = apply(element(*scheme.splitter), st, both);
  if (apply_process) {
    st = apply(squeezer(p.w(), p.alpha), st, sig_mode);
    st = apply(phase_shift(p.Phi), st, sig_mode);
    st = apply(displacement(p.d, p.beta), st, sig_mode);
    if (scheme.process_noise) st = loss_channel(st, 1, *scheme.process_noise);
  }
  st = apply(phase_shift(scheme.phi_ref), st, ref_mode);
  if (scheme.channel_noise) {
    st = loss_channel(st, 0, *scheme.channel_noise);
    st = loss_channel(st, 1, *scheme.channel_noise);
  }
  st = apply(element(*scheme.combiner), st, both);

  const double i0 = scheme.eta * mean_photon(st, 0);
  const double i1 = scheme.eta * mean_photon(st, 1);
  return {scheme.detector_sign() * (i0 - i1), i0 + i1};
}

Expectation phase_average(const SchemeConfig& scheme, const ProcessParams& p,
                          const Source& source, int nodes) {
  const bool with_psi = scheme.has_opa();
  double minus = 0.0, plus = 0.0;
  const int n_psi = with_psi ? nodes : 1;
  for (int j = 0; j < n_psi; ++j) {
    const double psi = kTwoPi * j / n_psi;
    for (int i = 0; i < nodes; ++i) {
      const double theta = kTwoPi * i / nodes;
      const Expectation e =
          chain_detectors(scheme, p, source, true, theta, psi);
      minus += e.minus;
      plus += e.plus;
    }
  }
  const double count = static_cast<double>(nodes) * n_psi;
  return {minus / count, plus / count};
}

}  // namespace

Expectation oracle_expected(const SchemeConfig& scheme, const ProcessParams& p,
                            const Source& source, int nodes) {
  scheme.validate();
  if (nodes < 4) throw std::invalid_argument("oracle needs at least 4 nodes");
  const Expectation coarse = phase_average(scheme, p, source, nodes);
  const Expectation fine = phase_average(scheme, p, source, 2 * nodes);
  const double tol_minus = 1e-10 * std::max(1.0, std::abs(fine.minus));
  const double tol_plus = 1e-10 * std::max(1.0, std::abs(fine.plus));
  if (std::abs(fine.minus - coarse.minus) > tol_minus ||
      std::abs(fine.plus - coarse.plus) > tol_plus)
    throw std::runtime_error(
        "phase-average quadrature did not converge under node doubling");
  return fine;
}

// --- Shot simulator -----------------------------------------------------------

namespace {

using Eigen::Matrix2d;
using Eigen::Matrix4d;
using Eigen::Vector4d;

// Affine map on (mean, cov): mean -> M mean + s, cov -> M cov M^T + C.
struct AffineChain {
  Matrix4d M = Matrix4d::Identity();
  Vector4d s = Vector4d::Zero();
  Matrix4d C = Matrix4d::Zero();

  void fold_symplectic(const Matrix4d& S, const Vector4d& d) {
    M = (S * M).eval();
    s = (S * s + d).eval();
    C = (S * C * S.transpose()).eval();
  }

  void fold_loss_mode(int mode, const NoiseChannel& ch) {
    const double rt = std::sqrt(ch.T);
    M.middleRows<2>(2 * mode) *= rt;
    s.segment<2>(2 * mode) *= rt;
    C.middleRows<2>(2 * mode) *= rt;
    C.middleCols<2>(2 * mode) *= rt;
    C.block<2, 2>(2 * mode, 2 * mode) +=
        (1.0 - ch.T) * ch.Veps * Matrix2d::Identity();
  }
};

Matrix4d embed_mode(const Matrix2d& a, int mode) {
  Matrix4d m = Matrix4d::Identity();
  m.block<2, 2>(2 * mode, 2 * mode) = a;
  return m;
}

Matrix4d element_matrix(const OpticalElement& e, double psi) {
  const SymplecticTransform t =
      e.kind == OpticalElement::Kind::beam_splitter
          ? beam_splitter(e.param)
          : two_mode_squeezer(e.param, psi);
  return t.matrix;
}

// Everything between the splitter and the combiner: process, losses, phase.
AffineChain build_mid_chain(const SchemeConfig& scheme, const ProcessParams& p,
                            double phi_ref, bool apply_process) {
  AffineChain ch;
  if (apply_process) {
    const Matrix2d proc =
        (phase_shift(p.Phi).matrix * squeezer(p.w(), p.alpha).matrix).eval();
    Vector4d shift = Vector4d::Zero();
    shift(2) = p.d * std::cos(p.beta);
    shift(3) = p.d * std::sin(p.beta);
    ch.fold_symplectic(embed_mode(proc, 1), shift);
    if (scheme.process_noise) ch.fold_loss_mode(1, *scheme.process_noise);
  }
  ch.fold_symplectic(embed_mode(phase_shift(phi_ref).matrix, 0),
                     Vector4d::Zero());
  if (scheme.channel_noise) {
    ch.fold_loss_mode(0, *scheme.channel_noise);
    ch.fold_loss_mode(1, *scheme.channel_noise);
  }
  return ch;
}

AffineChain build_chain(const SchemeConfig& scheme, const ProcessParams& p,
                        double phi_ref, bool apply_process, double psi) {
  AffineChain ch;
  ch.fold_symplectic(element_matrix(*scheme.splitter, psi), Vector4d::Zero());
  if (apply_process) {
    const Matrix2d proc =
        (phase_shift(p.Phi).matrix * squeezer(p.w(), p.alpha).matrix).eval();
    Vector4d shift = Vector4d::Zero();
    shift(2) = p.d * std::cos(p.beta);
    shift(3) = p.d * std::sin(p.beta);
    ch.fold_symplectic(embed_mode(proc, 1), shift);
    if (scheme.process_noise) ch.fold_loss_mode(1, *scheme.process_noise);
  }
  ch.fold_symplectic(embed_mode(phase_shift(phi_ref).matrix, 0),
                     Vector4d::Zero());
  if (scheme.channel_noise) {
    ch.fold_loss_mode(0, *scheme.channel_noise);
    ch.fold_loss_mode(1, *scheme.channel_noise);
  }
  ch.fold_symplectic(element_matrix(*scheme.combiner, psi), Vector4d::Zero());
  return ch;
}

Matrix4d sampling_factor(const Matrix4d& cov) {
  Eigen::LLT<Matrix4d> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Matrix4d> es(cov);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw std::runtime_error("simulated covariance not positive semi-definite");
  const Vector4d clipped = es.eigenvalues().cwiseMax(1e-12);
  return es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
}

Matrix4d source_input_cov(const Source& src) {
  Matrix4d cov = Matrix4d::Identity();
  cov(2, 2) = cov(3, 3) = src.R * src.R;
  return cov;
}

struct Welford {
  std::uint64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d1 = x - mean;
    mean += d1 / static_cast<double>(n);
    m2 += d1 * (x - mean);
  }
  double var() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

}  // namespace

std::vector<SettingStats> simulate_shots(const SchemeConfig& scheme,
                                         const ProcessParams& process,
                                         const ExperimentPlan& plan,
                                         std::mt19937_64& rng) {
  scheme.validate();
  plan.validate();
  if (scheme.is_direct())
    throw std::invalid_argument(
        "shot simulation needs a two-detector scheme (not direct)");

  const bool with_psi = scheme.has_opa();
  const double sign = scheme.detector_sign();
  const double eta = scheme.eta;
  GaussianSampler gauss;

  std::vector<SettingStats> out;
  out.reserve(plan.settings.size());
  for (const PlanSetting& setting : plan.settings) {
    const Source& src = plan.sources[static_cast<size_t>(setting.source_index)];
    const Matrix4d in_cov = source_input_cov(src);
    const double D = src.D;

    // psi-independent schemes: compile the chain and factor once.  For OPA
    // schemes only the outer elements depend on the per-shot pump phase, so
    // cache the middle of the chain and rebuild just the sandwich per shot.
    AffineChain fixed;
    Matrix4d fixed_L = Matrix4d::Zero();
    AffineChain mid;
    if (with_psi) {
      mid = build_mid_chain(scheme, process, setting.phi_ref,
                            setting.apply_process);
    } else {
      fixed = build_chain(scheme, process, setting.phi_ref,
                          setting.apply_process, 0.0);
      fixed_L =
          sampling_factor(fixed.M * in_cov * fixed.M.transpose() + fixed.C);
    }

    Welford minus, plus;
    Vector4d g, z;
    for (std::uint64_t shot = 0; shot < setting.shots; ++shot) {
      const double theta = kTwoPi * uniform01(rng);
      const AffineChain* ch = &fixed;
      const Matrix4d* L = &fixed_L;
      AffineChain local;
      Matrix4d local_L;
      if (with_psi) {
        const double psi = kTwoPi * uniform01(rng);
        const Matrix4d A = element_matrix(*scheme.splitter, psi);
        const Matrix4d B = element_matrix(*scheme.combiner, psi);
        local.M.noalias() = B * (mid.M * A);
        local.s.noalias() = B * mid.s;
        local.C.noalias() = B * mid.C * B.transpose();
        local_L =
            sampling_factor(local.M * in_cov * local.M.transpose() + local.C);
        ch = &local;
        L = &local_L;
      }
      const Vector4d mean = ch->s + D * std::cos(theta) * ch->M.col(2) +
                            D * std::sin(theta) * ch->M.col(3);
      for (int i = 0; i < 4; ++i) g(i) = gauss(rng);
      z.noalias() = mean;
      z.noalias() += (*L) * g;
      const double i0 = eta * (z(0) * z(0) + z(1) * z(1) - 2.0) / 4.0;
      const double i1 = eta * (z(2) * z(2) + z(3) * z(3) - 2.0) / 4.0;
      minus.add(sign * (i0 - i1));
      plus.add(i0 + i1);
    }
    out.push_back(SettingStats{minus.mean, plus.mean, minus.var(), plus.var(),
                               setting.shots});
  }
  return out;
}

}  // namespace thermint
