#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "thermint/rng.hpp"

namespace thermint {

// Quadrature convention used throughout: x = a + a^dag, p = -i(a - a^dag),
// ordered (x1, p1, x2, p2, ...). Vacuum has zero mean and unit variance per
// quadrature (cov = identity). Photon number of a mode is
// (<x^2> + <p^2> + mx^2 + mp^2 - 2) / 4 with <.> the central moments.

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Gaussian state of `modes` optical modes: mean vector and covariance matrix
/// in the quadrature ordering above.
struct GaussianState {
  int modes = 0;
  Vec mean;
  Mat cov;

  GaussianState() = default;
  GaussianState(int m, Vec mu, Mat sigma);

  static GaussianState vacuum(int modes);
};

/// Affine symplectic map z -> matrix * z + shift.
struct SymplecticTransform {
  Mat matrix;
  Vec shift;

  SymplecticTransform() = default;
  SymplecticTransform(Mat m, Vec s);
  explicit SymplecticTransform(Mat m);

  int modes() const { return static_cast<int>(matrix.rows()) / 2; }
  bool is_symplectic(double tol = 1e-10) const;
};

// t2 after t1 (apply(compose(t2, t1), s) == apply(t2, apply(t1, s))).
SymplecticTransform compose(const SymplecticTransform& t2,
                            const SymplecticTransform& t1);

// Symplectic form Omega: block-diagonal [[0, 1], [-1, 0]] per mode.
Mat symplectic_form(int modes);

/// Random-phase source: displaced thermal state with displacement amplitude D
/// at a phase theta drawn uniformly per shot, and thermal quadrature variance
/// R^2. The phase-averaged second moment per quadrature is V = R^2 + D^2/2.
struct Source {
  double R = 1.0;
  double D = 0.0;

  Source() = default;
  Source(double r, double d, bool allow_unphysical = false);

  double variance() const { return R * R + D * D / 2.0; }  // V = 2*nbar + 1
  double mean_photon() const { return (variance() - 1.0) / 2.0; }
};

/// Loss/added-noise channel: transmittance T and environment quadrature
/// variance Veps >= 1 (Veps = 1 is pure loss into vacuum).
struct NoiseChannel {
  double T = 1.0;
  double Veps = 1.0;

  NoiseChannel() = default;
  NoiseChannel(double t, double veps);
};

// Single-mode state of `s` at a fixed source phase theta:
// mean (D cos theta, D sin theta), cov R^2 * I.
GaussianState displaced_thermal(const Source& s, double theta);

// Two-mode beam splitter with reflectivity mu in [0, 1]:
// (x1, x2) -> (sqrt(mu) x1 + sqrt(1-mu) x2, -sqrt(1-mu) x1 + sqrt(mu) x2),
// same for p. mu = 1 is the identity.
SymplecticTransform beam_splitter(double mu);

// Two-mode squeezer with gain r >= 0 and pump phase phi:
// x1 -> cosh(r) x1 + sinh(r) (cos(phi) x2 + sin(phi) p2),
// p1 -> cosh(r) p1 + sinh(r) (sin(phi) x2 - cos(phi) p2), symmetric in 1<->2.
// r = 0 is the identity.
SymplecticTransform two_mode_squeezer(double r, double phi);

// Single-mode rotation x -> x cos(phi) - p sin(phi), p -> x sin(phi) + p cos(phi).
SymplecticTransform phase_shift(double phi);

// Single-mode squeezer of magnitude q = exp(w) along the axis rotated by
// alpha: Rot(alpha) diag(q, 1/q) Rot(-alpha). Vacuum at alpha = 0 maps to
// cov diag(q^2, 1/q^2).
SymplecticTransform squeezer(double w, double alpha);

// Single-mode displacement: mean shift (d cos beta, d sin beta), d >= 0.
SymplecticTransform displacement(double d, double beta);

// Apply `t` to the sub-state on `modes` (distinct, in order); identity on the
// rest. mean' = S mean + shift, cov' = S cov S^T.
GaussianState apply(const SymplecticTransform& t, const GaussianState& s,
                    std::span<const int> modes);
GaussianState apply(const SymplecticTransform& t, const GaussianState& s);

// Loss/noise channel on one mode: mean *= sqrt(T), Var -> T Var + (1-T) Veps,
// cross-covariances with other modes scale by sqrt(T).
GaussianState loss_channel(const GaussianState& s, int mode,
                           const NoiseChannel& ch);

// Mean photon number of one mode (see the convention note at the top).
double mean_photon(const GaussianState& s, int mode);

// Draw one phase-space point. Uses Cholesky of cov; if cov is semi-definite,
// eigenvalues are clipped at 1e-12 before factoring. Eigenvalues below
// -1e-10 are an error.
Vec sample_phase_point(const GaussianState& s, std::mt19937_64& rng,
                       GaussianSampler& gauss);

}  // namespace thermint
