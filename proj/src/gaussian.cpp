#include "thermint/gaussian.hpp"

#include <cmath>

namespace thermint {

namespace {

void check_state_shape(int modes, const Vec& mean, const Mat& cov) {
  if (modes < 1) throw std::invalid_argument("state needs at least one mode");
  const int n = 2 * modes;
  if (mean.size() != n || cov.rows() != n || cov.cols() != n)
    throw std::invalid_argument("state dimensions do not match mode count");
  if (!cov.isApprox(cov.transpose(), 1e-12))
    throw std::invalid_argument("covariance must be symmetric");
}

}  // namespace

GaussianState::GaussianState(int m, Vec mu, Mat sigma)
    : modes(m), mean(std::move(mu)), cov(std::move(sigma)) {
  check_state_shape(modes, mean, cov);
}

GaussianState GaussianState::vacuum(int modes) {
  if (modes < 1) throw std::invalid_argument("vacuum needs at least one mode");
  GaussianState s;
  s.modes = modes;
  s.mean = Vec::Zero(2 * modes);
  s.cov = Mat::Identity(2 * modes, 2 * modes);
  return s;
}

SymplecticTransform::SymplecticTransform(Mat m, Vec s)
    : matrix(std::move(m)), shift(std::move(s)) {
  if (matrix.rows() != matrix.cols() || matrix.rows() % 2 != 0 ||
      matrix.rows() == 0)
    throw std::invalid_argument("transform matrix must be 2M x 2M");
  if (shift.size() != matrix.rows())
    throw std::invalid_argument("transform shift length must match matrix");
}

SymplecticTransform::SymplecticTransform(Mat m) : matrix(std::move(m)) {
  if (matrix.rows() != matrix.cols() || matrix.rows() % 2 != 0 ||
      matrix.rows() == 0)
    throw std::invalid_argument("transform matrix must be 2M x 2M");
  shift = Vec::Zero(matrix.rows());
}

bool SymplecticTransform::is_symplectic(double tol) const {
  const Mat omega = symplectic_form(modes());
  return (matrix * omega * matrix.transpose() - omega).cwiseAbs().maxCoeff() <=
         tol;
}

SymplecticTransform compose(const SymplecticTransform& t2,
                            const SymplecticTransform& t1) {
  if (t2.modes() != t1.modes())
    throw std::invalid_argument("cannot compose transforms of different arity");
  return SymplecticTransform(t2.matrix * t1.matrix,
                             t2.matrix * t1.shift + t2.shift);
}

Mat symplectic_form(int modes) {
  Mat omega = Mat::Zero(2 * modes, 2 * modes);
  for (int m = 0; m < modes; ++m) {
    omega(2 * m, 2 * m + 1) = 1.0;
    omega(2 * m + 1, 2 * m) = -1.0;
  }
  return omega;
}

Source::Source(double r, double d, bool allow_unphysical) : R(r), D(d) {
  if (!(R >= 1.0) && !allow_unphysical)
    throw std::invalid_argument(
        "source thermal variance R^2 below the vacuum limit (R < 1)");
  if (!(R > 0.0)) throw std::invalid_argument("source needs R > 0");
  if (D < 0.0) throw std::invalid_argument("source displacement D must be >= 0");
}

NoiseChannel::NoiseChannel(double t, double veps) : T(t), Veps(veps) {
  if (!(T >= 0.0) || !(T <= 1.0))
    throw std::invalid_argument("channel transmittance T must be in [0, 1]");
  if (!(Veps >= 1.0))
    throw std::invalid_argument("channel noise variance Veps must be >= 1");
}

GaussianState displaced_thermal(const Source& s, double theta) {
  GaussianState st;
  st.modes = 1;
  st.mean = Vec(2);
  st.mean << s.D * std::cos(theta), s.D * std::sin(theta);
  st.cov = s.R * s.R * Mat::Identity(2, 2);
  return st;
}

SymplecticTransform beam_splitter(double mu) {
  if (!(mu >= 0.0) || !(mu <= 1.0))
    throw std::invalid_argument("beam splitter reflectivity must be in [0, 1]");
  const double t = std::sqrt(mu), r = std::sqrt(1.0 - mu);
  Mat m = Mat::Zero(4, 4);
  m(0, 0) = t;
  m(0, 2) = r;
  m(1, 1) = t;
  m(1, 3) = r;
  m(2, 0) = -r;
  m(2, 2) = t;
  m(3, 1) = -r;
  m(3, 3) = t;
  return SymplecticTransform(std::move(m));
}

SymplecticTransform two_mode_squeezer(double r, double phi) {
  if (r < 0.0) throw std::invalid_argument("two-mode squeezer needs r >= 0");
  const double ch = std::cosh(r), sh = std::sinh(r);
  const double c = std::cos(phi), s = std::sin(phi);
  Mat m = Mat::Zero(4, 4);
  // reflection M(phi) = [[c, s], [s, -c]] couples the partner mode
  m(0, 0) = ch;
  m(0, 2) = sh * c;
  m(0, 3) = sh * s;
  m(1, 1) = ch;
  m(1, 2) = sh * s;
  m(1, 3) = -sh * c;
  m(2, 0) = sh * c;
  m(2, 1) = sh * s;
  m(2, 2) = ch;
  m(3, 0) = sh * s;
  m(3, 1) = -sh * c;
  m(3, 3) = ch;
  return SymplecticTransform(std::move(m));
}

SymplecticTransform phase_shift(double phi) {
  const double c = std::cos(phi), s = std::sin(phi);
  Mat m(2, 2);
  m << c, -s, s, c;
  return SymplecticTransform(std::move(m));
}

SymplecticTransform squeezer(double w, double alpha) {
  const double q = std::exp(w);
  const double c = std::cos(alpha), s = std::sin(alpha);
  Mat rot(2, 2), sq(2, 2);
  rot << c, -s, s, c;
  sq << q, 0.0, 0.0, 1.0 / q;
  return SymplecticTransform(rot * sq * rot.transpose());
}

SymplecticTransform displacement(double d, double beta) {
  if (d < 0.0) throw std::invalid_argument("displacement needs d >= 0");
  Vec shift(2);
  shift << d * std::cos(beta), d * std::sin(beta);
  return SymplecticTransform(Mat::Identity(2, 2), std::move(shift));
}

GaussianState apply(const SymplecticTransform& t, const GaussianState& s,
                    std::span<const int> modes) {
  if (static_cast<int>(modes.size()) != t.modes())
    throw std::invalid_argument("transform arity does not match mode list");
  for (size_t i = 0; i < modes.size(); ++i) {
    if (modes[i] < 0 || modes[i] >= s.modes)
      throw std::invalid_argument("transform applied to a mode out of range");
    for (size_t j = i + 1; j < modes.size(); ++j)
      if (modes[i] == modes[j])
        throw std::invalid_argument("transform mode list must be distinct");
  }

  // Embed into the full phase space.
  const int n = 2 * s.modes;
  Mat big = Mat::Identity(n, n);
  Vec shift = Vec::Zero(n);
  for (size_t i = 0; i < modes.size(); ++i) {
    shift.segment<2>(2 * modes[i]) = t.shift.segment<2>(2 * i);
    for (size_t j = 0; j < modes.size(); ++j) {
      big.block<2, 2>(2 * modes[i], 2 * modes[j]) =
          t.matrix.block<2, 2>(2 * i, 2 * j);
    }
  }

  GaussianState out;
  out.modes = s.modes;
  out.mean = big * s.mean + shift;
  out.cov = big * s.cov * big.transpose();
  return out;
}

GaussianState apply(const SymplecticTransform& t, const GaussianState& s) {
  std::vector<int> all(static_cast<size_t>(s.modes));
  for (int i = 0; i < s.modes; ++i) all[static_cast<size_t>(i)] = i;
  return apply(t, s, all);
}

GaussianState loss_channel(const GaussianState& s, int mode,
                           const NoiseChannel& ch) {
  if (mode < 0 || mode >= s.modes)
    throw std::invalid_argument("loss channel mode out of range");
  const double rt = std::sqrt(ch.T);
  GaussianState out = s;
  out.mean.segment<2>(2 * mode) *= rt;
  // scale the mode's rows and columns by sqrt(T), then add (1-T) Veps on the
  // diagonal block; this is the Gaussian CP map of mixing with a thermal
  // environment of variance Veps on a beam splitter of transmittance T.
  out.cov.middleRows<2>(2 * mode) *= rt;
  out.cov.middleCols<2>(2 * mode) *= rt;
  out.cov.block<2, 2>(2 * mode, 2 * mode) +=
      (1.0 - ch.T) * ch.Veps * Mat::Identity(2, 2);
  return out;
}

double mean_photon(const GaussianState& s, int mode) {
  if (mode < 0 || mode >= s.modes)
    throw std::invalid_argument("mean_photon mode out of range");
  const double vx = s.cov(2 * mode, 2 * mode);
  const double vp = s.cov(2 * mode + 1, 2 * mode + 1);
  const double mx = s.mean(2 * mode);
  const double mp = s.mean(2 * mode + 1);
  return (vx + vp + mx * mx + mp * mp - 2.0) / 4.0;
}

Vec sample_phase_point(const GaussianState& s, std::mt19937_64& rng,
                       GaussianSampler& gauss) {
  const int n = 2 * s.modes;
  Mat factor;
  Eigen::LLT<Mat> llt(s.cov);
  if (llt.info() == Eigen::Success) {
    factor = llt.matrixL();
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(s.cov);
    if (es.info() != Eigen::Success)
      throw std::runtime_error("covariance eigendecomposition failed");
    if (es.eigenvalues().minCoeff() < -1e-10)
      throw std::runtime_error("covariance is not positive semi-definite");
    Vec clipped = es.eigenvalues().cwiseMax(1e-12);
    factor = es.eigenvectors() * clipped.cwiseSqrt().asDiagonal();
  }
  Vec g(n);
  for (int i = 0; i < n; ++i) g(i) = gauss(rng);
  return s.mean + factor * g;
}

}  // namespace thermint
