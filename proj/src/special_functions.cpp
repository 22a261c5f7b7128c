#include "thermint/special_functions.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace thermint {

namespace {

bool is_nonpositive_integer(double x) {
  return x <= 0.0 && x == std::floor(x);
}

// 1/Gamma(x), zero at the poles (turns vanishing connection coefficients
// into exact zeros instead of inf/nan arithmetic).
double inv_gamma(double x) {
  if (is_nonpositive_integer(x)) return 0.0;
  return 1.0 / std::tgamma(x);
}

}  // namespace

const QuadratureRule& gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  static std::mutex guard;
  static std::map<int, QuadratureRule> cache;
  std::scoped_lock lock(guard);
  if (auto it = cache.find(order); it != cache.end()) return it->second;

  // Golub-Welsch: nodes are eigenvalues of the Jacobi matrix, weights come
  // from the first component of the normalized eigenvectors.
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int k = 1; k < order; ++k)
    jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jacobi);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("quadrature eigendecomposition failed");

  QuadratureRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  const double total_mass = std::sqrt(std::numbers::pi);
  for (int i = 0; i < order; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = total_mass * v0 * v0;
  }
  return cache.emplace(order, std::move(rule)).first->second;
}

std::complex<double> kummer_m(double a, double b, std::complex<double> z) {
  if (is_nonpositive_integer(b))
    throw std::invalid_argument("M(a, b, z) has poles at non-positive integer b");
  if (z.real() < 0.0) return std::exp(z) * kummer_m(b - a, b, -z);
  std::complex<double> term = 1.0;
  std::complex<double> sum = 1.0;
  for (int k = 0; k < 2000; ++k) {
    term *= (a + k) / (b + k) * z / (k + 1.0);
    sum += term;
    if (std::abs(term) <= 1e-17 * std::abs(sum)) return sum;
  }
  throw std::runtime_error("confluent hypergeometric series did not converge");
}

std::complex<double> tricomi_u(double a, double b, std::complex<double> z) {
  if (b == std::floor(b))
    throw std::invalid_argument("U(a, b, z) implemented for non-integer b only");
  // The connection formula adds two terms that grow like e^z while U itself
  // decays polynomially, so on the right half plane it loses ~|z|/ln(10)
  // digits and must hand over to the asymptotic series early; on the left
  // half plane the reflected M-series are damped and stay accurate longer.
  const double crossover = z.real() >= 0.0 ? 20.0 : 40.0;
  if (std::abs(z) > crossover) {
    // divergent asymptotic series; truncate at the smallest term
    std::complex<double> term = 1.0;
    std::complex<double> sum = 1.0;
    double smallest = 1.0;
    for (int k = 0; k < 300; ++k) {
      term *= -(a + k) * (a - b + 1.0 + k) / ((k + 1.0) * z);
      const double mag = std::abs(term);
      if (mag > smallest) break;
      sum += term;
      smallest = mag;
      if (mag <= 1e-17 * std::abs(sum)) break;
    }
    return std::pow(z, -a) * sum;
  }
  const std::complex<double> first =
      std::tgamma(1.0 - b) * inv_gamma(a - b + 1.0) * kummer_m(a, b, z);
  const std::complex<double> second = std::tgamma(b - 1.0) * inv_gamma(a) *
                                      std::pow(z, 1.0 - b) *
                                      kummer_m(a - b + 1.0, 2.0 - b, z);
  return first + second;
}

}  // namespace thermint
