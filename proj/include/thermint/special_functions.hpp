#pragma once

#include <complex>
#include <vector>

namespace thermint {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Hermite rule: sum_i w_i f(x_i) approximates the integral of
/// f(x) exp(-x^2) over the real line, exact for polynomials of degree
/// 2*order - 1. Rules are built once per order and cached (thread-safe).
const QuadratureRule& gauss_hermite(int order);

/// Kummer's confluent hypergeometric M(a, b, z). Series evaluation with the
/// e^z reflection for Re z < 0 (keeps the terms same-signed). b must not be
/// a non-positive integer.
std::complex<double> kummer_m(double a, double b, std::complex<double> z);

/// Tricomi's confluent hypergeometric U(a, b, z) on the principal branch,
/// including the continuation to negative real z (approached from above).
/// Non-integer b only: the integer-b limit is not needed here. Uses the
/// M-based connection formula for |z| <= 40 and the divergent asymptotic
/// series (truncated at its smallest term) beyond.
std::complex<double> tricomi_u(double a, double b, std::complex<double> z);

}  // namespace thermint
