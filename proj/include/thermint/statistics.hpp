#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "thermint/estimators.hpp"

namespace thermint {

/// Normal-approximation moments of the fringe statistic c recovered from N
/// shots per reference phase: mean m = q + 1/q (N-independent) and a
/// variance shrinking like 1/N.
struct CMoments {
  double mean = 0.0;
  double variance = 0.0;
};

CMoments c_moments(double q, double V, double mu, std::uint64_t shots);

/// Moments of sqrt(max(X, 0)) where X models c^2 - 4 as
/// Normal(m^2 + s^2 - 4, 2 s^2 (2 m^2 + s^2)) for (m, s^2) = c moments.
/// `variance` is E(c^2-4) - mean^2, the delta-style identity used by the
/// q-hat approximation; `negative_mass` is the probability the normal model
/// puts below zero (where the sqrt is truncated).
struct SqrtMoments {
  double mean = 0.0;
  double variance = 0.0;
  double negative_mass = 0.0;
};

/// Gauss-Hermite evaluation with order doubling from 64; throws
/// std::runtime_error if doubling up to order 1024 still moves the mean by
/// more than 1e-8 relative (happens when the truncation point sits inside
/// the bulk of the distribution, i.e. near q = 1).
SqrtMoments sqrt_shifted_moments(double mean_c, double var_c);

/// Same expectation through the confluent-hypergeometric closed form,
/// Re[(1-i) 2^{-1/4} sqrt(tau) U(-1/4, 1/2, -nu^2 / (2 tau^2))]; kept as an
/// independent cross-check of the quadrature path.
double sqrt_shifted_mean_u(double mean_c, double var_c);

/// Normal-approximation mean/variance chain for q-hat = (c + sqrt(c^2-4))/2.
struct ApproxMoments {
  double mean_c = 0.0;
  double var_c = 0.0;
  double sqrt_mean = 0.0;
  double sqrt_var = 0.0;
  double q_mean = 0.0;  // (mean_c + sqrt_mean) / 2; biased above q
  double q_var = 0.0;   // (var_c + sqrt_var) / 2
};

ApproxMoments qhat_normal_approx(double q, double V, double mu,
                                 std::uint64_t shots);

/// Fisher information about q carried by the fringe-maximum statistic,
/// treated as a normal family: I = (d mean/dq)^2 / Var
/// + (d Var/dq)^2 / (2 Var^2). Affine in the shot count, I = a N + b.
double fisher_information_normal(double q, double V, double mu,
                                 std::uint64_t shots);

/// 1/I; +infinity when I <= 0 (no information — the bound is unbounded,
/// e.g. exactly at q = 1).
double cramer_rao_bound(double fisher);

/// Least-squares power-law fit log(mse) = intercept + slope * log(n).
struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
};

/// points are (n, mse) pairs with n strictly increasing and mse > 0;
/// needs at least three points.
ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points);

struct MseOptions {
  std::uint64_t master_seed = 1;
  int threads = 0;  // worker count; 0 picks hardware concurrency
};

/// Monte-Carlo error summary for one estimated parameter. The decomposition
/// mse = bias^2 + variance holds to rounding because the variance is the
/// population variance over the same blocks.
struct MseResult {
  std::string parameter;
  double truth = 0.0;
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double clamp_fraction = 0.0;  // fraction of blocks where this value clamped
  std::uint64_t blocks = 0;     // blocks that produced an estimate
  std::uint64_t blocks_failed = 0;
  std::uint64_t shots = 0;  // per setting, from the plan
  std::uint64_t master_seed = 0;
};

using BlockEstimator =
    std::function<EstimateReport(std::span<const SettingStats>)>;

/// Simulate plan.blocks independent blocks (per-block RNG streams split off
/// the master seed), estimate each, and reduce per-parameter squared errors
/// in block order. Bit-reproducible for any thread count. Phase errors are
/// wrapped into (-pi, pi]. Blocks whose estimator throws are counted as
/// failed; more than half failing is a hard error.
std::vector<MseResult> empirical_mse(const SchemeConfig& scheme,
                                     const ProcessParams& process,
                                     const ExperimentPlan& plan,
                                     Selector selector,
                                     const MseOptions& opts = {});

/// Same harness with an explicit per-block estimator (testing seam; the
/// selector overload forwards to run_pipeline).
std::vector<MseResult> empirical_mse(const SchemeConfig& scheme,
                                     const ProcessParams& process,
                                     const ExperimentPlan& plan,
                                     const BlockEstimator& estimator,
                                     const MseOptions& opts = {});

}  // namespace thermint
