#include "thermint/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <thread>

#include "thermint/rng.hpp"
#include "thermint/special_functions.hpp"

namespace thermint {

namespace {

void check_fringe_regime(double V, double mu) {
  if (!(V > 1.0))
    throw std::invalid_argument("moments need a source above vacuum (V > 1)");
  if (!(mu > 0.0) || !(mu < 1.0))
    throw std::invalid_argument("moments need mu strictly inside (0, 1)");
}

double gh_sqrt_mean(int order, double nu, double root2_tau) {
  const QuadratureRule& rule = gauss_hermite(order);
  double sum = 0.0;
  for (int i = 0; i < order; ++i) {
    const double x = nu + root2_tau * rule.nodes[i];
    if (x > 0.0) sum += rule.weights[i] * std::sqrt(x);
  }
  return sum / std::sqrt(std::numbers::pi);
}

}  // namespace

CMoments c_moments(double q, double V, double mu, std::uint64_t shots) {
  check_fringe_regime(V, mu);
  if (!(q > 0.0)) throw std::invalid_argument("moments need q > 0");
  if (shots == 0) throw std::invalid_argument("moments need at least one shot");
  const double qq = q * q + 1.0 / (q * q);
  const double spread =
      qq * (2.0 + V / ((1.0 - mu) * mu * (V - 1.0) * (V - 1.0)));
  return CMoments{q + 1.0 / q, spread / static_cast<double>(shots)};
}

SqrtMoments sqrt_shifted_moments(double mean_c, double var_c) {
  if (!(var_c > 0.0))
    throw std::invalid_argument("sqrt moments need a positive c variance");
  const double nu = mean_c * mean_c + var_c - 4.0;
  const double tau =
      std::sqrt(2.0 * var_c * (2.0 * mean_c * mean_c + var_c));

  SqrtMoments out;
  out.negative_mass = 0.5 * std::erfc(nu / (std::numbers::sqrt2 * tau));
  const double root2_tau = std::numbers::sqrt2 * tau;
  double prev = gh_sqrt_mean(64, nu, root2_tau);
  for (int order = 128; order <= 1024; order *= 2) {
    const double cur = gh_sqrt_mean(order, nu, root2_tau);
    if (std::abs(cur - prev) <= 1e-8 * std::max(std::abs(cur), 1e-300)) {
      out.mean = cur;
      out.variance = nu - cur * cur;
      return out;
    }
    prev = cur;
  }
  throw std::runtime_error(
      "sqrt-moment quadrature did not settle under order doubling; the "
      "truncation point lies inside the bulk of the distribution");
}

double sqrt_shifted_mean_u(double mean_c, double var_c) {
  if (!(var_c > 0.0))
    throw std::invalid_argument("sqrt moments need a positive c variance");
  const double nu = mean_c * mean_c + var_c - 4.0;
  const double tau2 = 2.0 * var_c * (2.0 * mean_c * mean_c + var_c);
  const std::complex<double> u =
      tricomi_u(-0.25, 0.5, {-nu * nu / (2.0 * tau2), 0.0});
  const std::complex<double> prefactor =
      std::complex<double>(1.0, -1.0) / std::pow(2.0, 0.25) *
      std::sqrt(std::sqrt(tau2));
  return (prefactor * u).real();
}

ApproxMoments qhat_normal_approx(double q, double V, double mu,
                                 std::uint64_t shots) {
  const CMoments c = c_moments(q, V, mu, shots);
  const SqrtMoments s = sqrt_shifted_moments(c.mean, c.variance);
  ApproxMoments out;
  out.mean_c = c.mean;
  out.var_c = c.variance;
  out.sqrt_mean = s.mean;
  out.sqrt_var = s.variance;
  out.q_mean = (c.mean + s.mean) / 2.0;
  out.q_var = (c.variance + s.variance) / 2.0;
  return out;
}

double fisher_information_normal(double q, double V, double mu,
                                 std::uint64_t shots) {
  check_fringe_regime(V, mu);
  if (!(q > 0.0)) throw std::invalid_argument("moments need q > 0");
  if (shots == 0) throw std::invalid_argument("moments need at least one shot");
  const double n = static_cast<double>(shots);
  const double qq = q * q + 1.0 / (q * q);
  const double spread = 2.0 * (1.0 - mu) * mu * (V - 1.0) * (V - 1.0) + V;
  const double mean_slope =
      (V - 1.0) / 2.0 * std::sqrt(mu * (1.0 - mu)) * (1.0 - 1.0 / (q * q));
  const double var = qq * spread / (4.0 * n);
  const double var_slope =
      (2.0 * q - 2.0 / (q * q * q)) * spread / (4.0 * n);
  return mean_slope * mean_slope / var +
         var_slope * var_slope / (2.0 * var * var);
}

double cramer_rao_bound(double fisher) {
  if (fisher <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / fisher;
}

ScalingFit scaling_fit(const std::vector<std::pair<double, double>>& points) {
  if (points.size() < 3)
    throw std::invalid_argument("power-law fit needs at least three points");
  const std::size_t n = points.size();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(points[i].first > 0.0) || !(points[i].second > 0.0))
      throw std::invalid_argument("power-law fit needs positive coordinates");
    if (i > 0 && points[i].first <= points[i - 1].first)
      throw std::invalid_argument(
          "power-law fit needs strictly increasing shot counts");
    xs[i] = std::log(points[i].first);
    ys[i] = std::log(points[i].second);
  }
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xbar += xs[i];
    ybar += ys[i];
  }
  xbar /= static_cast<double>(n);
  ybar /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - xbar) * (xs[i] - xbar);
    sxy += (xs[i] - xbar) * (ys[i] - ybar);
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = ybar - fit.slope * xbar;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = ys[i] - fit.intercept - fit.slope * xs[i];
    ssr += r * r;
  }
  const double s2 = ssr / static_cast<double>(n - 2);
  fit.slope_stderr = std::sqrt(s2 / sxx);
  fit.intercept_stderr =
      std::sqrt(s2 * (1.0 / static_cast<double>(n) + xbar * xbar / sxx));
  return fit;
}

std::vector<MseResult> empirical_mse(const SchemeConfig& scheme,
                                     const ProcessParams& process,
                                     const ExperimentPlan& plan,
                                     Selector selector,
                                     const MseOptions& opts) {
  return empirical_mse(
      scheme, process, plan,
      [&](std::span<const SettingStats> stats) {
        return run_pipeline(selector, scheme, stats, plan.sources);
      },
      opts);
}

std::vector<MseResult> empirical_mse(const SchemeConfig& scheme,
                                     const ProcessParams& process,
                                     const ExperimentPlan& plan,
                                     const BlockEstimator& estimator,
                                     const MseOptions& opts) {
  scheme.validate();
  plan.validate();
  const std::uint64_t blocks = plan.blocks;
  if (blocks < 2)
    throw std::invalid_argument("error statistics need at least two blocks");

  struct BlockOutcome {
    bool ok = false;
    double Phi = 0.0;
    std::optional<double> q, d;
    bool clamped_q = false, clamped_d = false;
  };
  std::vector<BlockOutcome> outcomes(blocks);

  int workers = opts.threads > 0
                    ? opts.threads
                    : static_cast<int>(
                          std::max(1u, std::thread::hardware_concurrency()));
  workers = static_cast<int>(
      std::min<std::uint64_t>(static_cast<std::uint64_t>(workers), blocks));

  auto run_stripe = [&](int stripe) {
    for (std::uint64_t b = stripe; b < blocks;
         b += static_cast<std::uint64_t>(workers)) {
      try {
        auto rng = make_stream(opts.master_seed, b);
        auto stats = simulate_shots(scheme, process, plan, rng);
        if (scheme.eta != 1.0)
          for (auto& s : stats) s = correct_efficiency(s, scheme.eta);
        const EstimateReport rep = estimator(stats);
        BlockOutcome& out = outcomes[b];
        out.ok = true;
        out.Phi = rep.Phi;
        out.q = rep.q;
        out.d = rep.d;
        out.clamped_q = rep.has(Flag::clamped_c);
        out.clamped_d = rep.has(Flag::negative_radicand);
      } catch (const std::exception&) {
        outcomes[b].ok = false;
      }
    }
  };
  if (workers == 1) {
    run_stripe(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(run_stripe, t);
    for (auto& th : pool) th.join();
  }

  std::uint64_t failed = 0;
  for (const auto& out : outcomes)
    if (!out.ok) ++failed;
  if (2 * failed > blocks)
    throw std::runtime_error("estimation failed in more than half the blocks");

  const BlockOutcome* first = nullptr;
  for (const auto& out : outcomes)
    if (out.ok) {
      first = &out;
      break;
    }
  const bool have_q = first->q.has_value();
  const bool have_d = first->d.has_value();

  struct Accumulated {
    std::string name;
    double truth;
    std::vector<double> errors;
    std::uint64_t clamped = 0;
  };
  std::vector<Accumulated> acc;
  acc.push_back({"Phi", process.Phi, {}, 0});
  if (have_q) acc.push_back({"q", process.q, {}, 0});
  if (have_d) acc.push_back({"d", process.d, {}, 0});

  for (const auto& out : outcomes) {
    if (!out.ok) continue;
    acc[0].errors.push_back(
        std::remainder(out.Phi - process.Phi, 2.0 * std::numbers::pi));
    std::size_t slot = 1;
    if (have_q) {
      acc[slot].errors.push_back(out.q.value() - process.q);
      if (out.clamped_q) ++acc[slot].clamped;
      ++slot;
    }
    if (have_d) {
      acc[slot].errors.push_back(out.d.value() - process.d);
      if (out.clamped_d) ++acc[slot].clamped;
    }
  }

  std::vector<MseResult> results;
  results.reserve(acc.size());
  for (const auto& a : acc) {
    const double m = static_cast<double>(a.errors.size());
    double mean = 0.0, mean_sq = 0.0;
    for (double e : a.errors) {
      mean += e;
      mean_sq += e * e;
    }
    mean /= m;
    mean_sq /= m;
    double centered = 0.0;
    for (double e : a.errors) centered += (e - mean) * (e - mean);
    MseResult r;
    r.parameter = a.name;
    r.truth = a.truth;
    r.mse = mean_sq;
    r.bias = mean;
    r.variance = centered / m;
    r.clamp_fraction = static_cast<double>(a.clamped) / m;
    r.blocks = a.errors.size();
    r.blocks_failed = failed;
    // report the per-measurement-round count; a calibration round may
    // carry a different number of samples
    r.shots = plan.settings.front().shots;
    for (const PlanSetting& st : plan.settings)
      if (st.apply_process) {
        r.shots = st.shots;
        break;
      }
    r.master_seed = opts.master_seed;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace thermint
