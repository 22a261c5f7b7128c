#include <cmath>
#include <numbers>
#include <vector>

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "thermint/rng.hpp"
#include "thermint/special_functions.hpp"
#include "thermint/statistics.hpp"

using namespace thermint;

namespace {

constexpr double half_pi = std::numbers::pi / 2.0;

doctest::Approx near(double v) { return doctest::Approx(v).epsilon(1e-9); }

const ProcessParams bench(1.23, 0.63, 1.67);

}  // namespace

TEST_CASE("c-statistic moments match the closed forms") {
  CHECK(c_moments(1.0, 75.0, 0.3, 100).mean == near(2.0));
  auto c = c_moments(1.23, 75.0, 0.3, 10000);
  CHECK(c.mean == near(2.0430081300813));
  CHECK(c.variance == near(4.4895442979937e-4));
  CHECK(c_moments(1.23, 75.0, 0.3, 20000).variance == near(c.variance / 2.0));
  // the statistic only sees q + 1/q, so both branches give the same moments
  auto inv = c_moments(1.0 / 1.23, 75.0, 0.3, 10000);
  CHECK(inv.mean == near(c.mean));
  CHECK(inv.variance == near(c.variance));
  CHECK_THROWS_AS(c_moments(1.23, 1.0, 0.3, 100), std::invalid_argument);
  CHECK_THROWS_AS(c_moments(1.23, 75.0, 0.0, 100), std::invalid_argument);
  CHECK_THROWS_AS(c_moments(0.0, 75.0, 0.3, 100), std::invalid_argument);
  CHECK_THROWS_AS(c_moments(1.23, 75.0, 0.3, 0), std::invalid_argument);
}

TEST_CASE("sampled fringe amplitudes reproduce the c variance") {
  // the variance formula describes a thermal, undisplaced source read off at
  // the fringe peak, so sample exactly that: one setting with phi_ref = Phi
  ProcessParams peak(1.23, 0.63, 0.0);
  auto scheme = SchemeConfig::passive(0.3);
  ExperimentPlan plan{{Source(std::sqrt(75.0), 0.0)}, {{0, 0.63, true, 800}}, 1};
  const int blocks = 1500;
  double sum = 0.0, sum_sq = 0.0;
  for (int b = 0; b < blocks; ++b) {
    auto rng = make_stream(7, b);
    auto stats = simulate_shots(scheme, peak, plan, rng);
    const double c =
        2.0 * stats[0].mean_minus / (std::sqrt(0.3 * 0.7) * 74.0);
    sum += c;
    sum_sq += c * c;
  }
  const double mean = sum / blocks;
  const double var = sum_sq / blocks - mean * mean;
  auto c = c_moments(1.23, 75.0, 0.3, 800);
  CHECK(std::abs(mean - c.mean) < 4.0 * std::sqrt(c.variance / blocks));
  CHECK(var / c.variance > 0.85);
  CHECK(var / c.variance < 1.15);
}

TEST_CASE("sqrt moments collapse to the delta limit and keep the identity") {
  const double m = 2.0430081300813;
  auto dl = sqrt_shifted_moments(m, 1e-12);
  CHECK(dl.mean == doctest::Approx(std::sqrt(m * m - 4.0)).epsilon(1e-8));
  CHECK(dl.negative_mass == 0.0);

  auto c = c_moments(3.0, 25.0, 0.2, 100000);
  CHECK(c.variance == near(2.0693769290123e-4));
  auto s = sqrt_shifted_moments(c.mean, c.variance);
  CHECK(s.mean == near(2.6666448326648));
  const double nu = c.mean * c.mean + c.variance - 4.0;
  CHECK(std::abs(s.variance - (nu - s.mean * s.mean)) < 1e-12);
  CHECK(s.negative_mass < 1e-15);

  CHECK_THROWS_AS(sqrt_shifted_moments(2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sqrt_shifted_moments(2.0, -1.0), std::invalid_argument);
  // at q = 1 the truncation point sits inside the bulk: the quadrature must
  // refuse rather than return a half-converged number
  CHECK_THROWS_AS(sqrt_shifted_moments(2.0, 0.1), std::runtime_error);
}

TEST_CASE("quadrature and confluent-hypergeometric paths agree") {
  for (std::uint64_t n : {std::uint64_t{10000}, std::uint64_t{100000},
                          std::uint64_t{1000000}}) {
    auto c = c_moments(3.0, 25.0, 0.2, n);
    const double gh = sqrt_shifted_moments(c.mean, c.variance).mean;
    const double u = sqrt_shifted_mean_u(c.mean, c.variance);
    CAPTURE(n);
    CHECK(std::abs(gh - u) / gh < 1e-6);
  }
}

TEST_CASE("q-hat approximation chains the component moments") {
  auto a = qhat_normal_approx(3.0, 25.0, 0.2, 100000);
  CHECK(a.q_mean == near((a.mean_c + a.sqrt_mean) / 2.0));
  CHECK(a.q_var == near((a.var_c + a.sqrt_var) / 2.0));
  CHECK(a.q_mean == doctest::Approx(3.0).epsilon(1e-2));
  CHECK(a.sqrt_var >= 0.0);

  auto tight = qhat_normal_approx(1.23, 75.0, 0.3, 1000000000000ull);
  CHECK(tight.q_mean == doctest::Approx(1.23).epsilon(1e-6));
}

TEST_CASE("approximate q variance tracks the Monte-Carlo spread") {
  // thermal source regime: V = 25, mu = 0.2, q = 3.  Phi = 0 puts the phi = 0
  // setting on the fringe peak, where the amplitude error matches the peak
  // variance formula; away from the peak the radial error is anisotropic.
  ProcessParams p(3.0, 0.0, 0.0);
  auto scheme = SchemeConfig::passive(0.2);
  auto plan = build_plan(Selector::ideal, {Source(5.0, 0.0)}, 10000, 1200);
  auto res = empirical_mse(scheme, p, plan, Selector::ideal,
                           MseOptions{19, 0});
  const auto& q = res[1];
  REQUIRE(q.parameter == "q");
  auto a = qhat_normal_approx(3.0, 25.0, 0.2, 10000);
  CHECK(q.mse / a.q_var > 0.75);
  CHECK(q.mse / a.q_var < 1.25);
}

TEST_CASE("fisher information is affine in N and zero at the boundary") {
  CHECK(fisher_information_normal(1.0, 25.0, 0.2, 1000) == 0.0);
  const double i1 = fisher_information_normal(3.0, 25.0, 0.2, 100000);
  const double i2 = fisher_information_normal(3.0, 25.0, 0.2, 200000);
  const double i3 = fisher_information_normal(3.0, 25.0, 0.2, 300000);
  CHECK(i2 - i1 == near(i3 - i2));
  CHECK((i2 - i1) / 100000.0 == near(3.818171e-2).epsilon(1e-5));
  CHECK(i1 - (i2 - i1) == doctest::Approx(0.211514).epsilon(1e-5));
  CHECK(cramer_rao_bound(fisher_information_normal(3.0, 25.0, 0.2, 10000)) ==
        near(2.617605e-3));
}

TEST_CASE("closed-form information equals the integrated score") {
  const double q = 1.7, V = 40.0, mu = 0.35;
  const std::uint64_t n = 500;
  auto mean_of = [&](double qq) {
    return (V - 1.0) / 2.0 * std::sqrt(mu * (1.0 - mu)) * (qq + 1.0 / qq);
  };
  auto var_of = [&](double qq) {
    return (qq * qq + 1.0 / (qq * qq)) *
           (2.0 * (1.0 - mu) * mu * (V - 1.0) * (V - 1.0) + V) /
           (4.0 * static_cast<double>(n));
  };
  const double h = 1e-6;
  const double mean_slope = (mean_of(q + h) - mean_of(q - h)) / (2.0 * h);
  const double var_slope = (var_of(q + h) - var_of(q - h)) / (2.0 * h);
  const double S = var_of(q);
  // E[(d log f / dq)^2] under x = mean + sqrt(2 S) u, a quartic in u
  const auto& rule = gauss_hermite(8);
  double integral = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double u = rule.nodes[i];
    const double score = mean_slope * std::sqrt(2.0 * S) * u / S +
                         var_slope * (2.0 * u * u - 1.0) / (2.0 * S);
    integral += rule.weights[i] * score * score;
  }
  integral /= std::sqrt(std::numbers::pi);
  CHECK(integral ==
        doctest::Approx(fisher_information_normal(q, V, mu, n)).epsilon(1e-6));
}

TEST_CASE("the variance bound inverts the information") {
  CHECK(cramer_rao_bound(4.0) == 0.25);
  CHECK(std::isinf(cramer_rao_bound(0.0)));
  CHECK(std::isinf(
      cramer_rao_bound(fisher_information_normal(1.0, 25.0, 0.2, 100))));
}

TEST_CASE("power-law fits recover exact scalings") {
  std::vector<std::pair<double, double>> inv;
  for (double n : {1e3, 1e4, 1e5, 1e6}) inv.push_back({n, 0.37 / n});
  auto fit = scaling_fit(inv);
  CHECK(fit.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(fit.intercept == near(std::log(0.37)));
  CHECK(fit.slope_stderr < 1e-12);

  std::vector<std::pair<double, double>> flat{{1e3, 0.2}, {1e4, 0.2}, {1e5, 0.2}};
  CHECK(std::abs(scaling_fit(flat).slope) < 1e-12);

  std::vector<std::pair<double, double>> noisy{{10.0, 1.0}, {100.0, 0.11},
                                               {1000.0, 0.009}};
  CHECK(scaling_fit(noisy).slope_stderr > 0.0);

  CHECK_THROWS_AS(scaling_fit({{1.0, 1.0}, {2.0, 0.5}}), std::invalid_argument);
  CHECK_THROWS_AS(scaling_fit({{1.0, 1.0}, {1.0, 0.5}, {2.0, 0.2}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(scaling_fit({{1.0, 1.0}, {2.0, 0.0}, {3.0, 0.2}}),
                  std::invalid_argument);
}

TEST_CASE("a truth-returning estimator gives exactly zero error") {
  auto plan = build_plan(Selector::ideal, {Source(5.0, 10.0)}, 100, 16);
  BlockEstimator stub = [](std::span<const SettingStats>) {
    EstimateReport r;
    r.Phi = bench.Phi;
    r.q = bench.q;
    r.d = bench.d;
    return r;
  };
  auto res = empirical_mse(SchemeConfig::passive(0.3), bench, plan, stub,
                           MseOptions{5, 1});
  REQUIRE(res.size() == 3);
  for (const auto& r : res) {
    CAPTURE(r.parameter);
    CHECK(r.mse == 0.0);
    CHECK(r.bias == 0.0);
    CHECK(r.variance == 0.0);
    CHECK(r.clamp_fraction == 0.0);
    CHECK(r.blocks == 16);
    CHECK(r.blocks_failed == 0);
    CHECK(r.shots == 100);
    CHECK(r.master_seed == 5);
  }
  CHECK(res[0].parameter == "Phi");
  CHECK(res[1].parameter == "q");
  CHECK(res[2].parameter == "d");
  CHECK(res[0].truth == near(0.63));
}

TEST_CASE("phase errors wrap across the pi boundary") {
  ProcessParams p(1.23, 3.1, 1.67);
  auto plan = build_plan(Selector::ideal, {Source(5.0, 10.0)}, 50, 4);
  BlockEstimator stub = [](std::span<const SettingStats>) {
    EstimateReport r;
    r.Phi = -3.1;  // the same angle approached from the other side
    r.q = 1.23;
    r.d = 1.67;
    return r;
  };
  auto res = empirical_mse(SchemeConfig::passive(0.3), p, plan, stub,
                           MseOptions{5, 1});
  const double wrapped = 2.0 * std::numbers::pi - 6.2;
  CHECK(res[0].bias == near(wrapped));
  CHECK(res[0].mse == near(wrapped * wrapped));
  CHECK(res[0].variance == near(0.0));
}

TEST_CASE("failed blocks are counted and bounded") {
  auto plan = build_plan(Selector::ideal, {Source(5.0, 10.0)}, 50, 9);
  int calls = 0;
  BlockEstimator flaky = [&calls](std::span<const SettingStats>) {
    if (calls++ % 3 == 0) throw std::runtime_error("boom");
    EstimateReport r;
    r.Phi = bench.Phi;
    r.q = bench.q;
    return r;
  };
  auto res = empirical_mse(SchemeConfig::passive(0.3), bench, plan, flaky,
                           MseOptions{5, 1});
  REQUIRE(res.size() == 2);  // the stub never reports d
  CHECK(res[0].blocks == 6);
  CHECK(res[0].blocks_failed == 3);
  CHECK(res[1].mse == 0.0);

  int all = 0;
  BlockEstimator broken = [&all](std::span<const SettingStats>) -> EstimateReport {
    ++all;
    throw std::runtime_error("boom");
  };
  CHECK_THROWS_AS(empirical_mse(SchemeConfig::passive(0.3), bench, plan, broken,
                                MseOptions{5, 1}),
                  std::runtime_error);
}

TEST_CASE("results are bit-identical across reruns and thread counts") {
  auto plan = build_plan(Selector::ideal, {Source(5.0, 10.0)}, 300, 24);
  auto scheme = SchemeConfig::passive(0.3);
  auto one = empirical_mse(scheme, bench, plan, Selector::ideal,
                           MseOptions{42, 1});
  auto three = empirical_mse(scheme, bench, plan, Selector::ideal,
                             MseOptions{42, 3});
  auto again = empirical_mse(scheme, bench, plan, Selector::ideal,
                             MseOptions{42, 1});
  REQUIRE(one.size() == three.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(one[i].mse == three[i].mse);
    CHECK(one[i].bias == three[i].bias);
    CHECK(one[i].variance == three[i].variance);
    CHECK(one[i].mse == again[i].mse);
  }
  auto other = empirical_mse(scheme, bench, plan, Selector::ideal,
                             MseOptions{43, 1});
  CHECK(other[0].mse != one[0].mse);
}

TEST_CASE("detector efficiency is undone before estimation") {
  auto plan = build_plan(Selector::ideal, {Source(5.0, 10.0)}, 400, 20);
  auto clean = SchemeConfig::passive(0.3);
  auto lossy = clean;
  lossy.eta = 0.8;
  // scaling by eta and dividing it back out costs one rounding each way, so
  // the corrected run matches the unit-efficiency run to machine precision
  auto a = empirical_mse(clean, bench, plan, Selector::ideal, MseOptions{9, 1});
  auto b = empirical_mse(lossy, bench, plan, Selector::ideal, MseOptions{9, 1});
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b[i].mse == doctest::Approx(a[i].mse).epsilon(1e-9));
    CHECK(std::abs(b[i].bias - a[i].bias) <
          1e-9 * (1.0 + std::abs(a[i].bias)));
  }
}

TEST_CASE("pipelines expose exactly the parameters they estimate") {
  std::vector<Source> two{Source(5.0, 10.0), Source(std::sqrt(300.0), 0.0)};
  auto scheme = SchemeConfig::passive(0.3);
  scheme.process_noise = NoiseChannel{0.8, 1.2};

  auto ts_plan = build_plan(Selector::two_source, two, 250, 20);
  auto ts = empirical_mse(scheme, bench, ts_plan, Selector::two_source,
                          MseOptions{11, 1});
  REQUIRE(ts.size() == 3);
  CHECK(ts[2].parameter == "d");

  auto full = scheme;
  full.channel_noise = NoiseChannel{0.9, 1.3};
  auto cb_plan = build_plan(Selector::combined, two, 250, 20);
  auto cb = empirical_mse(full, bench, cb_plan, Selector::combined,
                          MseOptions{11, 1});
  REQUIRE(cb.size() == 2);  // the displacement is unidentifiable here
  CHECK(cb[0].parameter == "Phi");
  CHECK(cb[1].parameter == "q");
}

TEST_CASE("clamp fractions reflect truth on the boundary") {
  ProcessParams edge(1.0, 0.63, 0.0);
  auto plan = build_plan(Selector::ideal, {Source(5.0, 10.0)}, 400, 160);
  auto res = empirical_mse(SchemeConfig::passive(0.3), edge, plan,
                           Selector::ideal, MseOptions{3, 1});
  const auto& q = res[1];
  const auto& d = res[2];
  // at q = 1 the fringe statistic falls below the boundary about half the
  // time; at d = 0 the leftover-photon budget goes negative similarly often
  CHECK(q.clamp_fraction > 0.2);
  CHECK(q.clamp_fraction < 0.8);
  CHECK(d.clamp_fraction > 0.05);
}

TEST_CASE("error decomposition holds and shrinks with N") {
  auto scheme = SchemeConfig::passive(0.3);
  auto small = build_plan(Selector::ideal, {Source(5.0, 10.0)}, 200, 120);
  auto large = build_plan(Selector::ideal, {Source(5.0, 10.0)}, 3200, 120);
  auto rs = empirical_mse(scheme, bench, small, Selector::ideal, MseOptions{77, 1});
  auto rl = empirical_mse(scheme, bench, large, Selector::ideal, MseOptions{77, 1});
  for (std::size_t i = 0; i < rs.size(); ++i) {
    CAPTURE(rs[i].parameter);
    CHECK(std::abs(rs[i].mse - rs[i].bias * rs[i].bias - rs[i].variance) <=
          1e-12 * std::max(rs[i].mse, 1e-30));
    CHECK(rs[i].mse > rl[i].mse);
  }
}
