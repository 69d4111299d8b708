#include <cmath>

#include <gtest/gtest.h>

#include "fixture_support.hpp"
#include "toa/closedform.hpp"
#include "toa/dynamics.hpp"
#include "toa/figures.hpp"

using namespace toa;

namespace {

Params make(double eps, double m, double spread) {
  Params p;
  p.eps = eps;
  p.mass = m;
  p.spread = spread;
  return p;
}

Complex fixture_value(const std::string& name) {
  const auto& f = toa::testing::fixture(name);
  return {f.value_re, f.value_im};
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

const double kRoot2Pi = std::sqrt(2.0 * kPi);

}  // namespace

TEST(TaylorCoeffs, LeadingMagnitudes) {
  const auto c = taylor_coeffs(0);
  EXPECT_NEAR(std::abs(c.b), std::pow(2.0, -1.25) * std::pow(kPi, -0.75) * std::tgamma(0.375), 1e-15);
  EXPECT_NEAR(std::abs(c.a), std::pow(kPi, -0.75) * std::tgamma(0.75) / 2.0, 1e-15);
  EXPECT_THROW(taylor_coeffs(-1), DomainError);
}

TEST(TaylorCoeffs, PhasesAreRootsOfUnity) {
  const Complex r = taylor_coeffs(2).b / taylor_coeffs(0).b;
  EXPECT_LT(r.real(), 0.0);
  EXPECT_NEAR(r.imag(), 0.0, 1e-15 * std::abs(r));
  for (int n = 0; n < 16; ++n) {
    const auto c = taylor_coeffs(n);
    // b_n phase is a multiple of pi/2, a_n phase of pi/8
    EXPECT_NEAR(std::remainder(std::arg(c.b), kPi / 2), 0.0, 1e-14) << n;
    EXPECT_NEAR(std::remainder(std::arg(c.a), kPi / 8), 0.0, 1e-14) << n;
  }
}

TEST(TaylorCoeffs, DerivativeFormAtArrivalReproducesB) {
  // D_p(0) = 2^{p/2} sqrt(pi) / Gamma((1-p)/2) links the two forms
  const auto p = make(0.1, 1.0, 1.0);
  for (int n = 0; n <= 12; ++n) {
    const Complex d = o_tau_derivative(n, p.center, p);
    EXPECT_LT(rel(d, taylor_coeffs(n).b), 1e-12) << n;
  }
}

TEST(OTauSeries, ValueAtOrigin) {
  const auto p = make(0.1, 2.0, 0.5);
  const auto r = o_tau_series(0.0, 0.0, p);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(rel(r.value, std::pow(p.mass / p.spread, 0.25) * taylor_coeffs(0).b), 1e-14);
}

TEST(OTauSeries, MatchesOracleIntegral) {
  const auto r = o_tau_series(0.1, 0.0, make(0.1, 1.0, 1.0));
  EXPECT_LT(rel(r.value, fixture_value("o_tau_0.1")), 1e-10);
}

TEST(OTauSeries, MatchesPipelineAtSmallEps) {
  const auto p = make(1e-4, 1.0, 1.0);
  const auto g = build_momentum_grid(p.eps, p.mass, p.spread, 4096, 2048);
  const auto s = coherent_amplitude(p, g, SplitTag::o_piece);
  for (double x : {0.0, 0.1, 0.5, 1.0}) {
    const auto d = to_position(s, {x * std::sqrt(p.spread / p.mass)});
    const auto r = o_tau_series(d.x[0], 0.0, p);
    ASSERT_TRUE(r.converged);
    EXPECT_LT(rel(kRoot2Pi * d.amplitude[0], r.value), 1e-5) << x;
  }
}

TEST(OTauSeries, SimilarityInvariance) {
  for (double x : {0.05, 0.3, 1.2}) {
    const auto a = o_tau_series(x, 0.0, make(0.1, 1.0, 1.0)).value;
    // m/Delta -> 4 m/Delta, x -> x/2 keeps sqrt(m/Delta) x
    const auto b = o_tau_series(x / 2, 0.0, make(0.1, 4.0, 1.0)).value / std::pow(4.0, 0.25);
    const auto c = o_tau_series(x * 3, 0.0, make(0.1, 1.0, 9.0)).value * std::pow(9.0, 0.25);
    EXPECT_LT(rel(b, a), 1e-12) << x;
    EXPECT_LT(rel(c, a), 1e-12) << x;
  }
}

TEST(OTauSeries, FlagsDivergenceOutsideRadius) {
  const auto r = o_tau_series(6.0, 0.0, make(0.1, 1.0, 1.0), 12);
  EXPECT_FALSE(r.converged);
  EXPECT_THROW(o_tau_series(0.1, 0.0, make(0.1, 1.0, 1.0), 0), DomainError);
}

TEST(OTauLargeT, DecaysWithThreeQuarterPower) {
  const auto p = make(0.1, 1.0, 1.0);
  std::vector<double> ts, lv;
  for (int j = 0; j <= 8; ++j) {
    ts.push_back(10.0 * std::pow(5.0, j / 8.0) * p.spread);
    lv.push_back(std::log(std::abs(o_tau_series(0.0, ts.back(), p).value)));
  }
  EXPECT_NEAR(log_slope(ts, lv), -0.75, 0.02 * 0.75);
  const double t = 50.0 * p.spread;
  EXPECT_NEAR(std::abs(o_tau_series(0.0, t, p).value) / std::abs(o_tau_large_t(t, p)), 1.0, 0.02);
  EXPECT_THROW(o_tau_large_t(p.center, p), DomainError);
}

TEST(OTauLargeT, PipelineFollowsEnvelope) {
  const auto p = make(1e-4, 1.0, 1.0);
  const auto g = build_momentum_grid(p.eps, p.mass, p.spread, 4096, 2048);
  const auto s = coherent_amplitude(p, g, SplitTag::o_piece);
  const double t = 50.0;
  const auto d = to_position(propagate(s, t), {0.0});
  EXPECT_NEAR(kRoot2Pi * std::abs(d.amplitude[0]) / std::abs(o_tau_large_t(t, p)), 1.0, 0.02);
}

TEST(EpsTau, ApproximationLimitAtOrigin) {
  const auto p = make(0.01, 1.0, 1.0);
  const auto r = eps_tau_closed(0.0, p);
  const double lim = std::pow(2 * kPi, -0.25) * std::sqrt(std::pow(p.eps, 3) * p.spread / (2 * p.mass)) * 2 / kSqrtPi;
  EXPECT_NEAR(r.approx.real(), lim, 1e-15 * lim);
  EXPECT_LT(rel(r.full, r.approx), 1e-3);
  EXPECT_TRUE(r.approx_valid);
}

TEST(EpsTau, FullFormMatchesOracle) {
  const auto& f = toa::testing::fixture("eps_tau_ex1");
  const auto p = make(f.params["eps"], f.params["mass"], f.params["spread"]);
  const auto r = eps_tau_closed(f.params["x"].get<double>(), p);
  EXPECT_LT(rel(r.full, fixture_value("eps_tau_ex1")), 1e-9);
}

TEST(EpsTau, FullFormMatchesPipeline) {
  const auto p = make(0.1, 1.0, 1.0);
  const auto s = coherent_amplitude(p, build_momentum_grid(p.eps, p.mass, p.spread, 2048, 512), SplitTag::eps_piece);
  for (double ex : {0.01, 0.1, 1.0, 10.0}) {
    const double x = ex / p.eps;
    const auto d = to_position(s, {x});
    EXPECT_LT(rel(kRoot2Pi * d.amplitude[0], eps_tau_closed(x, p).full), 1e-6) << ex;
  }
}

TEST(EpsTau, LargeDistanceFallsAsInverseRoot) {
  const auto p = make(0.01, 1.0, 1.0);
  const double x1 = 1e4 / p.eps, x2 = 4e4 / p.eps;
  const double r = std::abs(eps_tau_closed(x1, p).approx) / std::abs(eps_tau_closed(x2, p).approx);
  EXPECT_NEAR(r, 2.0, 0.02 * 2.0);
  // and the magnitude is sqrt(eps^2 Delta/(x m)) up to a fixed constant
  const double shape = std::sqrt(p.eps * p.eps * p.spread / (x1 * p.mass));
  EXPECT_NEAR(std::abs(eps_tau_closed(x1, p).approx) / shape, std::pow(2 * kPi, -0.25) / std::sqrt(2.0), 0.01);
}

TEST(EpsTau, ReflectionAndValidity) {
  const auto p = make(0.1, 1.0, 1.0);
  const auto a = eps_tau_closed(7.0, p), b = eps_tau_closed(-7.0, p);
  EXPECT_EQ(b.full, std::conj(a.full));
  EXPECT_FALSE(eps_tau_closed(1e6, make(0.3, 1.0, 1.0)).approx_valid);
  auto q = p;
  q.kind = RegularizerKind::power;
  EXPECT_THROW(eps_tau_closed(1.0, q), DomainError);
}

TEST(Gex, MatchesOracle) {
  const auto& f = toa::testing::fixture("gex_ex1");
  const auto p = make(f.params["eps"], f.params["mass"], 1.0);
  EXPECT_LT(rel(gex_closed(f.params["x"].get<double>(), p), fixture_value("gex_ex1")), 1e-12);
}

TEST(Gex, Limits) {
  const auto p = make(0.1, 1.5, 1.0);
  const double lim = 2 * std::pow(p.eps, 1.5) / std::sqrt(2 * kPi * p.mass);
  EXPECT_NEAR(gex_closed(0.0, p).real(), lim, 1e-15);
  EXPECT_LT(rel(gex_closed(1e-3, p), lim), 1e-3);
  const double a = std::abs(gex_closed(1e6, p)), b = std::abs(gex_closed(4e6, p));
  EXPECT_NEAR(a / b, 2.0, 0.01);
  EXPECT_EQ(gex_closed(-3.0, p), std::conj(gex_closed(3.0, p)));
}

TEST(PowerLaw, ZeroExponentRecoversHalf) {
  EXPECT_DOUBLE_EQ(*n_eps_powerlaw(0.0, 0.1, 1.0, 1.0).value, 0.5);
  EXPECT_NEAR(*n_eps_powerlaw(1e-9, 0.1, 1.0, 1.0).value, 0.5, 1e-7);
}

TEST(PowerLaw, GrowsAsEpsDecreases) {
  double prev = -std::numeric_limits<double>::infinity();
  for (double eps : {1.0, 0.7, 0.5, 0.3, 0.2, 0.1}) {
    const double v = n_eps_powerlaw(0.2, eps, 1.0, 1.0).log_value;
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(PowerLaw, MatchesOracleRatios) {
  for (const char* tag : {"1", "0.5", "0.3", "0.2", "0.15", "0.1"}) {
    const auto& f = toa::testing::fixture(std::string("power_ratio_") + tag);
    const double s = f.params["smallness"];
    const auto r = n_eps_powerlaw(f.params["delta_exp"], std::sqrt(s), f.params["spread"], f.params["mass"]);
    // oracle value is norm_eps / norm_o; the closed form is half of that
    EXPECT_NEAR(2.0 * *r.value / f.value_re, 1.0, 1e-9) << tag;
  }
}

TEST(PowerLaw, OverflowReturnsLogOnly) {
  const auto r = n_eps_powerlaw(0.2, 0.01, 1.0, 1.0);
  EXPECT_FALSE(r.value.has_value());
  const double a = 0.2 / (std::sqrt(2.0) * 1e-4);
  EXPECT_NEAR(r.log_value / (a * a), 1.0, 1e-9);
  EXPECT_THROW(n_eps_powerlaw(-0.1, 0.1, 1.0, 1.0), DomainError);
}
