#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "fixture_support.hpp"
#include "toa/analysis.hpp"
#include "toa/grid.hpp"
#include "toa/states.hpp"

using namespace toa;

namespace {

Params defaults() {
  Params p;
  p.mass = 1.0;
  p.eps = 0.1;
  p.spread = 10.0;
  return p;
}

}  // namespace

TEST(Grid, KmaxCoversEnvelope) {
  const auto g = build_momentum_grid(0.1, 1.0, 10.0, 2048, 512);
  EXPECT_GE(g->k_max(), 6.0 * std::sqrt(0.1));
  // tail mass beyond k_max relative to the total analytic norm 2 * eps_norm
  const double tail = toa::testing::fixture("kmax_tail").value_re;
  const double total = 2.0 * toa::testing::fixture("eps_norm_0.1").value_re;
  EXPECT_LT(tail / total, 1e-18);
  EXPECT_NEAR(toa::testing::fixture("kmax_tail").params["k_max"].get<double>(), g->k_max(), 1e-15);
}

TEST(Grid, NodesPositiveIncreasingWithPositiveWeights) {
  for (double eps : {0.3, 0.1, 0.01}) {
    const auto g = build_momentum_grid(eps, 1.0, 1.0, 4096, 256);
    for (std::size_t i = 0; i < g->size(); ++i) {
      const auto& n = (*g)[i];
      EXPECT_TRUE(std::isfinite(n.log_k));
      EXPECT_GE(n.k, 0.0);  // may underflow to 0 only in the printed value
      EXPECT_GT(n.log_weight, 0.0) << i;
      if (i > 0) {
        EXPECT_GT(n.log_k, (*g)[i - 1].log_k) << i;
      }
    }
  }
}

TEST(Grid, KneeNodeSitsAtEpsExactlyOnce) {
  const auto g = build_momentum_grid(0.1, 1.0, 10.0, 512, 128);
  EXPECT_EQ((*g)[g->knee_index()].k, 0.1);
  int at_eps = 0;
  for (const auto& n : g->nodes()) at_eps += (n.k == 0.1);
  EXPECT_EQ(at_eps, 1);
  EXPECT_TRUE(g->below_eps(g->knee_index()));
  EXPECT_FALSE(g->below_eps(g->knee_index() + 1));
  EXPECT_EQ((*g)[g->knee_index() + 1].segment, Segment::upper);
}

TEST(Grid, HalvingSpreadScalesKmaxBySqrt2) {
  const double eps = 0.05;
  const auto a = build_momentum_grid(eps, 1.0, 4.0, 1024, 128);
  const auto b = build_momentum_grid(eps, 1.0, 2.0, 1024, 128);
  EXPECT_NEAR((b->k_max() - 3 * eps) / (a->k_max() - 3 * eps), std::sqrt(2.0), 1e-12);
}

TEST(Grid, RejectsBadInputs) {
  EXPECT_THROW(build_momentum_grid(0.0, 1.0, 1.0, 64, 64), DomainError);
  EXPECT_THROW(build_momentum_grid(0.1, -1.0, 1.0, 64, 64), DomainError);
  EXPECT_THROW(build_momentum_grid(0.1, 1.0, 1.0, 8, 64), DomainError);
}

TEST(Grid, TooFewLogPanelsNamesRequiredResolution) {
  try {
    build_momentum_grid(0.01, 1.0, 1.0, 16, 64);
    FAIL() << "expected rejection";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("required n_log"), std::string::npos) << e.what();
  }
}

TEST(Grid, UnitStateIntegratesToOne) {
  const auto p = defaults();
  const auto s = coherent_unit(p, build_momentum_grid(p.eps, p.mass, p.spread, 2048, 512));
  const Complex one = integrate_on_grid(s, [](const GridNode&, int) { return 1.0; });
  EXPECT_NEAR(one.real(), 1.0, 1e-8);
}

TEST(Grid, GaussianSecondMoment) {
  const double k0 = 2.0, sig = 0.3, m = 1.5;
  const auto g = build_momentum_grid(0.1, 1.0, 0.5, 1024, 1024);
  SpectralState s{g, {}, {}, 0.0, {}};
  s.plus = sample_psi(*g, [&](const GridNode& n, std::size_t) {
    return Complex(std::exp(-(n.k - k0) * (n.k - k0) / (4 * sig * sig)));
  });
  s.label.mass = m;
  const double num = integrate_on_grid(s, [m](const GridNode& n, int) { return n.k * n.k / (2 * m); }).real();
  EXPECT_NEAR(num / s.norm(), (k0 * k0 + sig * sig) / (2 * m), 1e-10);
  EXPECT_NEAR(s.norm(), std::sqrt(2 * kPi) * sig, 1e-10);
}

TEST(Grid, EpsSectorNormMatchesOracle) {
  const auto p = defaults();
  const auto rep = norm_split(p, build_momentum_grid(p.eps, p.mass, p.spread, 2048, 512), false);
  const double ref = toa::testing::fixture("eps_norm_0.1").value_re;
  EXPECT_LT(std::abs(rep.norm_eps - ref) / ref, 1e-6);
}

TEST(Grid, RefinementChangesNormsBelow1e7) {
  const auto p = defaults();
  const auto rep = norm_split(p, build_momentum_grid(p.eps, p.mass, p.spread, 2048, 512));
  EXPECT_LT(rep.grid_delta, 1e-7);
}

TEST(Grid, IntegrationIsBitwiseDeterministic) {
  const auto p = defaults();
  const auto g = build_momentum_grid(p.eps, p.mass, p.spread, 2048, 512);
  const auto obs = [](const GridNode& n, int) { return std::cos(n.k); };
  const Complex a = integrate_on_grid(coherent_unit(p, g), obs);
  const Complex b = integrate_on_grid(coherent_unit(p, g), obs);
  EXPECT_EQ(a, b);
}

TEST(Grid, CsvDump) {
  const auto g = build_momentum_grid(0.1, 1.0, 10.0, 128, 64);
  std::ostringstream os;
  write_grid_csv(os, *g);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "segment,k,weight");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, g->size());
}

TEST(Grid, DeepNodesPrintWithDecimalExponent) {
  const auto g = build_momentum_grid(0.01, 1.0, 1.0, 4096, 64);
  std::ostringstream os;
  write_grid_csv(os, *g);
  const std::string text = os.str();
  const auto second = text.substr(text.find('\n') + 1);
  // k_min ~ eps e^{-80000}
  EXPECT_NE(second.find("e-347"), std::string::npos) << second.substr(0, 80);
}
