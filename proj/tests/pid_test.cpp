#include <gtest/gtest.h>

#include <random>

#include "fbsched/pid.hpp"

using namespace fbsched;

TEST(DeriveParams, PaperGainsAtTenMilliseconds) {
  const auto d = derive_params(PidGains{}, 0.010);
  EXPECT_NEAR(d.bi, 0.0816667, 1e-6);
  EXPECT_NEAR(d.ad, 0.333333, 1e-6);
  EXPECT_NEAR(d.bd, 3.266667, 1e-6);
}

TEST(DeriveParams, PaperGainsAtTwentyMilliseconds) {
  const auto d = derive_params(PidGains{}, 0.020);
  EXPECT_NEAR(d.bi, 0.163333, 1e-6);
  EXPECT_NEAR(d.ad, 0.2, 1e-12);
  EXPECT_NEAR(d.bd, 1.96, 1e-12);
}

TEST(DeriveParams, NoDerivativeTime) {
  PidGains g;
  g.Td = 0.0;
  const auto d = derive_params(g, 0.010);
  EXPECT_EQ(d.ad, 0.0);
  EXPECT_EQ(d.bd, 0.0);
}

TEST(DeriveParams, RejectsNonPositivePeriod) {
  EXPECT_THROW(derive_params(PidGains{}, 0.0), std::invalid_argument);
  EXPECT_THROW(derive_params(PidGains{}, -1.0), std::invalid_argument);
}

TEST(DeriveParams, FilterPoleInUnitInterval) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> h(1e-4, 2.0), td(0.0, 1.0), m(0.5, 50.0);
  for (int i = 0; i < 1000; ++i) {
    PidGains g;
    g.Td = td(rng);
    g.M = m(rng);
    const double ad = derive_params(g, h(rng)).ad;
    EXPECT_GE(ad, 0.0);
    EXPECT_LT(ad, 1.0);
  }
}

TEST(PidStep, FirstSampleFromRest) {
  const auto d = derive_params(PidGains{}, 0.010);
  const auto out = pid_step(0.98, d, PidState{}, 1.0, 0.0);
  EXPECT_NEAR(out.u, 0.98, 1e-15);  // ui and yold are still zero
  EXPECT_NEAR(out.next.ui, 0.0816667, 1e-6);
  EXPECT_EQ(out.next.ud, 0.0);
  EXPECT_EQ(out.next.yold, 0.0);
}

TEST(PidStep, DerivativeActsOnMeasurement) {
  const auto d = derive_params(PidGains{}, 0.010);
  PidState s;
  s.yold = 0.0;
  const auto out = pid_step(0.98, d, s, 0.0, 0.1);
  EXPECT_NEAR(out.next.ud, -0.3266667, 1e-6);
  EXPECT_NEAR(out.u, -0.098 - 0.3266667, 1e-6);
  EXPECT_EQ(out.next.yold, 0.1);
}

TEST(PidController, VariantsAgreeBitForBitAtConstantPeriod) {
  PidController trad(ControllerVariant::Traditional, PidGains{}, 0.010);
  PidController mod(ControllerVariant::Modified, PidGains{}, 0.010);
  double y = 0.0;
  for (int k = 0; k < 5000; ++k) {
    const double r = (k / 250) % 2 == 0 ? 1.0 : -1.0;
    const double ut = trad.iterate(r, y, 0.010);
    const double um = mod.iterate(r, y, 0.010);
    ASSERT_EQ(ut, um) << k;
    y = 0.9 * y + 0.05 * ut;
  }
}

TEST(PidController, VariantsDivergeAfterPeriodChange) {
  PidController trad(ControllerVariant::Traditional, PidGains{}, 0.010);
  PidController mod(ControllerVariant::Modified, PidGains{}, 0.010);
  EXPECT_EQ(trad.iterate(1.0, 0.0, 0.010), mod.iterate(1.0, 0.0, 0.010));
  trad.iterate(1.0, 0.2, 0.020);
  mod.iterate(1.0, 0.2, 0.020);
  EXPECT_NE(trad.state().ui, mod.state().ui);
  EXPECT_NEAR(mod.cached().ad, 0.2, 1e-12);
  EXPECT_NEAR(trad.cached().ad, 1.0 / 3.0, 1e-12);
}

TEST(PidController, RejectsBadGains) {
  PidGains g;
  g.Ti = 0.0;
  EXPECT_THROW(PidController(ControllerVariant::Modified, g, 0.01), std::invalid_argument);
  g = PidGains{};
  g.M = -1.0;
  EXPECT_THROW(PidController(ControllerVariant::Modified, g, 0.01), std::invalid_argument);
}
