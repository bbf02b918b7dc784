#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fbsched/plant.hpp"
#include "fbsched/scenario.hpp"
#include "oracle/closed_form_servo.hpp"
#include "oracle/rk4.hpp"

using namespace fbsched;

namespace {

LtiPlant servo() { return PlantSpec::paper_servo().instantiate(); }

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(1.0, std::abs(want));
}

}  // namespace

TEST(Expm, ZeroIsIdentity) {
  EXPECT_TRUE(expm(Matrix::Zero(3, 3)).isApprox(Matrix::Identity(3, 3)));
}

TEST(Expm, DiagonalMatchesScalarExp) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = -3.0;
  d(1, 1) = 7.5;
  const Matrix e = expm(d);
  EXPECT_NEAR(e(0, 0), std::exp(-3.0), 1e-15);
  EXPECT_LT(rel_err(e(1, 1), std::exp(7.5)), 1e-13);
  EXPECT_EQ(e(0, 1), 0.0);
}

TEST(Zoh, TenMillisecondsMatchesClosedForm) {
  const auto seg = zoh_discretize(servo().A, servo().B, milliseconds(10));
  const auto z = oracle::servo_zoh(0.01);
  EXPECT_NEAR(seg.Ad(0, 1), z.Ad[0][1], 1e-14);
  EXPECT_NEAR(seg.Ad(1, 1), z.Ad[1][1], 1e-14);
  EXPECT_NEAR(seg.Bd(0), z.Bd[0], 1e-14);
  EXPECT_NEAR(seg.Bd(1), z.Bd[1], 1e-12);
  EXPECT_NEAR(seg.Ad(0, 1), 0.00995017, 1e-8);
  EXPECT_NEAR(seg.Bd(0), 0.0498337, 1e-7);
}

TEST(Zoh, ZeroIntervalIsIdentity) {
  const auto seg = zoh_discretize(servo().A, servo().B, Duration{0});
  EXPECT_TRUE(seg.Ad.isIdentity());
  EXPECT_TRUE(seg.Bd.isZero());
}

TEST(Zoh, IntegratorIsExact) {
  Matrix A = Matrix::Zero(1, 1);
  Vector B = Vector::Constant(1, 2.0);
  const auto seg = zoh_discretize(A, B, milliseconds(250));
  EXPECT_EQ(seg.Ad(0, 0), 1.0);
  EXPECT_NEAR(seg.Bd(0), 0.5, 1e-16);
}

TEST(Zoh, RejectsBadInput) {
  EXPECT_THROW(zoh_discretize(servo().A, servo().B, Duration{-1}), std::invalid_argument);
  Matrix A = servo().A;
  A(0, 0) = NAN;
  EXPECT_THROW(zoh_discretize(A, servo().B, milliseconds(1)), std::invalid_argument);
}

TEST(Advance, OneSecondStepResponse) {
  LtiPlant p = servo();
  actuate(p, 1.0, SimTime{0});
  advance(p, time_from_seconds(1.0));
  EXPECT_NEAR(p.x(0), 367.879441171, 1e-8);
  EXPECT_NEAR(p.x(1), 632.120558829, 1e-8);
  EXPECT_NEAR(sample_output(p), p.x(0), 0.0);
}

TEST(Advance, ClosedFormAcrossScales) {
  const std::array<double, 2> x0 = {0.3, -2.0};
  for (std::int64_t ns = 1000; ns <= 2'000'000'000; ns *= 10) {
    for (std::int64_t mult : {1, 2, 5}) {
      const Duration dt{ns * mult};
      if (dt > seconds(2)) continue;
      LtiPlant p = servo();
      p.x << x0[0], x0[1];
      p.u_held = -0.7;
      advance(p, SimTime{0} + dt);
      const auto want = oracle::servo_state(x0, -0.7, dt.seconds());
      EXPECT_LT(rel_err(p.x(0), want[0]), 1e-10) << dt.ns;
      EXPECT_LT(rel_err(p.x(1), want[1]), 1e-10) << dt.ns;
    }
  }
}

TEST(Advance, SemigroupProperty) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> ms(1, 400);
  for (int trial = 0; trial < 50; ++trial) {
    const Duration a = milliseconds(ms(rng)), b = milliseconds(ms(rng));
    LtiPlant one = servo(), two = servo();
    one.x << 1.0, -1.0;
    two.x = one.x;
    one.u_held = two.u_held = 0.25;
    advance(one, SimTime{0} + a + b);
    advance(two, SimTime{0} + a);
    advance(two, SimTime{0} + a + b);
    EXPECT_LT(rel_err(one.x(0), two.x(0)), 1e-10);
    EXPECT_LT(rel_err(one.x(1), two.x(1)), 1e-10);
  }
}

TEST(Advance, LinearInInput) {
  const auto seg = zoh_discretize(servo().A, servo().B, milliseconds(37));
  const Vector x = Vector::Zero(2);
  const Vector y1 = seg.Ad * x + seg.Bd * 1.5;
  const Vector y2 = seg.Ad * x + seg.Bd * 3.0;
  EXPECT_TRUE((2.0 * y1).isApprox(y2, 1e-15));
}

TEST(Advance, MatchesRk4OverOneSecond) {
  LtiPlant p = servo();
  p.x << 0.5, 1.0;
  p.u_held = 0.2;
  const Vector x0 = p.x;
  ZohCache cache;
  for (int i = 1; i <= 100; ++i) advance(p, SimTime{0} + milliseconds(10 * i), &cache);
  const Vector ref = oracle::rk4(p.A, p.B, x0, 0.2, 1.0, 1e-5);
  EXPECT_LT(rel_err(p.x(0), ref(0)), 1e-8);
  EXPECT_LT(rel_err(p.x(1), ref(1)), 1e-8);
}

TEST(Advance, TimeRegressionIsABug) {
  LtiPlant p = servo();
  advance(p, SimTime{0} + milliseconds(5));
  EXPECT_THROW(advance(p, SimTime{0} + milliseconds(4)), std::logic_error);
}

TEST(Noise, BoundedAndReproducible) {
  LtiPlant p = servo();
  p.x << 2.0, 0.0;
  MeasurementNoise a{0.01, std::mt19937_64(42)}, b{0.01, std::mt19937_64(42)};
  for (int i = 0; i < 1000; ++i) {
    const double ya = sample_output(p, &a);
    EXPECT_LE(std::abs(ya - 2.0), 0.01);
    EXPECT_EQ(ya, sample_output(p, &b));
  }
  MeasurementNoise off{0.0, std::mt19937_64(1)};
  EXPECT_EQ(sample_output(p, &off), 2.0);
}

TEST(TransferFunction, ServoRealizationBehavesLikeStateSpace) {
  LtiPlant tf = plant_from_transfer_function({1000.0}, {1.0, 1.0, 0.0});
  LtiPlant ss = servo();
  actuate(tf, 1.0, SimTime{0});
  actuate(ss, 1.0, SimTime{0});
  for (int i = 1; i <= 50; ++i) {
    advance(tf, SimTime{0} + milliseconds(20 * i));
    advance(ss, SimTime{0} + milliseconds(20 * i));
    EXPECT_LT(rel_err(sample_output(tf), sample_output(ss)), 1e-10);
  }
}

TEST(TransferFunction, RejectsImproperOrEmpty) {
  EXPECT_THROW(plant_from_transfer_function({1.0, 0.0}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(plant_from_transfer_function({1.0}, {2.0}), std::invalid_argument);
  EXPECT_THROW(plant_from_transfer_function({}, {1.0, 1.0}), std::invalid_argument);
}

TEST(MakePlant, RejectsShapeMismatch) {
  EXPECT_THROW(make_plant(Matrix::Zero(2, 3), Vector::Zero(2), Eigen::RowVectorXd::Zero(2)), std::invalid_argument);
  EXPECT_THROW(make_plant(Matrix::Zero(2, 2), Vector::Zero(3), Eigen::RowVectorXd::Zero(2)), std::invalid_argument);
  EXPECT_THROW(make_plant(Matrix::Zero(2, 2), Vector::Zero(2), Eigen::RowVectorXd::Zero(1)), std::invalid_argument);
}
