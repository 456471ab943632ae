#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "seqmix/rng.hpp"
#include "seqmix/spaces.hpp"
#include "seqmix/tempered.hpp"

using namespace seqmix;

namespace {

double log_normal_pdf(double y, double m, double s) {
  return -0.5 * std::log(2 * std::numbers::pi * s * s) - (y - m) * (y - m) / (2 * s * s);
}

// Composite Simpson on [lo, hi]; the test's own integrator.
template <class F>
double simpson(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

double renyi_simpson(double m1, double m2, double s, double zeta) {
  const double lo = std::min(m1, m2) - 14 * s, hi = std::max(m1, m2) + 14 * s;
  const double integral = simpson(
      [&](double y) { return std::exp(zeta * log_normal_pdf(y, m1, s) + (1 - zeta) * log_normal_pdf(y, m2, s)); },
      lo, hi, 20000);
  return std::log(integral) / (zeta - 1.0);
}

double hellinger_simpson(double m1, double m2, double s) {
  const double lo = std::min(m1, m2) - 14 * s, hi = std::max(m1, m2) + 14 * s;
  return simpson(
      [&](double y) {
        const double a = std::exp(0.5 * log_normal_pdf(y, m1, s)) - std::exp(0.5 * log_normal_pdf(y, m2, s));
        return a * a;
      },
      lo, hi, 20000);
}

Observation scalar_obs(double x, double y) { return {Vector::Constant(1, x), y, std::nullopt}; }

}  // namespace

TEST(Tempered, RenyiExamples) {
  EXPECT_EQ(renyi_gaussian(1.3, 1.3, 0.4, 0.3), 0.0);
  EXPECT_NEAR(renyi_gaussian(1.0, 0.0, 1.0, 0.5), 0.25, 1e-15);
  EXPECT_NEAR(renyi_simpson(1.0, 0.0, 1.0, 0.5), 0.25, 1e-9);
  EXPECT_THROW(renyi_gaussian(0, 1, 1, 0.0), std::invalid_argument);
  EXPECT_THROW(renyi_gaussian(0, 1, 1, 1.0), std::invalid_argument);
}

TEST(Tempered, SkewIdentity) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const double m1 = 4 * uniform01(rng) - 2, m2 = 4 * uniform01(rng) - 2;
    const double s = 0.2 + 2 * uniform01(rng), z = 0.01 + 0.98 * uniform01(rng);
    EXPECT_NEAR((1 - z) * renyi_gaussian(m1, m2, s, z), z * renyi_gaussian(m2, m1, s, 1 - z), 1e-12);
  }
}

TEST(Tempered, HellingerExamples) {
  EXPECT_EQ(hellinger_sq_gaussian(0.5, 0.5, 1.0), 0.0);
  EXPECT_NEAR(hellinger_sq_gaussian(2.0, 0.0, 1.0), 2 * (1 - std::exp(-0.5)), 1e-15);
  EXPECT_NEAR(hellinger_simpson(2.0, 0.0, 1.0), 0.7869, 1e-4);
  Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const double gap = 6 * uniform01(rng), s = 0.1 + 3 * uniform01(rng);
    EXPECT_LE(0.5 * hellinger_sq_gaussian(gap, 0.0, s), renyi_gaussian(gap, 0.0, s, 0.5) + 1e-15);
  }
}

TEST(Tempered, ClosedFormsMatchIntegration) {
  Rng rng(3);
  for (int i = 0; i < 20; ++i) {
    const double gap = 4 * uniform01(rng), s = 0.3 + 2 * uniform01(rng);
    const double z = 0.05 + 0.9 * uniform01(rng);
    EXPECT_NEAR(renyi_gaussian(gap, 0.0, s, z), renyi_simpson(gap, 0.0, s, z), 1e-6);
    EXPECT_NEAR(hellinger_sq_gaussian(gap, 0.0, s), hellinger_simpson(gap, 0.0, s), 1e-6);
    auto lp = [&](double y) { return log_normal_pdf(y, gap, s); };
    auto lq = [&](double y) { return log_normal_pdf(y, 0.0, s); };
    EXPECT_NEAR(renyi_numeric(lp, lq, z), renyi_simpson(gap, 0.0, s, z), 1e-6);
    EXPECT_NEAR(hellinger_sq_numeric(lp, lq), hellinger_simpson(gap, 0.0, s), 1e-6);
  }
}

TEST(Tempered, BernoulliDivergencesByDirectSum) {
  const auto model = ModelFamily::logistic(1);
  const Vector a = Vector::Constant(1, 0.8), b = Vector::Constant(1, -1.1);
  const Observation at = scalar_obs(1.0, 0.0);
  const double p = 1 / (1 + std::exp(-0.8)), q = 1 / (1 + std::exp(1.1));
  const double z = 0.3;
  const double direct = std::log(std::pow(p, z) * std::pow(q, 1 - z) + std::pow(1 - p, z) * std::pow(1 - q, 1 - z)) /
                        (z - 1);
  EXPECT_NEAR(renyi_model(model, a, b, at, z), direct, 1e-14);
  const double h = std::pow(std::sqrt(p) - std::sqrt(q), 2) + std::pow(std::sqrt(1 - p) - std::sqrt(1 - q), 2);
  EXPECT_NEAR(hellinger_sq_model(model, a, b, at), h, 1e-14);
}

TEST(Tempered, NormalizedRatioIsMartingale) {
  const auto model = ModelFamily::logistic(2);
  Rng rng(4);
  for (int rep = 0; rep < 100; ++rep) {
    const Vector star = uniform_ball_sample(2, 3.0, rng), hat = uniform_ball_sample(2, 3.0, rng);
    const Vector x = uniform_ball_sample(2, 1.0, rng);
    const double beta = 0.05 + 0.9 * uniform01(rng);
    const double norm = tempered_log_normalizer(model, star, hat, {x, 0.0, std::nullopt}, beta);
    double expectation = 0.0;
    for (double y : {0.0, 1.0}) {
      const Observation o{x, y, std::nullopt};
      const double ls = log_density(model, star, o), lh = log_density(model, hat, o);
      expectation += std::exp(ls) * std::exp(beta * (lh - ls) + norm);
    }
    EXPECT_NEAR(expectation, 1.0, 1e-12);
  }
}

TEST(Tempered, MembershipAtEstimates) {
  const auto model = ModelFamily::gaussian_linear(1, 1.0);
  const Vector theta = Vector::Constant(1, 0.7);
  TemperedState st(model, 0.5);
  Rng rng(5);
  for (int i = 0; i < 30; ++i) st.step(theta, scalar_obs(uniform01(rng), uniform01(rng) * 3));
  EXPECT_NEAR(st.regret(theta), 0.0, 1e-12);
  EXPECT_EQ(st.divergence_sum(theta, TemperedVariant::Renyi), 0.0);
  for (double delta : {0.01, 0.5, 0.99}) {
    EXPECT_TRUE(tempered_membership(st, theta, delta, TemperedVariant::Renyi));
    EXPECT_TRUE(tempered_membership(st, theta, delta, TemperedVariant::Hellinger));
  }
  EXPECT_DOUBLE_EQ(st.threshold(0.1, TemperedVariant::Renyi), st.threshold(0.1, TemperedVariant::Hellinger));
  EXPECT_THROW(st.threshold(1.0, TemperedVariant::Renyi), std::invalid_argument);
  EXPECT_THROW(TemperedState(model, 1.0), std::invalid_argument);
}

TEST(Tempered, DivergenceSumNonnegative) {
  const auto model = ModelFamily::logistic(2);
  TemperedState st(model, 0.3);
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    st.step(uniform_ball_sample(2, 2.0, rng), {uniform_ball_sample(2, 1.0, rng), double(i % 2), std::nullopt});
  }
  for (int i = 0; i < 50; ++i) {
    const Vector th = uniform_ball_sample(2, 4.0, rng);
    EXPECT_GE(st.divergence_sum(th, TemperedVariant::Renyi), 0.0);
    EXPECT_GE(st.divergence_sum(th, TemperedVariant::Hellinger), 0.0);
  }
}

TEST(Tempered, VawExamples) {
  auto s = VawState::make(1, 1.0);
  EXPECT_EQ(vaw_predict(s, Vector::Constant(1, 3.0)), 0.0);
  s = vaw_update(s, scalar_obs(1.0, 1.0));
  EXPECT_NEAR(vaw_predict(s, Vector::Constant(1, 1.0)), 1.0 / 3.0, 1e-15);
}

TEST(Tempered, VawLinearInOutcomes) {
  Rng rng(7);
  std::normal_distribution<double> z(0.0, 1.0);
  auto a = VawState::make(2, 0.5), b = a, ab = a;
  for (int i = 0; i < 25; ++i) {
    Vector x(2);
    x << z(rng), z(rng);
    const double ya = z(rng), yb = z(rng);
    a = vaw_update(a, {x, ya, std::nullopt});
    b = vaw_update(b, {x, yb, std::nullopt});
    ab = vaw_update(ab, {x, 2 * ya - 3 * yb, std::nullopt});
  }
  Vector q(2);
  q << 0.3, -1.2;
  EXPECT_NEAR(vaw_predict(ab, q), 2 * vaw_predict(a, q) - 3 * vaw_predict(b, q), 1e-12);
}

TEST(Tempered, OnlineToConfidenceExamples) {
  EXPECT_NEAR(online_to_confidence_threshold(5.0, 0.5, 0.1), 4 * std::log(10.0) + 10.0, 1e-13);
  EXPECT_NEAR(online_to_confidence_threshold(5.0, 0.5, 0.1), 19.2103, 1e-4);
  EXPECT_THROW(online_to_confidence_threshold(5.0, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(online_to_confidence_threshold(-1.0, 0.5, 0.1), std::invalid_argument);

  const Vector theta = Vector::Constant(1, 1.5);
  std::vector<Observation> data;
  std::vector<double> preds;
  for (double x : {0.2, -1.0, 2.0}) {
    data.push_back(scalar_obs(x, 0.0));
    preds.push_back(1.5 * x);
  }
  EXPECT_EQ(online_to_confidence_statistic(preds, data, theta), 0.0);
  EXPECT_TRUE(online_to_confidence_membership(preds, data, theta, 0.0, 0.5, 0.9));
}

TEST(Tempered, BeatsPriorWorkThreshold) {
  for (double delta : {0.001, 0.01, 0.05, 0.1, 0.2, 0.5}) {
    for (double b = 0.0; b <= 100.0; b += 0.5) {
      const double ours = online_to_confidence_threshold(b, 0.5, delta);
      const double theirs = 16 * std::log(1 / delta) + 0.5 + 2 * b + 16 * std::log(std::sqrt(8.0) + std::sqrt(1 + 2 * b));
      EXPECT_NEAR(reference_online_threshold(b, delta), theirs, 1e-12);
      EXPECT_LT(ours, theirs);
    }
  }
}
