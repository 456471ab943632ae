#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "seqmix/online.hpp"

using namespace seqmix;

namespace {

std::vector<Observation> logistic_stream(const Vector& theta, int n, std::uint64_t seed,
                                         double arm_radius = 1.0) {
  const auto model = ModelFamily::logistic(static_cast<int>(theta.size()));
  Rng rng(seed);
  std::vector<Observation> data;
  for (int i = 0; i < n; ++i) {
    Vector x = uniform_ball_sample(static_cast<int>(theta.size()), arm_radius, rng);
    data.push_back({x, sample_outcome(model, theta, x, rng), std::nullopt});
  }
  return data;
}

ParameterSpace ball_only(int d, double S) {
  ParameterSpace s;
  s.kind = SpaceKind::BallGrid;
  s.radius = S;
  s.atoms = Matrix::Zero(1, d);
  s.log_prior = Vector::Zero(1);
  return s;
}

// Norm of the projected-gradient step, the KKT residual of the ball problem.
double kkt(const ModelFamily& m, std::span<const Observation> data, const Vector& theta, double S) {
  Vector g;
  Matrix H;
  nll_gradient_hessian(m, data, theta, g, H);
  Vector p = theta - g;
  if (p.norm() > S) p *= S / p.norm();
  return (theta - p).norm();
}

}  // namespace

TEST(Online, FiniteArgminAndTies) {
  const auto model = ModelFamily::logistic(1);
  std::vector<Vector> atoms{Vector::Constant(1, -2.0), Vector::Constant(1, 2.0), Vector::Constant(1, 0.5)};
  const std::vector<double> w{1, 1, 1};
  const auto space = make_finite(atoms, w);
  std::vector<Observation> data(12, {Vector::Constant(1, 1.0), 1.0, std::nullopt});
  EXPECT_EQ(mle_fit(model, data, space).theta[0], 2.0);

  // Symmetric atoms with x = 0: every atom ties, lowest index wins.
  std::vector<Observation> flat(5, {Vector::Constant(1, 0.0), 1.0, std::nullopt});
  EXPECT_EQ(mle_fit(model, flat, space).theta[0], -2.0);
}

TEST(Online, GaussianLeastSquares) {
  const auto model = ModelFamily::gaussian_linear(1, 1.0);
  std::vector<Observation> data{{Vector::Constant(1, 1.0), 1.0, std::nullopt},
                                {Vector::Constant(1, 1.0), 3.0, std::nullopt}};
  EXPECT_NEAR(mle_fit(model, data, ball_only(1, 100.0)).theta[0], 2.0, 1e-9);
}

TEST(Online, EmptyDataIsDegenerateOrigin) {
  const auto model = ModelFamily::logistic(2);
  std::vector<Observation> none;
  const auto fit = mle_fit(model, none, ball_only(2, 4.0));
  EXPECT_TRUE(fit.degenerate);
  EXPECT_EQ(fit.theta, Vector::Zero(2));
}

TEST(Online, LogisticKktResidual) {
  const auto model = ModelFamily::logistic(2);
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const double S = 1.0 + 5.0 * uniform01(rng);
    const Vector truth = uniform_ball_sample(2, 1.5 * S, rng);
    const auto data = logistic_stream(truth, 20 + rep * 10, 100 + rep, 2.0);
    const auto fit = mle_fit(model, data, ball_only(2, S));
    EXPECT_LE(fit.theta.norm(), S + 1e-9);
    EXPECT_LE(kkt(model, data, fit.theta, S), 1e-8) << rep;
  }
}

TEST(Online, MleBeatsRandomFeasiblePoints) {
  const auto model = ModelFamily::logistic(2);
  Vector truth(2);
  truth << 2.0, -1.0;
  const auto data = logistic_stream(truth, 80, 7);
  const double S = 3.0;
  const auto fit = mle_fit(model, data, ball_only(2, S));
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    EXPECT_LE(fit.objective, neg_log_likelihood(model, uniform_ball_sample(2, S, rng), data) + 1e-12);
  }
}

TEST(Online, RunningMleProperties) {
  const auto model = ModelFamily::logistic(2);
  Vector truth(2);
  truth << 1.0, 0.5;
  const auto space = ball_only(2, 4.0);
  std::vector<Observation> none;
  EXPECT_EQ(running_mle_sequence(model, none, space).size(), 1u);

  auto data = logistic_stream(truth, 30, 9);
  const auto seq = running_mle_sequence(model, data, space);
  ASSERT_EQ(seq.size(), data.size() + 1);
  EXPECT_EQ(seq[0], Vector::Zero(2));
  for (std::size_t t = 1; t <= data.size(); ++t) {
    const auto prefix = std::span(data).first(t);
    EXPECT_LE(neg_log_likelihood(model, seq[t], prefix), neg_log_likelihood(model, seq[t - 1], prefix) + 1e-10);
  }

  // Mutating outcomes after step 15 leaves theta_hat_0..theta_hat_15 unchanged.
  auto mutated = data;
  for (std::size_t s = 15; s < mutated.size(); ++s) mutated[s].outcome = 1.0 - mutated[s].outcome;
  const auto seq2 = running_mle_sequence(model, mutated, space);
  for (std::size_t s = 0; s <= 15; ++s) EXPECT_EQ(seq[s], seq2[s]) << s;
}

TEST(Online, Certificates) {
  const auto c = logistic_regret_certificate(2, 4.0);
  EXPECT_NEAR(c.value_at(0), 20.0, 1e-13);
  EXPECT_NEAR(c.value_at(1000), 20.0 * std::log(std::exp(1.0) + 1000.0), 1e-12);
  double previous = 0.0;
  for (std::size_t t = 0; t <= 10000; ++t) {
    const double v = c.value_at(t);
    ASSERT_GE(v, previous);
    previous = v;
  }
  EXPECT_NEAR(finite_ew_certificate(10).value_at(7), std::log(10.0), 1e-15);
  const auto sp = sparse_shape_certificate(1.0, 2);
  EXPECT_EQ(sp.value_at(0), 0.0);
  EXPECT_EQ(sp.value_at(1), 0.0);
  EXPECT_NEAR(sp.value_at(100), 2 * std::log(100.0), 1e-14);
  EXPECT_EQ(constant_certificate(3.0).value_at(99), 3.0);
  EXPECT_THROW(constant_certificate(-1.0), std::invalid_argument);
  EXPECT_THROW(empirical_certificate({1.0, 0.5}), std::invalid_argument);
  EXPECT_THROW(empirical_certificate({-1.0}), std::invalid_argument);
  EXPECT_EQ(empirical_certificate({0.0, 1.0, 2.5}).value_at(2), 2.5);
}

TEST(Online, EwAuditSingleExpert) {
  const auto model = ModelFamily::logistic(1);
  std::vector<Vector> atoms{Vector::Constant(1, 0.3)};
  const std::vector<double> w{1.0};
  const auto space = make_finite(atoms, w);
  const auto data = logistic_stream(Vector::Constant(1, 0.3), 40, 10);
  EXPECT_EQ(ew_regret_audit(space, data, model).lambda_t, 0.0);
}

TEST(Online, EwAuditTwoExperts) {
  const auto model = ModelFamily::logistic(2);
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Vector> atoms{uniform_ball_sample(2, 3.0, rng), uniform_ball_sample(2, 3.0, rng)};
    const std::vector<double> w{1.0, 1.0};
    const auto space = make_finite(atoms, w);
    const auto data = logistic_stream(atoms[rep % 2], 50, 200 + rep);
    const auto audit = ew_regret_audit(space, data, model);
    EXPECT_LE(audit.lambda_t, std::log(2.0) + 1e-9);
    EXPECT_NEAR(audit.bound, std::log(2.0), 1e-15);
    ASSERT_EQ(audit.prefix_regret.size(), data.size());
    for (double r : audit.prefix_regret) EXPECT_LE(r, std::log(2.0) + 1e-9);
  }
}

TEST(Online, BallQuadraticAgainstBruteForce) {
  Rng rng(12);
  std::normal_distribution<double> z(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    Matrix A(2, 2);
    A << z(rng), z(rng), z(rng), z(rng);
    Matrix H = A * A.transpose();
    if (rep % 5 == 0) H(1, 1) = H(0, 1) = H(1, 0) = 0.0;  // singular direction
    Vector c(2);
    c << 2 * z(rng), 2 * z(rng);
    const double r = 0.2 + uniform01(rng);
    const Vector sol = solve_ball_quadratic(H, c, r);
    EXPECT_LE(sol.norm(), r + 1e-9);
    auto f = [&](const Vector& v) { return 0.5 * v.dot(H * v) + c.dot(v); };
    double best = f(sol);
    for (int i = 0; i <= 400; ++i) {
      for (int j = 0; j <= 400; ++j) {
        Vector v(2);
        v << -r + 2 * r * i / 400.0, -r + 2 * r * j / 400.0;
        if (v.norm() <= r) ASSERT_GE(f(v), best - 1e-7) << rep;
      }
    }
  }
}
