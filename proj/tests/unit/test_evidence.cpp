#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <vector>

#include "seqmix/evidence.hpp"

using namespace seqmix;

namespace {

std::shared_ptr<const ParameterSpace> random_finite(int m, int d, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Vector> atoms;
  std::vector<double> w;
  for (int i = 0; i < m; ++i) {
    atoms.push_back(uniform_ball_sample(d, 2.0, rng));
    w.push_back(0.2 + uniform01(rng));
  }
  return std::make_shared<const ParameterSpace>(make_finite(atoms, w));
}

std::vector<Observation> bernoulli_stream(const Vector& theta, int n, std::uint64_t seed) {
  const auto model = ModelFamily::logistic(static_cast<int>(theta.size()));
  Rng rng(seed);
  std::vector<Observation> data;
  for (int i = 0; i < n; ++i) {
    Vector x = uniform_ball_sample(static_cast<int>(theta.size()), 1.5, rng);
    data.push_back({x, sample_outcome(model, theta, x, rng), std::nullopt});
  }
  return data;
}

FiniteWeights random_weights(std::shared_ptr<const ParameterSpace> space, Rng& rng) {
  FiniteWeights w{space, Vector(static_cast<Eigen::Index>(space->size()))};
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.log_weights.size(); ++i) {
    const double u = 1e-3 + uniform01(rng);
    w.log_weights[i] = std::log(u);
    total += u;
  }
  w.log_weights.array() -= std::log(total);
  return w;
}

}  // namespace

TEST(Evidence, GridEmptyDataIsTotalMass) {
  const auto s = random_finite(5, 2, 1);
  std::vector<Observation> none;
  const auto r = grid_log_evidence(ModelFamily::logistic(2), none, *s);
  EXPECT_NEAR(r.log_evidence, 0.0, 1e-14);
  EXPECT_FALSE(r.is_lower_bound);
  EXPECT_EQ(r.method, EvidenceMethod::GridQuadrature);
}

TEST(Evidence, GridHandAverage) {
  const double z = std::log(9.0);
  std::vector<Vector> atoms{Vector::Constant(1, z), Vector::Constant(1, -z)};
  const std::vector<double> w{1.0, 1.0};
  const auto s = make_finite(atoms, w);
  std::vector<Observation> one{{Vector::Constant(1, 1.0), 1.0, std::nullopt}};
  EXPECT_NEAR(grid_log_evidence(ModelFamily::logistic(1), one, s).log_evidence, std::log(0.5), 1e-15);
}

TEST(Evidence, GridEmptySpaceThrows) {
  ParameterSpace empty;
  empty.atoms = Matrix(0, 1);
  empty.log_prior = Vector(0);
  std::vector<Observation> none;
  EXPECT_THROW(grid_log_evidence(ModelFamily::logistic(1), none, empty), std::invalid_argument);
}

TEST(Evidence, GaussianOneObservation) {
  const auto prior = GaussianPosteriorState::ridge(1, 1.0, 1.0);
  std::vector<Observation> one{{Vector::Constant(1, 1.0), 1.0, std::nullopt}};
  const auto r = gaussian_log_evidence(one, prior);
  EXPECT_NEAR(r.log_evidence, -0.5 * std::log(4 * std::numbers::pi) - 0.25, 1e-14);
  EXPECT_NEAR(r.log_evidence, -1.5155, 1e-4);
  EXPECT_EQ(r.method, EvidenceMethod::GaussianClosedForm);
  std::vector<Observation> none;
  EXPECT_EQ(gaussian_log_evidence(none, prior).log_evidence, 0.0);
}

TEST(Evidence, GaussianMatchesDeterminantFormula) {
  // Independent oracle: y ~ N(X theta0, sigma^2 I + X V0^-1 X^T).
  const int d = 2, n = 15;
  const double sigma = 0.6;
  Rng rng(4);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Observation> data;
  Matrix X(n, d);
  Vector y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = z(rng);
    X(i, 1) = z(rng);
    y[i] = 0.4 * X(i, 0) - 1.1 * X(i, 1) + sigma * z(rng);
    data.push_back({X.row(i).transpose(), y[i], std::nullopt});
  }
  Vector theta0(d);
  theta0 << 0.2, 0.1;
  Matrix V0(d, d);
  V0 << 1.5, 0.2, 0.2, 0.7;
  const auto prior = GaussianPosteriorState::prior(theta0, V0, sigma);
  const Matrix cov = sigma * sigma * Matrix::Identity(n, n) + X * V0.inverse() * X.transpose();
  const Vector r = y - X * theta0;
  Eigen::LLT<Matrix> llt(cov);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double expect = -0.5 * (n * std::log(2 * std::numbers::pi) + logdet + r.dot(llt.solve(r)));
  EXPECT_NEAR(gaussian_log_evidence(data, prior).log_evidence, expect, 1e-10);
}

TEST(Evidence, GaussianOrderInvariant) {
  Rng rng(8);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Observation> data;
  for (int i = 0; i < 30; ++i) {
    Vector x(3);
    x << z(rng), z(rng), z(rng);
    data.push_back({x, z(rng), std::nullopt});
  }
  const auto prior = GaussianPosteriorState::ridge(3, 2.0, 0.9);
  const double a = gaussian_log_evidence(data, prior).log_evidence;
  std::shuffle(data.begin(), data.end(), rng);
  const double b = gaussian_log_evidence(data, prior).log_evidence;
  std::reverse(data.begin(), data.end());
  const double c = gaussian_log_evidence(data, prior).log_evidence;
  EXPECT_NEAR(a, b, 1e-10);
  EXPECT_NEAR(a, c, 1e-10);
}

TEST(Evidence, ElboExamples) {
  const auto s = random_finite(6, 2, 12);
  const auto model = ModelFamily::logistic(2);
  std::vector<Observation> none;
  const auto prior = prior_weights(s);
  const auto r0 = elbo(prior, model, none, *s);
  EXPECT_NEAR(r0.log_evidence, 0.0, 1e-14);
  EXPECT_TRUE(r0.is_lower_bound);
  EXPECT_EQ(r0.method, EvidenceMethod::ELBOLowerBound);

  const auto data = bernoulli_stream(s->atom(2), 40, 13);
  const double ev = grid_log_evidence(model, data, *s).log_evidence;
  const auto post = finite_posterior(s, model, data);
  EXPECT_NEAR(elbo(post, model, data, *s).log_evidence, ev, 1e-9);

  Rng rng(14);
  for (int rep = 0; rep < 100; ++rep) {
    EXPECT_LE(elbo(random_weights(s, rng), model, data, *s).log_evidence, ev + 1e-9);
  }
}

TEST(Evidence, ElboRejectsZeroPriorAtom) {
  auto raw = *random_finite(3, 1, 20);
  raw.log_prior[1] = kNegInf;
  const auto s = std::make_shared<const ParameterSpace>(raw);
  FiniteWeights rho{s, Vector::Constant(3, -std::log(3.0))};
  std::vector<Observation> none;
  EXPECT_THROW(elbo(rho, ModelFamily::logistic(1), none, *s), std::invalid_argument);
}

TEST(Evidence, GaussianElboTightAtPosterior) {
  Rng rng(15);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Observation> data;
  for (int i = 0; i < 20; ++i) {
    Vector x(2);
    x << z(rng), z(rng);
    data.push_back({x, 0.5 * x[0] + 0.5 * z(rng), std::nullopt});
  }
  const auto prior = GaussianPosteriorState::ridge(2, 1.0, 0.5);
  auto post = prior;
  for (const auto& o : data) post = gaussian_conjugate_update(post, o);
  const double ev = gaussian_log_evidence(data, prior).log_evidence;
  EXPECT_NEAR(elbo(post.as_mixing(), data, prior).log_evidence, ev, 1e-9);
  GaussianMixing off = post.as_mixing();
  off.mean[0] += 0.3;
  EXPECT_LT(elbo(off, data, prior).log_evidence, ev);
}

TEST(Evidence, KlExamples) {
  const auto s = random_finite(2, 1, 30);
  FiniteWeights rho{s, Vector(2)};
  rho.log_weights << 0.0, kNegInf;
  FiniteWeights mu{s, Vector::Constant(2, -std::log(2.0))};
  EXPECT_NEAR(kl_divergence(rho, mu), std::log(2.0), 1e-15);
  EXPECT_EQ(kl_divergence(mu, mu), 0.0);
  EXPECT_THROW(kl_divergence(mu, rho), std::invalid_argument);

  const GaussianMixing a{Vector::Zero(1), Matrix::Identity(1, 1)};
  const GaussianMixing b{Vector::Constant(1, 1.0), Matrix::Identity(1, 1)};
  EXPECT_NEAR(kl_divergence(a, b), 0.5, 1e-15);
  EXPECT_NEAR(kl_divergence(a, a), 0.0, 1e-15);
  EXPECT_THROW(kl_divergence(a, mu), std::invalid_argument);
}

TEST(Evidence, KlNonnegative) {
  const auto s = random_finite(7, 1, 31);
  Rng rng(32);
  for (int rep = 0; rep < 100; ++rep) {
    EXPECT_GE(kl_divergence(random_weights(s, rng), random_weights(s, rng)), 0.0);
  }
}

TEST(Evidence, AtomSplitInvariance) {
  const auto model = ModelFamily::logistic(2);
  const auto s = random_finite(4, 2, 40);
  const auto data = bernoulli_stream(s->atom(0), 25, 41);
  const double base = grid_log_evidence(model, data, *s).log_evidence;

  std::vector<Vector> atoms;
  std::vector<double> w;
  for (std::size_t i = 0; i < s->size(); ++i) {
    atoms.push_back(s->atom(i));
    w.push_back(std::exp(s->log_prior[static_cast<Eigen::Index>(i)]));
  }
  atoms.push_back(s->atom(1));
  w[1] *= 0.3;
  w.push_back(w[1] / 0.3 * 0.7);
  const auto split = make_finite(atoms, w);
  EXPECT_NEAR(grid_log_evidence(model, data, split).log_evidence, base, 1e-12);
}
