#include "seqmix/kernels.hpp"

namespace seqmix::kernels::serial {

void accumulate_nll(const ModelFamily& model, const Matrix& atoms,
                    const Observation& obs, std::span<double> nll) {
  require(static_cast<Eigen::Index>(nll.size()) == atoms.rows(),
          "nll buffer size != atom count");
  const Eigen::Index m = atoms.rows();
  switch (model.kind()) {
    case ModelKind::LogisticBernoulli: {
      model.check(Vector::Zero(model.parameter_dimension()), obs);
      const Vector z = atoms * obs.covariate;
      const double sign = obs.outcome == 1.0 ? -1.0 : 1.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        nll[static_cast<std::size_t>(i)] += softplus(sign * z[i]);
      }
      break;
    }
    case ModelKind::GaussianLinear: {
      model.check(Vector::Zero(model.parameter_dimension()), obs);
      const double sigma = model.noise_std_for(obs);
      const double c = 0.5 * kLog2Pi + std::log(sigma);
      const Vector z = atoms * obs.covariate;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double r = (obs.outcome - z[i]) / sigma;
        nll[static_cast<std::size_t>(i)] += c + 0.5 * r * r;
      }
      break;
    }
    case ModelKind::FiniteCategorical:
      for (Eigen::Index i = 0; i < m; ++i) {
        nll[static_cast<std::size_t>(i)] -=
            seqmix::log_density(model, atoms.row(i).transpose(), obs);
      }
      break;
  }
}

double log_sum_exp(std::span<const double> values) {
  return seqmix::log_sum_exp(values);
}

double log_evidence(std::span<const double> nll, const Vector& log_prior) {
  require(static_cast<Eigen::Index>(nll.size()) == log_prior.size(),
          "nll and prior differ in length");
  std::vector<double> terms(nll.size());
  for (std::size_t i = 0; i < nll.size(); ++i) {
    terms[i] = log_prior[static_cast<Eigen::Index>(i)] - nll[i];
  }
  return seqmix::log_sum_exp(terms);
}

void quadratic_form(const Matrix& atoms, const Vector& center, const Matrix& H,
                    std::span<double> out) {
  require(static_cast<Eigen::Index>(out.size()) == atoms.rows(),
          "output size != atom count");
  for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
    const Vector diff = atoms.row(i).transpose() - center;
    out[static_cast<std::size_t>(i)] = 0.5 * diff.dot(H * diff);
  }
}

MemberScan scan_members(const Matrix& atoms, std::span<const double> statistic,
                        double threshold, const Matrix& arms) {
  require(static_cast<Eigen::Index>(statistic.size()) == atoms.rows(),
          "statistic size != atom count");
  MemberScan scan;
  scan.best_inner.assign(static_cast<std::size_t>(arms.rows()), kNegInf);
  for (Eigen::Index i = 0; i < atoms.rows(); ++i) {
    if (!(statistic[static_cast<std::size_t>(i)] <= threshold)) continue;
    ++scan.members;
    const double c0 = atoms(i, 0);
    scan.coord_min = std::min(scan.coord_min, c0);
    scan.coord_max = std::max(scan.coord_max, c0);
    for (Eigen::Index a = 0; a < arms.rows(); ++a) {
      const double v = atoms.row(i).dot(arms.row(a));
      auto& best = scan.best_inner[static_cast<std::size_t>(a)];
      if (v > best) best = v;
    }
  }
  return scan;
}

std::size_t argmin(std::span<const double> values) {
  require(!values.empty(), "argmin of an empty range");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] < values[best]) best = i;
  }
  return best;
}

}  // namespace seqmix::kernels::serial
