#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fairprep/error.hpp"
#include "fairprep/rng.hpp"

namespace fairprep {

/// Diagonal-covariance Gaussian mixture over latent codes.
struct LatentGmm {
  Eigen::VectorXd weights;   // k, sums to 1
  Eigen::MatrixXd means;     // k x d
  Eigen::MatrixXd variances; // k x d, entries >= floor

  Eigen::Index components() const { return weights.size(); }
  Eigen::Index dim() const { return means.cols(); }

  void validate(double floor = 0.0) const {
    if (std::abs(weights.sum() - 1.0) > 1e-9) throw Error("LatentGmm: weights do not sum to 1");
    if ((weights.array() <= 0.0).any()) throw Error("LatentGmm: nonpositive mixture weight");
    if ((variances.array() < floor).any()) throw Error("LatentGmm: variance below floor");
  }
};

struct GmmOptions {
  int max_iterations = 200;
  double tolerance = 1e-6;      // stop when log-likelihood improves less than this
  double variance_floor = 1e-6;
};

struct GmmFit {
  LatentGmm gmm;
  std::vector<double> log_likelihood; // total log-likelihood per EM iteration
  int iterations = 0;
};

namespace detail {

/// log N(x | mean, diag(var)) for every (row, component) pair.
inline Eigen::MatrixXd gmm_log_densities(const Eigen::MatrixXd& x, const LatentGmm& g) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = g.components();
  const Eigen::Index d = x.cols();
  Eigen::MatrixXd out(n, k);
  const double c = -0.5 * static_cast<double>(d) * std::log(2.0 * M_PI);
  for (Eigen::Index j = 0; j < k; ++j) {
    const Eigen::ArrayXd var = g.variances.row(j).transpose().array();
    const double log_det = var.log().sum();
    const Eigen::MatrixXd centered = x.rowwise() - g.means.row(j);
    out.col(j) = (c - 0.5 * log_det -
                  0.5 * (centered.array().square().rowwise() * var.inverse().transpose()).rowwise().sum())
                     .matrix();
  }
  return out;
}

} // namespace detail

/// Log-likelihood of rows of `x` under the mixture.
inline double gmm_log_likelihood(const Eigen::MatrixXd& x, const LatentGmm& g) {
  Eigen::MatrixXd logp = detail::gmm_log_densities(x, g);
  logp.array().rowwise() += g.weights.transpose().array().log();
  const Eigen::VectorXd row_max = logp.rowwise().maxCoeff();
  return ((logp.colwise() - row_max).array().exp().rowwise().sum().log() + row_max.array()).sum();
}

/// Fits a diagonal GMM by expectation-maximization. Initialization is
/// farthest-point: a seeded uniform pick for the first center, then
/// repeatedly the point with the largest distance to its nearest chosen
/// center. Iterates until the log-likelihood gain drops below the
/// tolerance or the iteration cap; the trace is returned for the
/// monotonicity checks callers run.
inline GmmFit fit_gmm(const Eigen::MatrixXd& latents, int k, std::uint64_t seed,
                      const GmmOptions& opts = {}) {
  const Eigen::Index n = latents.rows();
  const Eigen::Index d = latents.cols();
  if (k < 1) throw Error("fit_gmm: component count must be at least 1");
  if (n == 0) throw Error("fit_gmm: empty latent set");
  if (n < k) throw Error("fit_gmm: fewer latent rows than components");

  Rng rng(seed);
  GmmFit fit;
  LatentGmm& g = fit.gmm;
  g.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
  g.means.resize(k, d);
  g.variances.resize(k, d);

  // Farthest-point center selection.
  std::vector<Eigen::Index> centers{static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)))};
  Eigen::VectorXd nearest =
      (latents.rowwise() - latents.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < k) {
    Eigen::Index far = 0;
    nearest.maxCoeff(&far);
    centers.push_back(far);
    nearest = nearest.cwiseMin((latents.rowwise() - latents.row(far)).rowwise().squaredNorm());
  }
  const Eigen::RowVectorXd global_mean = latents.colwise().mean();
  Eigen::RowVectorXd global_var =
      (latents.rowwise() - global_mean).array().square().colwise().mean();
  global_var = global_var.cwiseMax(opts.variance_floor);
  for (int j = 0; j < k; ++j) {
    g.means.row(j) = latents.row(centers[static_cast<std::size_t>(j)]);
    g.variances.row(j) = global_var;
  }

  double previous = -std::numeric_limits<double>::infinity();
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // E-step: responsibilities via logsumexp.
    Eigen::MatrixXd logp = detail::gmm_log_densities(latents, g);
    logp.array().rowwise() += g.weights.transpose().array().log();
    const Eigen::VectorXd row_max = logp.rowwise().maxCoeff();
    Eigen::MatrixXd resp = (logp.colwise() - row_max).array().exp();
    const Eigen::VectorXd row_sum = resp.rowwise().sum();
    const double loglik = (row_sum.array().log() + row_max.array()).sum();
    resp.array().colwise() /= row_sum.array();

    fit.log_likelihood.push_back(loglik);
    fit.iterations = iter + 1;
    if (loglik - previous < opts.tolerance && iter > 0) break;
    previous = loglik;

    // M-step.
    const Eigen::VectorXd nk = resp.colwise().sum();
    for (int j = 0; j < k; ++j) {
      if (nk(j) <= 0.0) continue; // starved component keeps its parameters
      g.means.row(j) = (resp.col(j).transpose() * latents) / nk(j);
      const Eigen::MatrixXd centered = latents.rowwise() - g.means.row(j);
      g.variances.row(j) =
          ((centered.array().square().colwise() * resp.col(j).array()).colwise().sum() / nk(j))
              .cwiseMax(opts.variance_floor);
    }
    g.weights = (nk / static_cast<double>(n)).cwiseMax(1e-12); // keep starved components valid
    g.weights /= g.weights.sum();
  }
  g.validate(opts.variance_floor);
  return fit;
}

/// One latent draw from the mixture.
inline Eigen::RowVectorXd sample_gmm(const LatentGmm& g, Rng& rng) {
  double target = rng.uniform();
  Eigen::Index comp = g.components() - 1;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < g.components(); ++j) {
    acc += g.weights(j);
    if (target < acc) {
      comp = j;
      break;
    }
  }
  Eigen::RowVectorXd z(g.dim());
  for (Eigen::Index c = 0; c < g.dim(); ++c)
    z(c) = g.means(comp, c) + std::sqrt(g.variances(comp, c)) * rng.normal();
  return z;
}

} // namespace fairprep
