#include <catch_amalgamated.hpp>

#include "fairprep/gmm.hpp"

using namespace fairprep;

namespace {

Eigen::MatrixXd gaussian_blob(Rng& rng, int n, const Eigen::RowVectorXd& mean,
                              const Eigen::RowVectorXd& stddev) {
  Eigen::MatrixXd x(n, mean.cols());
  for (int i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < mean.cols(); ++c) x(i, c) = mean(c) + stddev(c) * rng.normal();
  return x;
}

} // namespace

TEST_CASE("fit_gmm with one component recovers the sample moments exactly", "[gmm]") {
  Rng rng(5);
  Eigen::RowVectorXd mu(3), sd(3);
  mu << 1.0, -2.0, 0.5;
  sd << 0.5, 1.5, 1.0;
  const Eigen::MatrixXd x = gaussian_blob(rng, 200, mu, sd);

  const auto fit = fit_gmm(x, 1, 42);
  const Eigen::RowVectorXd sample_mean = x.colwise().mean();
  const Eigen::RowVectorXd sample_var =
      (x.rowwise() - sample_mean).array().square().colwise().mean();

  CHECK((fit.gmm.means.row(0) - sample_mean).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((fit.gmm.variances.row(0) - sample_var).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(fit.gmm.weights(0) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("fit_gmm recovers two well-separated components", "[gmm]") {
  Rng rng(7);
  Eigen::RowVectorXd mu1(2), mu2(2), sd(2);
  mu1 << 1.5, 1.5;
  mu2 << -1.5, -1.5; // means 3 apart per axis
  sd << 0.6, 0.6;
  Eigen::MatrixXd x(1000, 2);
  x.topRows(500) = gaussian_blob(rng, 500, mu1, sd);
  x.bottomRows(500) = gaussian_blob(rng, 500, mu2, sd);

  const auto fit = fit_gmm(x, 2, 3);
  // match components to truth up to permutation
  const double direct = (fit.gmm.means.row(0) - mu1).norm() + (fit.gmm.means.row(1) - mu2).norm();
  const double swapped = (fit.gmm.means.row(0) - mu2).norm() + (fit.gmm.means.row(1) - mu1).norm();
  const double err = std::min(direct, swapped);
  CHECK(err / 2.0 < 0.2);
  CHECK(fit.gmm.weights.sum() == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("fit_gmm log-likelihood is nondecreasing across iterations", "[gmm]") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 30 + static_cast<int>(rng.below(100));
    const int d = 1 + static_cast<int>(rng.below(4));
    Eigen::MatrixXd x(n, d);
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c) x(i, c) = rng.normal(0.0, 1.0 + 2.0 * rng.uniform());
    const int k = 1 + static_cast<int>(rng.below(4));
    const auto fit = fit_gmm(x, k, rng.raw());
    for (std::size_t i = 1; i < fit.log_likelihood.size(); ++i)
      REQUIRE(fit.log_likelihood[i] >= fit.log_likelihood[i - 1] - 1e-9);
    REQUIRE(fit.gmm.weights.sum() == Catch::Approx(1.0).margin(1e-9));
    REQUIRE((fit.gmm.variances.array() >= 1e-6).all());
  }
}

TEST_CASE("fit_gmm input validation", "[gmm]") {
  Eigen::MatrixXd x(3, 2);
  x.setZero();
  CHECK_THROWS_WITH(fit_gmm(Eigen::MatrixXd(0, 2), 1, 0),
                    Catch::Matchers::ContainsSubstring("empty latent set"));
  CHECK_THROWS_WITH(fit_gmm(x, 0, 0), Catch::Matchers::ContainsSubstring("at least 1"));
  CHECK_THROWS_WITH(fit_gmm(x, 4, 0), Catch::Matchers::ContainsSubstring("fewer latent rows"));
}

TEST_CASE("fit_gmm applies the variance floor on degenerate data", "[gmm]") {
  Eigen::MatrixXd x(10, 2);
  x.setConstant(3.0); // zero variance everywhere
  const auto fit = fit_gmm(x, 1, 9);
  CHECK((fit.gmm.variances.array() == 1e-6).all());
  CHECK(fit.gmm.means(0, 0) == Catch::Approx(3.0));
}

TEST_CASE("sample_gmm is deterministic and hits every component", "[gmm]") {
  LatentGmm g;
  g.weights = Eigen::VectorXd(2);
  g.weights << 0.5, 0.5;
  g.means = Eigen::MatrixXd(2, 1);
  g.means << -10.0, 10.0;
  g.variances = Eigen::MatrixXd::Constant(2, 1, 0.01);
  g.validate();

  Rng a(4), b(4);
  int low = 0, high = 0;
  for (int i = 0; i < 200; ++i) {
    const auto za = sample_gmm(g, a);
    const auto zb = sample_gmm(g, b);
    REQUIRE(za == zb);
    (za(0) < 0 ? low : high)++;
  }
  CHECK(low > 50);
  CHECK(high > 50);
}
