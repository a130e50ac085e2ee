#include "babc/error.hpp"
#include "babc/uq.hpp"
#include "../oracles.hpp"

#include <doctest.h>

using namespace babc;

namespace {

GpPosterior quadratic_fit(const Box& box, int n, Rng& rng) {
  const PointSet x = box.sample(rng, n);
  Vector y(n);
  std::normal_distribution<double> z(0.0, 0.2);
  const Vector c = 0.5 * (box.lower + box.upper);
  for (int j = 0; j < n; ++j) y[j] = (x.col(j) - c).squaredNorm() + z(rng);
  GpHyper h;
  h.noise_var = 0.04;
  h.signal_var = 1.0;
  h.lengthscales = 0.4 * box.width();
  return GpPosterior::fit({x, y, box}, h, BasisSpec::quadratic(box.dim()));
}

}  // namespace

TEST_CASE("empirical quantile interpolates between order statistics") {
  const Vector v = (Vector(5) << 5, 1, 4, 2, 3).finished();
  CHECK(empirical_quantile(v, 0.0) == 1.0);
  CHECK(empirical_quantile(v, 1.0) == 5.0);
  CHECK(empirical_quantile(v, 0.5) == 3.0);
  CHECK(empirical_quantile(v, 0.125) == doctest::Approx(1.5));
  CHECK_THROWS_AS(empirical_quantile(Vector(0), 0.5), DomainError);
}

TEST_CASE("path weights are normalised prior-times-acceptance") {
  Matrix paths(2, 3);
  paths << 0.0, 1.0, 2.0, -1.0, 0.5, 3.0;
  const Vector lb = (Vector(3) << 0.0, std::log(2.0), -std::numeric_limits<double>::infinity()).finished();
  Vector ess;
  const Matrix w = path_weights(paths, lb, 0.5, 0.3, &ess);
  for (int i = 0; i < 2; ++i) {
    const double a = oracle::phi_cdf((0.5 - paths(i, 0)) / 0.3);
    const double b = 2.0 * oracle::phi_cdf((0.5 - paths(i, 1)) / 0.3);
    CHECK(w(i, 0) == doctest::Approx(a / (a + b)));
    CHECK(w(i, 2) == 0.0);
    CHECK(ess[i] >= 1.0);
    CHECK(ess[i] <= 2.0 + 1e-12);
  }
  // far in the tail every weight underflows in the linear domain but not in logs
  Matrix far = Matrix::Constant(1, 2, 200.0);
  far(0, 1) = 201.0;
  const Matrix wf = path_weights(far, Vector::Zero(2), 0.0, 0.1, nullptr);
  CHECK(wf.sum() == doctest::Approx(1.0));
  CHECK(wf(0, 0) > 0.99);
}

TEST_CASE("grid ensemble reproduces its weights from its paths") {
  Rng rng(1);
  const Box box(Vector::Zero(1), Vector::Constant(1, 4.0));
  const GpPosterior post = quadratic_fit(box, 10, rng);
  UqConfig c;
  c.sample_paths = 50;
  c.grid_resolution = 40;
  c.keep_paths = true;
  const PosteriorEnsemble e = quantify_grid(post, 0.5, 0.2, UniformPrior{box}, c, rng);
  REQUIRE(e.weights.rows() == 50);
  REQUIRE(e.paths.rows() == 50);
  CHECK((e.weights.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  const Matrix w = path_weights(e.paths, Vector::Zero(40), 0.5, 0.2, nullptr);
  CHECK((w - e.weights).cwiseAbs().maxCoeff() < 1e-12);
  const MomentSummary m = ensemble_moments(e);
  REQUIRE(m.expectation.size() == 1);
  CHECK(m.expectation[0].lower <= m.expectation[0].mean);
  CHECK(m.expectation[0].mean <= m.expectation[0].upper);
  CHECK(m.expectation[0].mean == doctest::Approx(m.path_expectations.col(0).mean()));
  CHECK(m.variance[0].lower >= 0.0);
  const MarginalBands bands = ensemble_marginals(e, 0, Vector::LinSpaced(100, 0.0, 4.0));
  CHECK(bands.curves.rows() == 50);
  CHECK((bands.lower.array() <= bands.upper.array()).all());
}

TEST_CASE("importance ensemble on a 3-D problem") {
  Rng rng(2);
  const Box box(Vector::Zero(3), Vector::Constant(3, 4.0));
  const GpPosterior post = quadratic_fit(box, 30, rng);
  UqConfig c;
  c.sample_paths = 40;
  c.mcmc_chains = 4;
  c.mcmc_length = 2000;
  c.is_thinned = 400;
  const PosteriorEnsemble e = quantify_is(post, 1.0, 0.2, UniformPrior{box}, c, rng);
  CHECK(e.backend == "is");
  CHECK(e.thinned_count == 400);
  CHECK((e.weights.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(e.weights.minCoeff() >= 0.0);
  CHECK(e.ess.maxCoeff() <= 400.0 + 1e-9);
  for (Eigen::Index j = 0; j < e.points.cols(); ++j) CHECK(box.contains(e.points.col(j)));
  const MomentSummary m = ensemble_moments(e);
  for (int d = 0; d < 3; ++d) CHECK(m.expectation[d].mean == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("UQ config validation") {
  UqConfig c;
  c.validate();
  c.alpha = 1.0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = UqConfig{};
  c.is_thinned = 10 * c.mcmc_chains * c.mcmc_length;
  CHECK_THROWS_AS(c.validate(), DomainError);
}
