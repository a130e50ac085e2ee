#include "babc/error.hpp"
#include "babc/specfn.hpp"
#include "../oracles.hpp"

#include <doctest.h>

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <numbers>

using namespace babc::specfn;

TEST_CASE("normal cdf, pdf and inverse agree with boost") {
  const boost::math::normal n;
  for (double x = -30.0; x <= 8.0; x += 0.37) {
    CHECK(norm_cdf(x) == doctest::Approx(boost::math::cdf(n, x)).epsilon(1e-13));
    CHECK(norm_pdf(x) == doctest::Approx(boost::math::pdf(n, x)).epsilon(1e-13));
  }
  for (double p : {1e-300, 1e-20, 1e-5, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-12}) {
    CHECK(norm_inv_cdf(p) == doctest::Approx(boost::math::quantile(n, p)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(norm_inv_cdf(0.0), babc::DomainError);
  CHECK_THROWS_AS(norm_inv_cdf(1.0), babc::DomainError);
  CHECK_THROWS_AS(norm_cdf(std::nan("")), babc::DomainError);
}

TEST_CASE("log normal cdf stays finite in the lower tail") {
  CHECK(log_norm_cdf(-30.0) == doctest::Approx(std::log(0.5 * std::erfc(30.0 / std::numbers::sqrt2))).epsilon(1e-12));
  CHECK(log_norm_cdf(-36.0) == doctest::Approx(std::log(0.5 * std::erfc(36.0 / std::numbers::sqrt2))).epsilon(1e-12));
  const double x = -1e4;
  CHECK(std::isfinite(log_norm_cdf(x)));
  CHECK(log_norm_cdf(x) == doctest::Approx(-0.5 * x * x - std::log(-x) - 0.5 * std::log(2 * std::numbers::pi)).epsilon(1e-8));
  CHECK(log_norm_cdf(3.0) == doctest::Approx(std::log(norm_cdf(3.0))).epsilon(1e-14));
}

TEST_CASE("owen_t matches quadrature across the Patefield-Tandy regions") {
  for (double h : {-7.0, -3.1, -0.4, 0.0, 0.05, 0.9, 1.6, 2.5, 4.7, 6.9, 9.0}) {
    for (double a : {0.01, 0.1, 0.5, 0.97, 1.0, 1.05, 3.0, 10.0, 40.0, 999.0}) {
      INFO("h=" << h << " a=" << a);
      CHECK(std::fabs(owen_t(h, a) - oracle::owen_t(h, a)) < 1e-12);
    }
  }
}

TEST_CASE("owen_t identities and symmetries") {
  for (double h : {-2.0, 0.3, 1.7}) {
    CHECK(owen_t(h, 0.0) == 0.0);
    CHECK(owen_t(h, 1.0) == doctest::Approx(0.5 * norm_cdf(h) * norm_cdf(-h)).epsilon(1e-13));
    CHECK(owen_t(-h, 0.7) == doctest::Approx(owen_t(h, 0.7)).epsilon(1e-15));
    CHECK(owen_t(h, -0.7) == doctest::Approx(-owen_t(h, 0.7)).epsilon(1e-15));
  }
  for (double a : {0.2, 1.0, 5.0}) {
    CHECK(owen_t(0.0, a) == doctest::Approx(std::atan(a) / (2 * std::numbers::pi)).epsilon(1e-14));
  }
  // a > 1 reflection: T(h,a) = [Phi(h) + Phi(ah)]/2 - Phi(h)Phi(ah) - T(ah, 1/a) - [h<0]/2 for h >= 0
  const double h = 0.8, a = 3.0;
  const double rhs = 0.5 * (norm_cdf(h) + norm_cdf(a * h)) - norm_cdf(h) * norm_cdf(a * h) - owen_t(a * h, 1.0 / a);
  CHECK(owen_t(h, a) == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("bivariate quadrant matches one-dimensional quadrature") {
  for (double h : {-2.5, -0.3, 0.0, 1.2, 3.0}) {
    for (double rho : {-0.95, -0.4, 0.0, 0.3, 0.8, 0.99}) {
      INFO("h=" << h << " rho=" << rho);
      CHECK(std::fabs(bvn_quadrant(h, rho) - oracle::bvn_quadrant(h, rho)) < 1e-11);
    }
  }
}
