#include "babc/error.hpp"
#include "babc/simulators.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace babc;

TEST_CASE("toy landscapes have minimum zero at their modes") {
  CHECK(toy2d_mean(ToyKind::Gaussian, Vector::Zero(2)) == 0.0);
  CHECK(toy2d_mean(ToyKind::Bimodal, (Vector(2) << -6.0, 4.0).finished()) == 0.0);
  CHECK(toy2d_mean(ToyKind::Bimodal, (Vector(2) << 6.0, -4.0).finished()) == 0.0);
  CHECK(toy2d_mean(ToyKind::Banana, (Vector(2) << 0.0, 4.0).finished()) == 0.0);
  CHECK(toy2d_mean(ToyKind::Multimodal, Vector::Zero(2)) == 0.0);
  const Vector t = (Vector(2) << 2.0, -1.0).finished();
  CHECK(toy2d_mean(ToyKind::Gaussian, t) == doctest::Approx(0.5 * (4.0 + 2.0 + 1.0) / 3.0));
  Rng rng(1);
  for (const auto& name : {"gaussian", "bimodal", "banana", "multimodal"}) {
    const Simulator s = make_simulator(name);
    CHECK(s.dim() == 2);
    CHECK(s.has_known_f());
    CHECK(s.epsilon == 1.0);
    CHECK_THROWS_AS(s.discrepancy(Vector::Constant(2, 17.0), rng), DomainError);
  }
  CHECK_THROWS_AS(make_simulator("nope"), ConfigError);
}

TEST_CASE("toy discrepancy noise has the stated level") {
  Rng rng(2);
  const Vector t = (Vector(2) << 1.0, 3.0).finished();
  const double f = toy2d_mean(ToyKind::Banana, t);
  const int n = 20000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = toy2d_discrepancy(ToyKind::Banana, t, rng) - f;
    s += d;
    s2 += d * d;
  }
  CHECK(std::fabs(s / n) < 0.02);
  CHECK(std::sqrt(s2 / n) == doctest::Approx(0.5).epsilon(0.03));
}

TEST_CASE("g-and-k quantile function") {
  const GkParams p;
  CHECK(gk_quantile(0.0, p) == p.a);
  double prev = -1e300;
  for (double z = -5.0; z <= 5.0; z += 0.1) {
    const double q = gk_quantile(z, p);
    CHECK(q > prev);
    prev = q;
  }
  GkParams sym = p;
  sym.g = 0.0;
  CHECK(gk_quantile(1.3, sym) - sym.a == doctest::Approx(sym.a - gk_quantile(-1.3, sym)));
  GkParams bad = p;
  bad.b = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("octiles interpolate like type-7 quantiles") {
  Vector v = Vector::LinSpaced(17, 0.0, 16.0);
  std::reverse(v.begin(), v.end());
  const Vector o = octiles(v);
  for (int i = 0; i < 7; ++i) CHECK(o[i] == doctest::Approx(2.0 * (i + 1)));
  const Vector w = Vector::LinSpaced(10, 1.0, 10.0);
  CHECK(octiles(w)[0] == doctest::Approx(1.0 + 9.0 / 8.0));
  CHECK_THROWS_AS(octiles(Vector::Zero(5)), DomainError);
}

TEST_CASE("g-and-k summaries recover location and scale") {
  Rng rng(3);
  GkParams p;
  p.g = 0.0;
  p.k = 0.0;
  const Vector s = gk_summaries(gk_sample(p, 200000, rng));
  // With g = k = 0 the model is N(a, b^2).
  CHECK(s[0] == doctest::Approx(p.a).epsilon(0.01));
  const double z = 0.6744897501960817;  // Phi^{-1}(0.75)
  CHECK(s[1] == doctest::Approx(2.0 * z * p.b).epsilon(0.01));
  CHECK(std::fabs(s[2]) < 0.01);
}

TEST_CASE("Mahalanobis discrepancy") {
  MahalanobisSpec spec;
  spec.observed = (Vector(2) << 1.0, 2.0).finished();
  spec.weight = Matrix::Identity(2, 2);
  CHECK(mahalanobis_discrepancy(spec, (Vector(2) << 4.0, 6.0).finished()) == doctest::Approx(5.0));
  spec.weight(0, 0) = 4.0;
  CHECK(mahalanobis_discrepancy(spec, (Vector(2) << 2.0, 2.0).finished()) == doctest::Approx(2.0));
  Rng rng(4);
  const Matrix w = estimate_weight_matrix(
      [](Rng& r) {
        std::normal_distribution<double> z(0.0, 1.0);
        return Vector((Vector(2) << 2.0 * z(r), 0.5 * z(r)).finished());
      },
      20000, rng);
  CHECK(w(0, 0) == doctest::Approx(0.25).epsilon(0.05));
  CHECK(w(1, 1) == doctest::Approx(4.0).epsilon(0.05));
}

TEST_CASE("Gaussianity diagnostic of a normal draw") {
  Rng rng(5);
  const GaussianityDiagnostic g = gaussianity_diagnostic(
      [](Rng& r) { return std::normal_distribution<double>(1.0, 2.0)(r); }, 20000, rng);
  CHECK(g.mean == doctest::Approx(1.0).epsilon(0.05));
  CHECK(g.sd == doctest::Approx(2.0).epsilon(0.05));
  CHECK(std::fabs(g.skewness) < 0.1);
  CHECK(std::fabs(g.excess_kurtosis) < 0.2);
  CHECK(g.histogram.size() == 20);
  const GaussianityDiagnostic c = gaussianity_diagnostic([](Rng&) { return 3.0; }, 30, rng);
  CHECK(c.degenerate);
}

TEST_CASE("the 1-D demo problem") {
  const Simulator s = make_demo1d();
  CHECK(s.dim() == 1);
  CHECK(s.mean_fn(Vector::Constant(1, 1.7)) == 0.0);
  CHECK(s.bounds.lower[0] == 0.0);
  CHECK(s.bounds.upper[0] == 4.0);
}
