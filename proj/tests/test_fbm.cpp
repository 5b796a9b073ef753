#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "foxh/errors.hpp"
#include "foxh/fbm.hpp"

using namespace foxh;

namespace {

// Closed form of the normalising constant: K_H² = Γ(2H+1) sin(πH).
double k_closed_form(double h) { return std::sqrt(std::tgamma(2.0 * h + 1.0) * std::sin(std::numbers::pi * h)); }

// ∫ kernel(x)² dx assembled from pointwise kernel values.
double squared_kernel_norm(double h, double t) {
  auto f = [&](double x) {
    const double v = frac_indicator_kernel(h, t, x).value;
    return v * v;
  };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  return ts.integrate(f, 0.0, t, 1e-12) + ts.integrate(f, -t, 0.0, 1e-12) + es.integrate(f, -INFINITY, -t, 1e-12);
}

struct SampleCov {
  double cov = 0.0;
  double se = 0.0;
};

// Sample covariance of columns j,k (mean zero known) with its Gaussian SE.
SampleCov column_cov(const TrajectorySet& ts, int j, int k, double sjj, double skk, double sjk) {
  double acc = 0.0;
  for (std::size_t i = 0; i < ts.n_paths; ++i) acc += ts.at(i, j) * ts.at(i, k);
  const double n = static_cast<double>(ts.n_paths);
  return {acc / n, std::sqrt((sjj * skk + sjk * sjk) / n)};
}

}  // namespace

TEST_CASE("fBm covariance") {
  CHECK(fbm_covariance(0.5, 2.0, 2.0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(fbm_covariance(0.75, 1.0, 2.0) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  for (double h : {0.1, 0.3, 0.62, 0.9}) CHECK(fbm_covariance(h, 1.7, 1.7) == doctest::Approx(std::pow(1.7, 2 * h)));
  CHECK(fbm_covariance(0.5, 0.7, 3.0) == doctest::Approx(0.7));
}

TEST_CASE("normalising constant") {
  CHECK(k_constant(0.5) == 1.0);
  for (double h : {0.05, 0.2, 0.25, 0.4, 0.6, 0.75, 0.8, 0.95})
    CHECK(k_constant(h) == doctest::Approx(k_closed_form(h)).epsilon(1e-9));
  CHECK_THROWS_AS(k_constant(1.0), Error);
}

TEST_CASE("fractional indicator kernel") {
  CHECK(frac_indicator_kernel(0.5, 1.0, 0.5).value == 1.0);
  CHECK(frac_indicator_kernel(0.5, 1.0, 1.5).value == 0.0);
  for (double h : {0.25, 0.75}) {
    CHECK(frac_indicator_kernel(h, 1.0, 1.2).value == 0.0);
    CHECK(frac_indicator_kernel(h, 1.0, 7.0).value == 0.0);
  }
  const double c = k_closed_form(0.75) / std::tgamma(1.25);
  CHECK(frac_indicator_kernel(0.75, 1.0, -1.0).value == doctest::Approx(c * (std::pow(2.0, 0.25) - 1.0)).epsilon(1e-9));

  SUBCASE("singular points flagged for H < 1/2") {
    CHECK(frac_indicator_kernel(0.25, 1.0, 0.0).singular);
    CHECK(frac_indicator_kernel(0.25, 1.0, 1.0).singular);
    CHECK(std::isinf(frac_indicator_kernel(0.25, 1.0, 1.0).value));
    CHECK_FALSE(frac_indicator_kernel(0.25, 1.0, 0.5).singular);
    CHECK_FALSE(frac_indicator_kernel(0.75, 1.0, 0.0).singular);
  }

  SUBCASE("unit normalisation") {
    for (double h : {0.25, 0.5, 0.75}) {
      CHECK(std::abs(squared_kernel_norm(h, 1.0) - 1.0) < 1e-6);
      CHECK(std::abs(kernel_inner_product(h, 1.0, 1.0) - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("kernel inner products reproduce the fBm covariance") {
  for (double h : {0.2, 0.5, 0.8})
    for (double t1 : {0.5, 1.0, 2.0})
      for (double t2 : {0.5, 1.0, 2.0}) {
        CAPTURE(h);
        CAPTURE(t1);
        CAPTURE(t2);
        CHECK(std::abs(kernel_inner_product(h, t1, t2) - fbm_covariance(h, t1, t2)) < 1e-5);
      }
}

TEST_CASE("circulant embedding spectrum") {
  for (double h : {0.05, 0.25, 0.5, 0.75, 0.95})
    for (int n : {1, 7, 64, 1000}) {
      const auto lambda = circulant_eigenvalues(h, n);
      CHECK(lambda.size() == static_cast<std::size_t>(2 * n));
      for (double v : lambda) CHECK(v >= 0.0);
    }
}

TEST_CASE("grids and arguments") {
  CHECK_THROWS_AS(make_grid(1.0, 0), Error);
  CHECK_THROWS_AS(make_grid(0.0, 4), Error);
  CHECK(make_grid(2.0, 4).time(3) == 1.5);
  CHECK_THROWS_AS(fbm_paths(0.5, make_grid(1, 4), 0, 1), Error);
  CHECK_THROWS_AS(fbm_paths(1.5, make_grid(1, 4), 1, 1), Error);
  try {
    fbm_paths(0.7, make_grid(1, 32), 1, 1, Generator::Cholesky, {.cholesky_cap = 16});
    FAIL("expected GridTooLarge");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::GridTooLarge);
  }
  CHECK(parse_generator("cholesky") == Generator::Cholesky);
  CHECK_FALSE(parse_generator("hosking").has_value());
}

TEST_CASE("paths start at zero and are reproducible") {
  const auto grid = make_grid(1.0, 50);
  for (auto method : {Generator::Circulant, Generator::Cholesky}) {
    const auto a = fbm_paths(0.3, grid, 17, 99, method, {.threads = 1});
    const auto b = fbm_paths(0.3, grid, 17, 99, method, {.threads = 3});
    const auto c = fbm_paths(0.3, grid, 5, 99, method, {.threads = 1});
    CHECK(a.values == b.values);
    for (std::size_t i = 0; i < a.n_paths; ++i) CHECK(a.at(i, 0) == 0.0);
    for (std::size_t i = 0; i < c.values.size(); ++i) REQUIRE(c.values[i] == a.values[i]);
    const auto d = fbm_paths(0.3, grid, 17, 100, method);
    CHECK(d.values != a.values);
  }
}

TEST_CASE("Brownian increments are uncorrelated with variance dt") {
  const auto grid = make_grid(1.0, 16);
  const std::size_t n = 10000;
  const auto ts = fbm_paths(0.5, grid, n, 7);
  const double dt = grid.dt();
  double s11 = 0.0, s12 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d1 = ts.at(i, 5) - ts.at(i, 4);
    const double d2 = ts.at(i, 6) - ts.at(i, 5);
    s11 += d1 * d1;
    s12 += d1 * d2;
  }
  s11 /= n;
  s12 /= n;
  CHECK(std::abs(s11 - dt) < 3.0 * dt * std::sqrt(2.0 / n));
  const double corr = s12 / dt;
  CHECK(std::abs(corr) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("variance at t = 1 for H = 0.75") {
  const std::size_t n = 10000;
  const auto ts = fbm_paths(0.75, make_grid(1.0, 64), n, 11);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += ts.at(i, 64) * ts.at(i, 64);
  s /= n;
  CHECK(std::abs(s - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("circulant and cholesky agree with the analytic covariance") {
  const auto grid = make_grid(2.0, 8);
  const std::size_t n = 10000;
  const double h = 0.7;
  for (auto method : {Generator::Circulant, Generator::Cholesky}) {
    const auto ts = fbm_paths(h, grid, n, 2024, method);
    for (int j = 1; j <= 8; ++j)
      for (int k = j; k <= 8; ++k) {
        const double sjj = fbm_covariance(h, grid.time(j), grid.time(j));
        const double skk = fbm_covariance(h, grid.time(k), grid.time(k));
        const double sjk = fbm_covariance(h, grid.time(j), grid.time(k));
        const auto est = column_cov(ts, j, k, sjj, skk, sjk);
        CAPTURE(to_string(method));
        CAPTURE(j);
        CAPTURE(k);
        CHECK(std::abs(est.cov - sjk) < 3.0 * est.se);
      }
  }
}
