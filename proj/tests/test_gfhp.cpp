#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "foxh/analysis.hpp"
#include "foxh/errors.hpp"
#include "foxh/gfhp.hpp"
#include "test_configs.hpp"

using namespace foxh;
using namespace foxh::testing;

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
MeanSe column_stat(const TrajectorySet& ts, int k, F f) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < ts.n_paths; ++i) {
    const double v = f(ts.at(i, k));
    s += v;
    s2 += v * v;
  }
  const double n = static_cast<double>(ts.n_paths);
  const double mean = s / n;
  return {mean, std::sqrt((s2 / n - mean * mean) / n)};
}

std::vector<double> column(const TrajectorySet& ts, int k) {
  std::vector<double> out(ts.n_paths);
  for (std::size_t i = 0; i < ts.n_paths; ++i) out[i] = ts.at(i, k);
  return out;
}

// ∫_ℝ f with a double-exponential rule on each half line.
template <class F>
double integrate_line(F f) {
  boost::math::quadrature::exp_sinh<double> rule;
  return rule.integrate([&](double x) { return f(-x); }, 0.0, INFINITY, 1e-9) + rule.integrate(f, 0.0, INFINITY, 1e-9);
}

}  // namespace

TEST_CASE("configuration") {
  CHECK_THROWS_AS(brownian_config(1.0), Error);
  try {
    make_config(validate_params({{}, {{0.0, 1.0}}}), {{GammaFactor{2.0, 1.0, 1.0}}}, 0.5);
    FAIL("expected MomentMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::MomentMismatch);
  }
  const std::vector<double> bad{1.0, 1.0};
  CHECK_THROWS_AS(make_cov_matrix(0.5, bad), Error);
  const std::vector<double> times{0.3, 0.9, 1.4, 3.0};
  const auto cov = make_cov_matrix(0.7, times);
  for (std::size_t l = 0; l < 4; ++l)
    for (std::size_t k = 0; k < 4; ++k) CHECK(cov(l, k) == cov(k, l));
  CHECK(parse_sim_mode("time_change") == SimMode::TimeChange);
}

TEST_CASE("characteristic function") {
  const auto bm = brownian_config();
  const std::vector<double> t1{1.0}, one{1.0}, zero{0.0};
  CHECK(char_fn(bm, t1, zero) == 1.0);
  CHECK(std::abs(char_fn(bm, t1, one) - std::exp(-0.5)) < 1e-12);

  // E_{1/2}(−1/2) = e^{1/4} erfc(1/2)
  const auto ml = ggbm_config(0.5, 0.3);
  CHECK(char_fn(ml, t1, one) == doctest::Approx(std::exp(0.25) * std::erfc(0.5)).epsilon(1e-10));

  SUBCASE("bounded and real on a grid") {
    for (const auto& cfg : {ggbm_config(0.75, 0.375), gamma_config(0.8), brownian_config(0.2)}) {
      const std::vector<double> times{0.5, 1.0, 2.0};
      for (double a : {-3.0, -0.5, 0.0, 1.0, 4.0})
        for (double b : {-2.0, 0.3, 2.5}) {
          const std::vector<double> lam{a, b, 0.5 * a - b};
          const double v = char_fn(cfg, times, lam);
          CHECK(std::isfinite(v));
          CHECK(std::abs(v) <= 1.0 + 1e-12);
        }
    }
  }

  SUBCASE("determined by spec and H alone") {
    const auto spec = validate_params({{{0.5, 0.5}}, {{0.0, 1.0}}});
    const auto a = make_config(spec, {{MWrightFactor{0.5, 1.0}}}, 0.4);
    const auto b = make_config(spec, {{GammaFactor{0.5, 4.0, 0.5}}}, 0.4);
    const std::vector<double> times{0.2, 1.1};
    for (double l1 : {-1.0, 0.5, 2.0})
      for (double l2 : {-0.7, 1.5}) {
        const std::vector<double> lam{l1, l2};
        CHECK(char_fn(a, times, lam) == char_fn(b, times, lam));
      }
  }
}

TEST_CASE("increment characteristic function") {
  const auto cfg = ggbm_config(0.75, 0.375);
  CHECK(increment_chf(cfg, 1.3, 1.3, 2.0) == 1.0);
  for (double d : {0.25, 1.0, 3.0}) {
    const std::vector<double> t{d}, lam{1.7};
    CHECK(increment_chf(cfg, 5.0 + d, 5.0, 1.7) == doctest::Approx(char_fn(cfg, t, lam)).epsilon(1e-13));
    CHECK(increment_chf(cfg, 0.0, d, 1.7) == increment_chf(cfg, 2.0 + d, 2.0, 1.7));
  }

  SUBCASE("Monte Carlo") {
    const auto ts = simulate(cfg, make_grid(1.0, 2), 10000, 31);
    double s = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < ts.n_paths; ++i) {
      const double c = std::cos(ts.at(i, 2) - ts.at(i, 1));
      s += c;
      s2 += c * c;
    }
    const double n = static_cast<double>(ts.n_paths);
    const double se = std::sqrt((s2 / n - (s / n) * (s / n)) / n);
    CHECK(std::abs(s / n - increment_chf(cfg, 1.0, 0.5, 1.0)) < 3.0 * se);
  }
}

TEST_CASE("moments and covariance") {
  const double g175 = boost::math::tgamma(1.75);
  const auto ggbm = ggbm_config(0.75, 0.375);
  const auto bm = brownian_config();
  CHECK(analytic_moment(ggbm, 1.0, 1) == 0.0);
  CHECK(analytic_moment(ggbm, 2.3, 5) == 0.0);
  CHECK(analytic_moment(bm, 1.0, 4) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(analytic_moment(bm, 2.0, 6) == doctest::Approx(15.0 * 8.0).epsilon(1e-13));
  CHECK(analytic_moment(ggbm, 1.0, 2) == doctest::Approx(1.0 / g175).epsilon(1e-12));
  CHECK(analytic_moment(ggbm, 4.0, 2) == doctest::Approx(std::pow(4.0, 0.75) / g175).epsilon(1e-12));

  for (double t : {0.5, 1.0, 3.0}) CHECK(covariance(ggbm, t, t) == doctest::Approx(analytic_moment(ggbm, t, 2)));
  CHECK(covariance(bm, 0.7, 2.0) == doctest::Approx(0.7).epsilon(1e-14));
  CHECK(covariance(ggbm, 1.0, 2.0) == doctest::Approx(std::pow(2.0, 0.75) / (2.0 * g175)).epsilon(1e-12));
}

TEST_CASE("simulation matches second moments") {
  SUBCASE("Brownian motion") {
    const auto ts = simulate(brownian_config(), make_grid(1.0, 1), 100000, 5);
    const auto st = column_stat(ts, 1, [](double x) { return x * x; });
    CHECK(std::abs(st.mean - 1.0) < 3.0 * st.se);
  }
  SUBCASE("ggBm") {
    const auto cfg = ggbm_config(0.75, 0.375);
    const auto ts = simulate(cfg, make_grid(1.0, 1), 100000, 6);
    const auto st = column_stat(ts, 1, [](double x) { return x * x; });
    CHECK(std::abs(st.mean - 1.0 / boost::math::tgamma(1.75)) < 3.0 * st.se);
  }
}

TEST_CASE("scale and time-change modes agree in law") {
  const auto cfg = ggbm_config(0.75, 0.375);
  const auto grid = make_grid(2.0, 16);
  const auto a = simulate(cfg, grid, 10000, 41, SimMode::Scale);
  const auto b = simulate(cfg, grid, 10000, 42, SimMode::TimeChange);
  for (int k : {4, 8, 16}) {
    CAPTURE(k);
    CHECK(ks_two_sample(column(a, k), column(b, k)).p_value > 0.01);
  }
  CHECK(b.at(0, 0) == 0.0);
  const auto again = simulate(cfg, grid, 10000, 42, SimMode::TimeChange);
  CHECK(again.values == b.values);
}

TEST_CASE("joint density") {
  const std::vector<double> t1{1.0}, x0{0.0};
  CHECK(joint_density(brownian_config(0.3), t1, x0) == doctest::Approx(kInvSqrt2Pi).epsilon(1e-14));

  // (1/√(2π)) E[Y^{−1/2}] with E[Y^{−1/2}] = Γ(1/2)/Γ(3/4) for M_{1/2}
  const double expected = kInvSqrt2Pi * boost::math::tgamma(0.5) / boost::math::tgamma(0.75);
  CHECK(joint_density(ggbm_config(0.5, 0.4), t1, x0) == doctest::Approx(expected).epsilon(1e-8));

  SUBCASE("normalisation") {
    for (const auto& cfg : {ggbm_config(0.75, 0.375), gamma_config(0.8), ggbm_config(0.5, 0.6)}) {
      auto f = [&](double x) {
        const std::vector<double> xv{x};
        return joint_density(cfg, t1, xv);
      };
      CHECK(std::abs(integrate_line(f) - 1.0) < 1e-4);
    }
  }

  SUBCASE("two-point marginal") {
    const auto cfg = ggbm_config(0.75, 0.375);
    const std::vector<double> times{0.5, 1.0};
    for (double x1 : {-0.8, 0.3, 1.5}) {
      auto f = [&](double x2) {
        const std::vector<double> xv{x1, x2};
        return joint_density(cfg, times, xv);
      };
      const std::vector<double> ta{0.5}, xa{x1};
      CAPTURE(x1);
      CHECK(std::abs(integrate_line(f) - joint_density(cfg, ta, xa)) < 1e-3);
    }
  }

  SUBCASE("errors") {
    const std::vector<double> rep{1.0, 1.0}, xx{0.1, 0.2};
    try {
      joint_density(gamma_config(0.5), rep, xx);
      FAIL("expected SingularCovariance");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SingularCovariance);
    }
    // Exp(1) mixing makes the two-point density infinite at the origin.
    const std::vector<double> times{1.0, 2.0}, origin{0.0, 0.0};
    try {
      joint_density(gamma_config(0.5), times, origin);
      FAIL("expected QuadratureNonConvergent");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::QuadratureNonConvergent);
    }
  }
}

TEST_CASE("self-similarity and Kolmogorov moment scaling") {
  const auto cfg = ggbm_config(0.75, 0.375);
  for (double c : {2.0, 4.0}) CHECK(self_similarity_test(cfg, c, 1.0, 10000, 77).ks.p_value > 0.01);

  const auto ts = simulate(cfg, make_grid(4.0, 8), 40000, 8);
  for (int n : {1, 2}) {
    const double target = analytic_moment(cfg, 1.0, 2 * n);
    for (auto [j, k] : {std::pair{0, 1}, std::pair{2, 6}, std::pair{1, 8}}) {
      const double dt = ts.grid.time(k) - ts.grid.time(j);
      double s = 0.0, s2 = 0.0;
      for (std::size_t i = 0; i < ts.n_paths; ++i) {
        const double v = std::pow(ts.at(i, k) - ts.at(i, j), 2 * n) / std::pow(dt, 2.0 * n * cfg.hurst);
        s += v;
        s2 += v * v;
      }
      const double m = static_cast<double>(ts.n_paths);
      const double se = std::sqrt((s2 / m - (s / m) * (s / m)) / m);
      CAPTURE(n);
      CAPTURE(j);
      CAPTURE(k);
      CHECK(std::abs(s / m - target) < 4.0 * se);
    }
  }
}
