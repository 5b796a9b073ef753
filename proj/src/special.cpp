#include "foxh/special.hpp"

#include <cmath>
#include <numbers>

#include "foxh/errors.hpp"

namespace foxh {
namespace {

using cplx = std::complex<double>;

// Stirling series for |z| large, Re z > 0.
cplx log_gamma_stirling(cplx z) {
  static constexpr double kBernoulliTerms[] = {
      1.0 / 12.0,         -1.0 / 360.0,         1.0 / 1260.0,    -1.0 / 1680.0,
      1.0 / 1188.0,       -691.0 / 360360.0,    1.0 / 156.0,     -3617.0 / 122400.0,
  };
  const cplx inv = 1.0 / z;
  const cplx inv2 = inv * inv;
  cplx series = 0.0;
  cplx power = inv;
  for (double c : kBernoulliTerms) {
    series += c * power;
    power *= inv2;
  }
  return (z - 0.5) * std::log(z) - z + 0.5 * std::log(2.0 * std::numbers::pi) + series;
}

// Re z >= 0.5: shift upward until Stirling is accurate.
cplx log_gamma_right(cplx z) {
  cplx shift = 0.0;
  while (std::abs(z) < 16.0) {
    shift += std::log(z);
    z += 1.0;
  }
  return log_gamma_stirling(z) - shift;
}

// log(sin(pi z)) for Im z >= 0 without overflow for large Im z.
cplx log_sin_pi_upper(cplx z) {
  const cplx i(0.0, 1.0);
  const double pi = std::numbers::pi;
  // sin(pi z) = e^{-i pi z} (e^{2 i pi z} - 1) / (2i), |e^{2 i pi z}| <= 1 here.
  return -i * pi * z + std::log((std::exp(2.0 * i * pi * z) - 1.0) / (2.0 * i));
}

}  // namespace

cplx log_gamma(cplx z) {
  if (z.imag() < 0.0) return std::conj(log_gamma(std::conj(z)));
  if (z.real() >= 0.5) return log_gamma_right(z);
  if (z.imag() == 0.0) {
    const double x = z.real();
    const double lg = std::lgamma(x);
    return {lg, gamma_sign(x) < 0 ? std::numbers::pi : 0.0};
  }
  // Reflection: Γ(z)Γ(1−z) = π / sin(πz).
  return std::log(std::numbers::pi) - log_sin_pi_upper(z) - log_gamma_right(1.0 - z);
}

int gamma_sign(double x) {
  if (x > 0.0) return 1;
  const double k = std::ceil(-x);  // x in (-k, -k+1)
  return (static_cast<long long>(k) % 2 == 0) ? 1 : -1;
}

double reciprocal_gamma(double x) {
  if (x <= 0.0 && x == std::floor(x)) return 0.0;
  if (x > 0.0 && x < 170.0) return 1.0 / std::tgamma(x);
  return gamma_sign(x) * std::exp(-std::lgamma(x));
}

GaussLegendreRule gauss_legendre(int n) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "Gauss-Legendre rule needs n >= 1");
  GaussLegendreRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) {
      rule.nodes[0] = 0.0;
      rule.weights[0] = 2.0;
      return rule;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  return rule;
}

}  // namespace foxh
