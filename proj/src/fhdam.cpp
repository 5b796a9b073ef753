#include "foxh/fhdam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "foxh/errors.hpp"
#include "foxh/special.hpp"

namespace foxh {
namespace {

constexpr std::size_t kSampleChunk = 4096;
constexpr double kWeightTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// H^{1,0}_{1,1}[τ | (a,α); (b,β)] for α < β by its residue series at the poles
// of Γ(b+βs). Returns nullopt when cancellation would cost more than ~4 digits.
std::optional<double> h11_series(const ParamPair& up, const ParamPair& low, double tau) {
  const auto [a, alpha] = up;
  const auto [b, beta] = low;
  const double log_tau = std::log(tau);
  double sum = 0.0, max_term = 0.0;
  int quiet = 0;
  for (int l = 0; l < 5000; ++l) {
    const double arg = a - alpha * (b + l) / beta;
    const double rg = reciprocal_gamma(arg);
    double term = 0.0;
    if (rg != 0.0) {
      const double log_mag = (b + l) / beta * log_tau - std::lgamma(l + 1.0) + std::log(std::abs(rg));
      term = ((l % 2) ? -1.0 : 1.0) * (rg > 0 ? 1.0 : -1.0) * std::exp(log_mag);
    }
    sum += term;
    max_term = std::max(max_term, std::abs(term));
    if (std::abs(term) <= 1e-17 * std::abs(sum)) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
    if (l == 4999) return std::nullopt;
  }
  // Saddle-point magnitude of the Mellin-Barnes integrand bounds |H(τ)| up to
  // an O(1) factor; rounding error is ~1e-16 max_term.
  const WrightParams params{{up}, {low}};
  const double gamma = saddle_contour(params, tau);
  const double bound = std::exp(log_mellin_ratio(params, gamma) - gamma * log_tau);
  if (!(max_term <= 1e4 * bound)) return std::nullopt;
  return sum / beta;
}

bool single_pair(const FhdamSpec& spec) { return spec.p() == 1 && spec.m() == 1; }

}  // namespace

void check_factor(const Factor& factor) {
  std::visit(overloaded{
                 [](const GammaFactor& g) {
                   if (!(g.shape > 0.0 && g.scale > 0.0))
                     throw Error(ErrorKind::InvalidArgument, "gamma factor needs shape > 0 and scale > 0");
                   if (g.power == 0.0) throw Error(ErrorKind::InvalidArgument, "factor power must be nonzero");
                 },
                 [](const BetaFactor& f) {
                   if (!(f.a > 0.0 && f.b > 0.0))
                     throw Error(ErrorKind::InvalidArgument, "beta factor needs a > 0 and b > 0");
                   if (f.power == 0.0) throw Error(ErrorKind::InvalidArgument, "factor power must be nonzero");
                 },
                 [](const MWrightFactor& f) {
                   if (!(f.beta > 0.0 && f.beta < 1.0))
                     throw Error(ErrorKind::InvalidArgument, "M-Wright factor needs beta in (0,1)");
                   if (f.power == 0.0) throw Error(ErrorKind::InvalidArgument, "factor power must be nonzero");
                 },
             },
             factor);
}

double factor_moment(const Factor& factor, double order) {
  check_factor(factor);
  return std::visit(
      overloaded{
          [order](const GammaFactor& g) {
            const double q = g.power * order;
            if (!(g.shape + q > 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma moment does not exist");
            return std::exp(q * std::log(g.scale) + std::lgamma(g.shape + q) - std::lgamma(g.shape));
          },
          [order](const BetaFactor& f) {
            const double q = f.power * order;
            if (!(f.a + q > 0.0)) throw Error(ErrorKind::InvalidArgument, "beta moment does not exist");
            return std::exp(std::lgamma(f.a + q) + std::lgamma(f.a + f.b) - std::lgamma(f.a) -
                            std::lgamma(f.a + f.b + q));
          },
          [order](const MWrightFactor& f) {
            const double q = f.power * order;
            if (!(q > -1.0)) throw Error(ErrorKind::InvalidArgument, "M-Wright moment does not exist");
            return std::exp(std::lgamma(1.0 + q) - std::lgamma(1.0 + f.beta * q));
          },
      },
      factor);
}

double decomposition_moment(const FactorDecomposition& decomp, double order) {
  double product = 1.0;
  for (const auto& f : decomp.factors) product *= factor_moment(f, order);
  return product;
}

double fhdam_moment_real(const FhdamSpec& spec, double l) {
  const auto& params = spec.params();
  for (const auto& [b, beta] : params.lower) {
    if (!(b + beta * (l + 1.0) > 0.0))
      throw Error(ErrorKind::InvalidArgument, "moment of order " + std::to_string(l) + " does not exist");
  }
  for (const auto& [a, alpha] : params.upper) {
    if (!(a + alpha * (l + 1.0) > 0.0))
      throw Error(ErrorKind::InvalidArgument, "moment formula undefined at order " + std::to_string(l));
  }
  return std::exp(log_mellin_ratio(params, l + 1.0)) / spec.constants().k_norm;
}

double fhdam_moment(const FhdamSpec& spec, int l) {
  if (l < 0) throw Error(ErrorKind::InvalidArgument, "moment order must be >= 0");
  if (l == 0) return 1.0;
  return fhdam_moment_real(spec, static_cast<double>(l));
}

DensityValue density_eval_detailed(const FhdamSpec& spec, double tau) {
  if (spec.is_degenerate()) throw Error(ErrorKind::DegenerateClass, "C0 is a point mass at 1 and has no density");
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "density argument must be > 0");
  const double k = spec.constants().k_norm;
  const auto& params = spec.params();

  if (spec.p() == 0 && spec.m() == 1) {
    const auto [b, beta] = params.lower[0];
    const double log_h = -std::log(beta) + (b / beta) * std::log(tau) - std::pow(tau, 1.0 / beta);
    return {std::exp(log_h) / k, false};
  }
  if (single_pair(spec)) {
    const auto up = params.upper[0];
    const auto low = params.lower[0];
    if (std::abs(up.weight - low.weight) <= kWeightTol * low.weight) {
      const double w = low.weight;
      if (tau > 1.0) return {0.0, false};
      const double x = std::pow(tau, 1.0 / w);
      const double exponent = up.shift - low.shift - 1.0;
      const double tail = (x == 1.0 && exponent == 0.0) ? 1.0 : std::pow(1.0 - x, exponent);
      const double h = (low.shift / w) * std::log(tau);
      return {std::exp(h - std::log(w) - std::lgamma(up.shift - low.shift)) * tail / k, false};
    }
    if (up.weight < low.weight) {
      if (auto v = h11_series(up, low, tau)) return {std::max(*v, 0.0) / k, false};
      return {std::max(mellin_barnes_density(spec, tau), 0.0), false};
    }
  }
  return {mellin_barnes_density(spec, tau), true};
}

double density_eval(const FhdamSpec& spec, double tau) { return density_eval_detailed(spec, tau).value; }

double support_upper(const FhdamSpec& spec) {
  const auto& c = spec.constants();
  if (spec.is_degenerate()) return 1.0;
  if (c.a_star <= kWeightTol) return c.delta_small;
  // Envelope peak is near the bulk; scan outward until it is negligible.
  double peak = 0.0;
  double x = 1e-3;
  for (; x < 1e6; x *= 1.25) {
    const double env = tail_envelope(c, x);
    peak = std::max(peak, env);
    if (peak > 0.0 && env < 1e-16 * peak && x > 1.0) break;
  }
  return x;
}

LaplaceCheck laplace_identity_check(const FhdamSpec& spec, double s) {
  if (!(s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "Laplace argument must be >= 0");
  LaplaceCheck out;
  out.rhs = gwf_eval(spec, -s) / spec.constants().k_norm;
  if (spec.is_degenerate()) {
    out.lhs = std::exp(-s);
    return out;
  }
  const double upper = support_upper(spec);
  auto integrand = [&](double tau) { return tau > 0.0 ? std::exp(-s * tau) * density_eval(spec, tau) : 0.0; };

  // tanh-sinh absorbs algebraic endpoint behaviour (τ^ρ at 0, (1−τ)^k at 1).
  boost::math::quadrature::tanh_sinh<double> ts(12);
  double err = 0.0, l1 = 0.0;
  const double split = std::min(upper, std::max(1.0, 0.25 * upper));
  double lhs = ts.integrate(integrand, 0.0, split, 1e-13, &err, &l1);
  double total_err = err;
  if (upper > split) {
    double err2 = 0.0;
    lhs += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, split, upper, 15, 1e-13,
                                                                          &err2);
    total_err += err2;
  }
  if (!(total_err <= 1e-8 * std::max(std::abs(lhs), 1e-300)) || !std::isfinite(lhs))
    throw Error(ErrorKind::QuadratureNonConvergent,
                "Laplace quadrature error estimate " + std::to_string(total_err) + " too large");
  out.lhs = lhs;
  return out;
}

double sample_one(const FactorDecomposition& decomp, Engine& rng) {
  double log_y = 0.0;
  for (const auto& factor : decomp.factors) {
    std::visit(overloaded{
                   [&](const GammaFactor& g) {
                     std::gamma_distribution<double> gamma(g.shape, g.scale);
                     log_y += g.power * std::log(gamma(rng));
                   },
                   [&](const BetaFactor& f) {
                     std::gamma_distribution<double> ga(f.a, 1.0), gb(f.b, 1.0);
                     const double x = ga(rng);
                     const double y = gb(rng);
                     log_y += f.power * (std::log(x) - std::log(x + y));
                   },
                   [&](const MWrightFactor& f) { log_y += f.power * std::log(mwright(f.beta, rng)); },
               },
               factor);
  }
  return std::exp(log_y);
}

SampleBatch sample(const FactorDecomposition& decomp, std::size_t n, std::uint64_t seed, std::string spec_id) {
  if (n < 1) throw Error(ErrorKind::InvalidArgument, "sample size must be >= 1");
  for (const auto& f : decomp.factors) check_factor(f);
  SampleBatch batch;
  batch.seed = seed;
  batch.spec_id = std::move(spec_id);
  batch.values.resize(n);
  for (std::size_t start = 0; start < n; start += kSampleChunk) {
    Engine rng = make_stream(seed, start / kSampleChunk, rng_domain::kSample);
    const std::size_t stop = std::min(n, start + kSampleChunk);
    for (std::size_t i = start; i < stop; ++i) {
      double y = 0.0;
      do {
        y = sample_one(decomp, rng);
      } while (!(y > 0.0) || !std::isfinite(y));
      batch.values[i] = y;
    }
  }
  return batch;
}

MomentMatchReport verify_decomposition(const FactorDecomposition& decomp, const FhdamSpec& spec, int max_order,
                                       double rel_tol) {
  MomentMatchReport report;
  for (int l = 1; l <= max_order; ++l) {
    const double lhs = decomposition_moment(decomp, l);
    const double rhs = fhdam_moment(spec, l);
    const double rel = std::abs(lhs - rhs) / std::abs(rhs);
    report.orders.push_back(l);
    report.decomposition_moments.push_back(lhs);
    report.spec_moments.push_back(rhs);
    report.relative_errors.push_back(rel);
    if (!(rel < rel_tol) && report.passed) {
      report.passed = false;
      report.first_failing_order = l;
    }
  }
  return report;
}

void require_decomposition(const FactorDecomposition& decomp, const FhdamSpec& spec, int max_order,
                           double rel_tol) {
  const auto report = verify_decomposition(decomp, spec, max_order, rel_tol);
  if (report.passed) return;
  const auto idx = static_cast<std::size_t>(*report.first_failing_order - 1);
  throw Error(ErrorKind::MomentMismatch, "order " + std::to_string(*report.first_failing_order) +
                                             ": decomposition " + std::to_string(report.decomposition_moments[idx]) +
                                             " vs spec " + std::to_string(report.spec_moments[idx]));
}

}  // namespace foxh
