#include "foxh/wright.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

#include "foxh/errors.hpp"
#include "foxh/special.hpp"

namespace foxh {
namespace {

using cplx = std::complex<double>;

constexpr double kPi = std::numbers::pi;
constexpr int kPoleWindow = 64;
constexpr double kCollisionTol = 1e-12;
constexpr double kLogMax = 709.0;

// log ℋ(s) = Σ log Γ(b_j+β_j s) − Σ log Γ(a_i+α_i s) for complex s.
cplx log_mellin_kernel(const WrightParams& params, cplx s) {
  cplx acc = 0.0;
  for (const auto& [b, beta] : params.lower) acc += log_gamma(b + beta * s);
  for (const auto& [a, alpha] : params.upper) acc -= log_gamma(a + alpha * s);
  return acc;
}

bool near(double x, double y) { return std::abs(x - y) <= kCollisionTol * (1.0 + std::abs(x)); }

// Matches every upper weight to a distinct equal lower weight; returns the
// number of unmatched lower entries, or -1 if some upper weight is unmatched.
int unmatched_lower_weights(const WrightParams& params) {
  std::vector<bool> used(params.lower.size(), false);
  for (const auto& up : params.upper) {
    bool found = false;
    for (std::size_t j = 0; j < params.lower.size(); ++j) {
      if (!used[j] && near(params.lower[j].weight, up.weight)) {
        used[j] = true;
        found = true;
        break;
      }
    }
    if (!found) return -1;
  }
  return static_cast<int>(std::count(used.begin(), used.end(), false));
}

// Trapezoidal sum over t ≥ 0 of a conjugate-symmetric integrand f(t), i.e.
// (1/π)∫_0^∞ Re f(t) dt ≈ (h/π)[f(0)/2 + Σ f(kh)].
template <typename F>
double half_line_trapezoid(F&& re_integrand, double h, long n) {
  double sum = 0.5 * re_integrand(0.0);
  for (long k = 1; k <= n; ++k) sum += re_integrand(k * h);
  return sum * h / kPi;
}

// Smallest T beyond which |f(t)| stays below `rel` times its running peak.
template <typename F>
double truncation_point(F&& abs_integrand, double rel, double step, double cap) {
  double peak = abs_integrand(0.0);
  int quiet = 0;
  double t = 0.0;
  while (t < cap) {
    t += step;
    const double v = abs_integrand(t);
    peak = std::max(peak, v);
    if (v < rel * peak) {
      if (++quiet >= 3) return t;
    } else {
      quiet = 0;
    }
  }
  return cap;
}

}  // namespace

std::string_view to_string(ClassTag tag) {
  switch (tag) {
    case ClassTag::C0: return "C0";
    case ClassTag::C1: return "C1";
    case ClassTag::C2: return "C2";
    case ClassTag::C3: return "C3";
    case ClassTag::C4: return "C4";
    case ClassTag::C5: return "C5";
    case ClassTag::C6: return "C6";
    case ClassTag::C7: return "C7";
    case ClassTag::Custom: return "custom";
  }
  return "custom";
}

std::optional<ClassTag> parse_class_tag(std::string_view text) {
  for (ClassTag tag : {ClassTag::C0, ClassTag::C1, ClassTag::C2, ClassTag::C3, ClassTag::C4,
                       ClassTag::C5, ClassTag::C6, ClassTag::C7, ClassTag::Custom}) {
    if (text == to_string(tag)) return tag;
  }
  return std::nullopt;
}

DerivedConstants derive_constants(const WrightParams& params) {
  DerivedConstants c;
  double sum_alpha = 0.0, sum_beta = 0.0, sum_a = 0.0, sum_b = 0.0;
  double log_delta = 0.0, log_k = 0.0;
  for (const auto& [a, alpha] : params.upper) {
    sum_alpha += alpha;
    sum_a += a;
    log_delta -= alpha * std::log(alpha);
    log_k -= std::lgamma(a + alpha);
  }
  c.rho = params.lower.empty() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& [b, beta] : params.lower) {
    sum_beta += beta;
    sum_b += b;
    log_delta += beta * std::log(beta);
    log_k += std::lgamma(b + beta);
    c.rho = std::min(c.rho, b / beta);
  }
  c.a_star = sum_beta - sum_alpha;
  c.delta_cap = c.a_star;
  c.delta_small = std::exp(log_delta);
  const auto p = static_cast<double>(params.upper.size());
  const auto m = static_cast<double>(params.lower.size());
  c.mu = sum_b - sum_a + (p - m) / 2.0;
  c.k_norm = std::exp(log_k);
  return c;
}

ClassTag infer_class(const WrightParams& params) {
  const auto p = params.upper.size();
  const auto m = params.lower.size();
  if (p == 0 && m == 0) return ClassTag::C0;
  if (p == 0) return ClassTag::C1;
  const int unmatched = unmatched_lower_weights(params);
  if (unmatched == 0) return ClassTag::C2;
  if (unmatched > 0) return ClassTag::C3;
  if (p == 1 && m == 1 && params.upper[0].weight < params.lower[0].weight) return ClassTag::C4;
  return ClassTag::Custom;
}

FhdamSpec validate_params(const WrightParams& params, std::optional<ClassTag> class_override) {
  for (const auto& [a, alpha] : params.upper) {
    if (!(alpha > 0.0) || !std::isfinite(alpha) || !std::isfinite(a))
      throw Error(ErrorKind::NonPositiveWeight, "upper weight alpha must be > 0, got " + std::to_string(alpha));
  }
  for (const auto& [b, beta] : params.lower) {
    if (!(beta > 0.0) || !std::isfinite(beta) || !std::isfinite(b))
      throw Error(ErrorKind::NonPositiveWeight, "lower weight beta must be > 0, got " + std::to_string(beta));
  }
  for (const auto& [a, alpha] : params.upper) {
    if (!(a + alpha > 0.0))
      throw Error(ErrorKind::ShiftViolation, "a + alpha must be > 0, got " + std::to_string(a + alpha));
  }
  for (const auto& [b, beta] : params.lower) {
    if (!(b + beta > 0.0))
      throw Error(ErrorKind::ShiftViolation, "b + beta must be > 0, got " + std::to_string(b + beta));
  }

  FhdamSpec spec;
  spec.params_ = params;
  spec.constants_ = derive_constants(params);
  const auto& c = spec.constants_;
  const bool empty = params.upper.empty() && params.lower.empty();

  if (!empty) {
    const bool positive = c.a_star > kCollisionTol;
    const bool boundary = std::abs(c.a_star) <= kCollisionTol && c.mu <= -1.0 + kCollisionTol;
    if (!positive && !boundary)
      throw Error(ErrorKind::AStarViolation, "need a* > 0 or (a* = 0 and mu <= -1); a* = " +
                                                 std::to_string(c.a_star) + ", mu = " + std::to_string(c.mu));
  }

  // Only the poles of ΠΓ(b_j+β_j s) exist for H^{m,0}; they must be simple.
  for (std::size_t j = 0; j < params.lower.size(); ++j) {
    for (std::size_t k = j + 1; k < params.lower.size(); ++k) {
      const auto& [bj, betaj] = params.lower[j];
      const auto& [bk, betak] = params.lower[k];
      for (int l1 = 0; l1 <= kPoleWindow; ++l1) {
        for (int l2 = 0; l2 <= kPoleWindow; ++l2) {
          if (near((bj + l1) / betaj, (bk + l2) / betak))
            throw Error(ErrorKind::PoleCollision,
                        "poles of lower pairs " + std::to_string(j) + " and " + std::to_string(k) +
                            " coincide at s = " + std::to_string(-(bj + l1) / betaj));
        }
      }
    }
  }

  spec.class_tag_ = class_override.value_or(infer_class(params));
  spec.entire_ = empty || c.a_star < 1.0;
  return spec;
}

double gwf_series(const WrightParams& params, double z, const SeriesPolicy& policy, double* max_abs_term) {
  const double log_abs_z = std::log(std::abs(z));
  double scale = -std::numeric_limits<double>::infinity();  // log of the reference magnitude
  double scaled_sum = 0.0;
  double max_log_term = -std::numeric_limits<double>::infinity();
  int quiet = 0;
  for (int k = 0; k < policy.max_terms; ++k) {
    double log_term = -std::lgamma(k + 1.0);
    for (const auto& [b, beta] : params.lower) log_term += std::lgamma(b + beta * (k + 1));
    for (const auto& [a, alpha] : params.upper) log_term -= std::lgamma(a + alpha * (k + 1));
    if (k > 0) log_term += k * log_abs_z;
    const double sign = (z < 0.0 && (k % 2 == 1)) ? -1.0 : 1.0;
    if (z == 0.0 && k > 0) {
      if (max_abs_term) *max_abs_term = std::exp(max_log_term);
      return scaled_sum * std::exp(scale);
    }
    max_log_term = std::max(max_log_term, log_term);
    if (log_term > scale) {
      scaled_sum *= std::exp(scale - log_term);
      scale = log_term;
    }
    const double term = sign * std::exp(log_term - scale);
    scaled_sum += term;
    const double tol = policy.abs_tol * std::exp(-scale) + policy.rel_tol * std::abs(scaled_sum);
    if (std::abs(term) < tol) {
      if (++quiet >= 3) {
        if (max_abs_term) *max_abs_term = std::exp(max_log_term);
        if (scaled_sum == 0.0) return 0.0;
        const double log_result = scale + std::log(std::abs(scaled_sum));
        if (log_result > kLogMax) throw Error(ErrorKind::Overflow, "gWf value exceeds double range");
        return scaled_sum * std::exp(scale);
      }
    } else {
      quiet = 0;
    }
    if (!std::isfinite(log_term)) throw Error(ErrorKind::Overflow, "non-finite series term");
  }
  throw Error(ErrorKind::NoConvergence,
              "gWf series did not converge in " + std::to_string(policy.max_terms) + " terms at z = " +
                  std::to_string(z));
}

double gwf_negative_mellin_barnes(const WrightParams& params, double s) {
  if (!(s > 0.0)) throw Error(ErrorKind::InvalidArgument, "Mellin-Barnes continuation needs s > 0");
  // Contour between the poles of Γ(u) (u ≤ 0) and of Γ(B_j − β_j u) (u ≥ B_j/β_j).
  double right = std::numeric_limits<double>::infinity();
  for (const auto& [b, beta] : params.lower) right = std::min(right, (b + beta) / beta);
  if (!std::isfinite(right)) right = 2.0;
  const double c = 0.5 * right;
  const double dist = std::min(c, right - c);
  const double log_s = std::log(s);

  auto log_f = [&](double t) {
    const cplx u(c, t);
    cplx acc = log_gamma(u) - u * log_s;
    for (const auto& [b, beta] : params.lower) acc += log_gamma(b + beta - beta * u);
    for (const auto& [a, alpha] : params.upper) acc -= log_gamma(a + alpha - alpha * u);
    return acc;
  };
  const double ref = log_f(0.0).real();
  auto abs_f = [&](double t) { return std::exp(log_f(t).real() - ref); };
  auto re_f = [&](double t) { return std::exp(log_f(t) - ref).real(); };

  const double h = dist / 6.0;
  const double t_max = truncation_point(abs_f, 1e-18, 1.0, 4000.0);
  const long n = static_cast<long>(std::ceil(t_max / h));
  return half_line_trapezoid(re_f, h, n) * std::exp(ref);
}

double gwf_eval(const WrightParams& params, double z, const SeriesPolicy& policy) {
  if (params.upper.empty() && params.lower.empty()) return std::exp(z);
  if (z >= 0.0) return gwf_series(params, z, policy);

  const DerivedConstants c = derive_constants(params);
  bool series_ok = c.a_star < 1.0 || (c.a_star == 1.0 && std::abs(z) < 0.9 / c.delta_small);
  if (series_ok) {
    try {
      double max_term = 0.0;
      const double value = gwf_series(params, z, policy, &max_term);
      if (max_term <= 1e4 * std::abs(value)) return value;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoConvergence && e.kind() != ErrorKind::Overflow) throw;
    }
  }
  return gwf_negative_mellin_barnes(params, -z);
}

double gwf_eval(const FhdamSpec& spec, double z, const SeriesPolicy& policy) {
  return gwf_eval(spec.params(), z, policy);
}

WrightParams gwf_derivative_params(const WrightParams& params) {
  WrightParams shifted = params;
  for (auto& [a, alpha] : shifted.upper) a += alpha;
  for (auto& [b, beta] : shifted.lower) b += beta;
  return shifted;
}

WrightParams gwf_derivative_params(const FhdamSpec& spec) { return gwf_derivative_params(spec.params()); }

double rightmost_pole(const WrightParams& params) {
  double pole = -std::numeric_limits<double>::infinity();
  for (const auto& [b, beta] : params.lower) pole = std::max(pole, -b / beta);
  return pole;
}

double log_mellin_ratio(const WrightParams& params, double s) {
  double acc = 0.0;
  for (const auto& [b, beta] : params.lower) acc += std::lgamma(b + beta * s);
  for (const auto& [a, alpha] : params.upper) acc -= std::lgamma(a + alpha * s);
  return acc;
}

double tail_envelope(const DerivedConstants& c, double x) {
  if (!(c.delta_cap > 0.0)) throw Error(ErrorKind::InvalidArgument, "tail envelope needs Delta > 0");
  const double d = c.delta_cap;
  return std::pow(x, (c.mu + 0.5) / d) * std::exp(-d * std::pow(c.delta_small, -1.0 / d) * std::pow(x, 1.0 / d));
}

double saddle_contour(const WrightParams& params, double tau) {
  const double pole = rightmost_pole(params);
  const double lo = pole + 0.1;
  const double log_tau = std::log(tau);
  auto slope = [&](double g) {
    double acc = -log_tau;
    for (const auto& [b, beta] : params.lower) acc += beta * boost::math::digamma(b + beta * g);
    for (const auto& [a, alpha] : params.upper) acc -= alpha * boost::math::digamma(a + alpha * g);
    return acc;
  };
  if (slope(lo) >= 0.0) return lo;
  double hi = lo + 1.0;
  while (slope(hi) < 0.0) {
    hi = lo + 2.0 * (hi - lo);
    if (hi - lo > 1e4) return lo + 0.5;  // no saddle (a* = 0 and τ below δ)
  }
  double left = lo;
  for (int it = 0; it < 200 && hi - left > 1e-10 * (1.0 + std::abs(hi)); ++it) {
    const double mid = 0.5 * (left + hi);
    (slope(mid) < 0.0 ? left : hi) = mid;
  }
  return 0.5 * (left + hi);
}

namespace {

struct ContourIntegrand {
  const WrightParams& params;
  double gamma;
  double log_tau;
  double ref;

  cplx log_value(double t) const {
    const cplx s(gamma, t);
    return log_mellin_kernel(params, s) - s * log_tau;
  }
  double abs_value(double t) const { return std::exp(log_value(t).real() - ref); }
  double re_value(double t) const { return std::exp(log_value(t) - ref).real(); }
};

constexpr double kMbTruncation = 1e-16;
constexpr double kMbAlgebraicCap = 2e4;

double check_contour(const FhdamSpec& spec, double tau, double gamma_line) {
  if (!(tau > 0.0)) throw Error(ErrorKind::InvalidArgument, "density argument must be > 0");
  if (spec.is_degenerate()) throw Error(ErrorKind::DegenerateClass, "C0 has no density");
  if (spec.constants().a_star < -kCollisionTol)
    throw Error(ErrorKind::InvalidArgument, "Mellin-Barnes oracle needs a* >= 0");
  const double dist = gamma_line - rightmost_pole(spec.params());
  if (dist < 1e-6)
    throw Error(ErrorKind::ContourTooClose,
                "contour Re s = " + std::to_string(gamma_line) + " within 1e-6 of (or left of) a pole");
  return dist;
}

}  // namespace

double mellin_barnes_density(const FhdamSpec& spec, double tau, double gamma_line, int n_nodes) {
  check_contour(spec, tau, gamma_line);
  if (n_nodes < 2) throw Error(ErrorKind::InvalidArgument, "need at least 2 quadrature nodes");
  ContourIntegrand f{spec.params(), gamma_line, std::log(tau), 0.0};
  f.ref = f.log_value(0.0).real();
  const double cap = spec.constants().a_star > kCollisionTol ? 1e4 : kMbAlgebraicCap;
  const double t_max =
      truncation_point([&](double t) { return f.abs_value(t); }, kMbTruncation, 1.0, cap);
  const double h = t_max / n_nodes;
  const double raw = half_line_trapezoid([&](double t) { return f.re_value(t); }, h, n_nodes);
  return raw * std::exp(f.ref) / spec.constants().k_norm;
}

double mellin_barnes_density(const FhdamSpec& spec, double tau) {
  const double gamma_line = saddle_contour(spec.params(), tau);
  const double dist = check_contour(spec, tau, gamma_line);
  ContourIntegrand f{spec.params(), gamma_line, std::log(tau), 0.0};
  f.ref = f.log_value(0.0).real();
  const double cap = spec.constants().a_star > kCollisionTol ? 1e4 : kMbAlgebraicCap;
  const double t_max =
      truncation_point([&](double t) { return f.abs_value(t); }, kMbTruncation, 1.0, cap);

  long n = std::max<long>(16, static_cast<long>(std::ceil(4.0 * t_max / dist)));
  double h = t_max / n;
  double sum = 0.5 * f.re_value(0.0);
  double abs_sum = std::abs(sum);
  for (long k = 1; k <= n; ++k) {
    const double v = f.re_value(k * h);
    sum += v;
    abs_sum += std::abs(v);
  }
  double estimate = sum * h;
  constexpr long kMaxNodes = 1L << 23;
  while (n < kMaxNodes) {
    // Halve the step, reusing the existing nodes.
    double odd = 0.0;
    for (long k = 0; k < n; ++k) {
      const double v = f.re_value((2 * k + 1) * h / 2.0);
      odd += v;
      abs_sum += std::abs(v);
    }
    sum += odd;
    n *= 2;
    h /= 2.0;
    const double refined = sum * h;
    const double scale = std::max(std::abs(refined), 1e-2 * abs_sum * h);
    if (std::abs(refined - estimate) <= 1e-11 * scale) {
      return refined / kPi * std::exp(f.ref) / spec.constants().k_norm;
    }
    estimate = refined;
  }
  throw Error(ErrorKind::QuadratureNonConvergent,
              "Mellin-Barnes trapezoid did not settle at tau = " + std::to_string(tau));
}

}  // namespace foxh
