#include "foxh/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "foxh/random.hpp"

namespace foxh {
namespace {

constexpr std::uint32_t kSelfSimDomain = 0x53534d54;  // "SSMT"

struct Fit {
  double slope = 0.0;
  double intercept = 0.0;
};

Fit least_squares(std::span<const double> x, std::span<const double> y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double log_log_slope(std::span<const double> lags, std::span<const double> values) {
  std::vector<double> lx(lags.size()), ly(values.size());
  for (std::size_t i = 0; i < lags.size(); ++i) {
    lx[i] = std::log(lags[i]);
    ly[i] = std::log(values[i]);
  }
  return least_squares(lx, ly).slope;
}

std::vector<int> lag_steps(const TimeGrid& grid, std::span<const double> lags) {
  std::vector<int> steps;
  for (double lag : lags) {
    const double units = lag / grid.dt();
    const long k = std::lround(units);
    if (!(lag > 0.0) || k < 1 || k > grid.n_steps || std::abs(units - k) > 1e-9 * units)
      throw Error(ErrorKind::InvalidArgument, "lag " + std::to_string(lag) + " is not a positive multiple of dt within the grid");
    steps.push_back(static_cast<int>(k));
  }
  return steps;
}

}  // namespace

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form converges fast for small λ.
    const double pi = std::numbers::pi;
    const double c = -pi * pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1; k <= 6; ++k) sum += std::exp(c * (2 * k - 1) * (2 * k - 1));
    return std::clamp(1.0 - std::sqrt(2.0 * pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorKind::InvalidArgument, "KS test needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(i / n - j / m));
  }
  const double en = std::sqrt(n * m / (n + m));
  return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

std::string_view to_string(Diffusion d) {
  switch (d) {
    case Diffusion::Sub: return "sub";
    case Diffusion::Normal: return "normal";
    case Diffusion::Super: return "super";
  }
  return "normal";
}

std::vector<double> dyadic_lags(const TimeGrid& grid) {
  std::vector<double> lags;
  for (long k = 1; 2 * k <= grid.n_steps; k *= 2) lags.push_back(k * grid.dt());
  return lags;
}

MsdReport msd(const TrajectorySet& trajs, std::span<const double> lags, int n_batches) {
  const std::vector<int> steps = lag_steps(trajs.grid, lags);
  std::vector<int> distinct = steps;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) throw Error(ErrorKind::InsufficientLags, "msd needs at least 3 distinct lags");

  const std::size_t n_paths = trajs.n_paths;
  const std::size_t batches = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(n_batches, 1)), 1, n_paths);
  // sums[b][l]: squared displacement totals of batch b at lag l
  std::vector<std::vector<double>> sums(batches, std::vector<double>(steps.size(), 0.0));
  std::vector<double> counts(batches, 0.0);
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t begin = n_paths * b / batches, end = n_paths * (b + 1) / batches;
    counts[b] = static_cast<double>(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      const auto path = trajs.path(i);
      for (std::size_t l = 0; l < steps.size(); ++l) {
        const int lag = steps[l];
        double acc = 0.0;
        for (int k = 0; k + lag <= trajs.grid.n_steps; ++k) {
          const double d = path[k + lag] - path[k];
          acc += d * d;
        }
        sums[b][l] += acc / (trajs.grid.n_steps - lag + 1);
      }
    }
  }

  MsdReport report;
  report.lags.assign(lags.begin(), lags.end());
  report.msd.assign(steps.size(), 0.0);
  for (std::size_t b = 0; b < batches; ++b)
    for (std::size_t l = 0; l < steps.size(); ++l) report.msd[l] += sums[b][l];
  for (double& v : report.msd) v /= static_cast<double>(n_paths);
  report.slope = log_log_slope(report.lags, report.msd);

  if (batches >= 2) {
    std::vector<double> slopes;
    for (std::size_t b = 0; b < batches; ++b) {
      std::vector<double> m(steps.size());
      for (std::size_t l = 0; l < steps.size(); ++l) m[l] = sums[b][l] / counts[b];
      slopes.push_back(log_log_slope(report.lags, m));
    }
    const double nb = static_cast<double>(batches);
    const double mean = std::accumulate(slopes.begin(), slopes.end(), 0.0) / nb;
    double var = 0.0;
    for (double s : slopes) var += (s - mean) * (s - mean);
    var /= nb - 1.0;
    const boost::math::students_t dist(nb - 1.0);
    const double half = boost::math::quantile(dist, 0.975) * std::sqrt(var / nb);
    report.slope_ci = {report.slope - half, report.slope + half};
  } else {
    report.slope_ci = {report.slope, report.slope};
  }
  if (report.slope_ci.second < 1.0)
    report.classification = Diffusion::Sub;
  else if (report.slope_ci.first > 1.0)
    report.classification = Diffusion::Super;
  else
    report.classification = Diffusion::Normal;
  return report;
}

std::vector<double> uniform_edges(double lo, double hi, int n_bins) {
  if (!(hi > lo) || n_bins < 1) throw Error(ErrorKind::InvalidArgument, "edges need hi > lo and n_bins >= 1");
  std::vector<double> edges(static_cast<std::size_t>(n_bins) + 1);
  for (int j = 0; j <= n_bins; ++j) edges[j] = lo + (hi - lo) * j / n_bins;
  edges.back() = hi;
  return edges;
}

LocalTimeEstimate local_time(std::span<const double> path, const TimeGrid& grid, std::pair<double, double> interval,
                             std::span<const double> x_bins) {
  const auto [a, b] = interval;
  if (!(b > a)) throw Error(ErrorKind::EmptyInterval, "local time interval is empty");
  if (a < 0.0 || b > grid.t_max * (1.0 + 1e-12))
    throw Error(ErrorKind::InvalidArgument, "local time interval must lie inside the time grid");
  if (path.size() != static_cast<std::size_t>(grid.n_steps) + 1)
    throw Error(ErrorKind::InvalidArgument, "path length does not match the grid");
  if (x_bins.size() < 3) throw Error(ErrorKind::InvalidArgument, "local time needs at least 2 bins");
  for (std::size_t j = 1; j < x_bins.size(); ++j)
    if (!(x_bins[j] > x_bins[j - 1])) throw Error(ErrorKind::InvalidArgument, "bin edges must increase");

  const std::size_t n_bins = x_bins.size() - 1;
  std::vector<double> time(n_bins, 0.0);
  double outside = 0.0;
  const double first = x_bins.front(), last = x_bins.back();

  for (int k = 0; k < grid.n_steps; ++k) {
    const double t0 = grid.time(k), t1 = grid.time(k + 1);
    const double s0 = std::max(a, t0), s1 = std::min(b, t1);
    if (!(s1 > s0)) continue;
    const double slope = (path[k + 1] - path[k]) / (t1 - t0);
    const double y0 = path[k] + slope * (s0 - t0);
    const double y1 = path[k] + slope * (s1 - t0);
    const double dur = s1 - s0;
    if (y0 == y1) {
      if (y0 < first || y0 >= last) {
        outside += dur;
      } else {
        const auto it = std::upper_bound(x_bins.begin(), x_bins.end(), y0);
        time[static_cast<std::size_t>(it - x_bins.begin()) - 1] += dur;
      }
      continue;
    }
    const double lo = std::min(y0, y1), hi = std::max(y0, y1);
    const double rate = dur / (hi - lo);
    outside += rate * (std::max(0.0, std::min(hi, first) - lo) + std::max(0.0, hi - std::max(lo, last)));
    if (hi <= first || lo >= last) continue;
    auto j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(
        std::upper_bound(x_bins.begin(), x_bins.end(), lo) - x_bins.begin() - 1, 0));
    for (; j < n_bins && x_bins[j] < hi; ++j) {
      const double overlap = std::min(hi, x_bins[j + 1]) - std::max(lo, x_bins[j]);
      if (overlap > 0.0) time[j] += rate * overlap;
    }
  }

  LocalTimeEstimate est;
  est.x_bins.assign(x_bins.begin(), x_bins.end());
  est.values.resize(n_bins);
  est.interval = interval;
  est.outside_time = outside;
  for (std::size_t j = 0; j < n_bins; ++j) {
    const double width = x_bins[j + 1] - x_bins[j];
    est.values[j] = time[j] / width;
    est.mass += est.values[j] * width;
  }
  return est;
}

double berman_time_integral(double hurst) {
  if (hurst >= 1.0 - 1e-9) return INFINITY;
  return 2.0 / ((2.0 - hurst) * (1.0 - hurst));
}

BermanReport berman_check(const GfhpConfig& config) {
  BermanReport report;
  report.time_integral = berman_time_integral(config.hurst);
  const auto& params = config.spec.params();
  for (const auto& [b, beta] : params.lower)
    if (!(2.0 * b + beta > 0.0)) report.condition_holds = false;
  if (!report.condition_holds) {
    report.issue = ErrorKind::ParameterConditionFailed;
    report.mellin_half = report.mellin_half_analytic = NAN;
    report.finite = false;
    return report;
  }
  report.mellin_half_analytic = std::exp(log_mellin_ratio(params, 0.5));
  if (config.spec.is_degenerate()) {
    report.mellin_half = 1.0;
  } else {
    try {
      const double k = config.spec.constants().k_norm;
      const double upper = support_upper(config.spec);
      auto f = [&](double r) { return density_eval(config.spec, r) / std::sqrt(r); };
      boost::math::quadrature::tanh_sinh<double> ts;
      const double split = std::min(1.0, upper);
      double integral = ts.integrate(f, 0.0, split, 1e-12);
      if (upper > split) integral += ts.integrate(f, split, upper, 1e-12);
      report.mellin_half = k * integral;
    } catch (const Error& e) {
      report.issue = e.kind();
      report.mellin_half = NAN;
    }
  }
  report.finite = std::isfinite(report.mellin_half) && std::isfinite(report.time_integral);
  return report;
}

std::vector<QvRow> quadratic_variation_scan(const TrajectorySet& trajs, std::span<const int> partitions) {
  std::vector<QvRow> rows;
  const int steps = trajs.grid.n_steps;
  for (int n : partitions) {
    if (n < 1 || n > steps || steps % n != 0)
      throw Error(ErrorKind::InvalidArgument, "partition size " + std::to_string(n) + " must divide n_steps");
    const int stride = steps / n;
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < trajs.n_paths; ++i) {
      const auto path = trajs.path(i);
      double qv = 0.0;
      for (int k = 0; k < steps; k += stride) {
        const double d = path[k + stride] - path[k];
        qv += d * d;
      }
      sum += qv;
      sum_sq += qv * qv;
    }
    const double np = static_cast<double>(trajs.n_paths);
    const double mean = sum / np;
    const double var = np > 1 ? (sum_sq - np * mean * mean) / (np - 1.0) : 0.0;
    rows.push_back({n, mean, std::sqrt(std::max(var, 0.0) / np)});
  }
  return rows;
}

SelfSimilarityResult self_similarity_test(const GfhpConfig& config, double c, double t, std::size_t n,
                                          std::uint64_t seed, std::optional<double> exponent,
                                          const SimOptions& options) {
  if (!(c > 0.0) || !(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "self-similarity test needs c > 0, t > 0");
  const double h = exponent.value_or(config.hurst);
  const std::uint64_t seed_base = make_stream(seed, 0, kSelfSimDomain)();
  const std::uint64_t seed_scaled = make_stream(seed, 1, kSelfSimDomain)();
  const auto base = simulate(config, make_grid(t, 1), n, seed_base, SimMode::Scale, options);
  const auto scaled = simulate(config, make_grid(c * t, 1), n, seed_scaled, SimMode::Scale, options);
  std::vector<double> x(n), y(n);
  const double factor = std::pow(c, -h);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = base.at(i, 1);
    y[i] = factor * scaled.at(i, 1);
  }
  return {ks_two_sample(x, y), h};
}

}  // namespace foxh
