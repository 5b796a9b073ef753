#include "foxh/gfhp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "foxh/errors.hpp"
#include "foxh/special.hpp"

namespace foxh {
namespace {

constexpr double kScanFloor = 1e-16;
constexpr double kScanLow = -140.0;  // log τ where the mixture scan starts
constexpr int kScanCells = 96;
constexpr double kMixtureRelTol = 1e-6;

const GaussLegendreRule& cached_rule(int n) {
  thread_local std::map<int, GaussLegendreRule> rules;
  auto it = rules.find(n);
  if (it == rules.end()) it = rules.emplace(n, gauss_legendre(n)).first;
  return it->second;
}

void check_times(std::span<const double> times) {
  if (times.empty()) throw Error(ErrorKind::InvalidArgument, "at least one time point required");
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!(times[i] > 0.0) || !std::isfinite(times[i]))
      throw Error(ErrorKind::InvalidArgument, "time points must be positive");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw Error(ErrorKind::InvalidArgument, "time points must be strictly increasing");
  }
}

double quadratic_form(const CovMatrix& cov, std::span<const double> lambda) {
  double q = 0.0;
  for (std::size_t l = 0; l < cov.size(); ++l)
    for (std::size_t k = 0; k < cov.size(); ++k) q += lambda[l] * cov(l, k) * lambda[k];
  return q;
}

void scale_fill(const GfhpConfig& config, const std::vector<double>& ys, TrajectorySet& out, const SimOptions& options) {
  out = fbm_paths(config.hurst, out.grid, ys.size(), out.seed, options.generator,
                  {.cholesky_cap = options.cholesky_cap, .threads = options.threads});
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double r = std::sqrt(ys[i]);
    for (double& v : out.path(i)) v *= r;
  }
}

// Off-grid fBm values by Gaussian conditioning on the nearest grid values
// (plus residual noise), so the one-point law at the new time is exact.
class FbmInterpolator {
 public:
  static constexpr int kHalfWindow = 4;

  FbmInterpolator(double hurst, double spacing, int n_grid) : hurst_(hurst), spacing_(spacing), n_grid_(n_grid) {}

  double operator()(std::span<const double> path, double t, Engine& rng) const {
    const double pos = t / spacing_;
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-12 * std::max(1.0, pos)) return path[static_cast<std::size_t>(nearest)];
    const int base = static_cast<int>(pos);
    const int width = std::min(2 * kHalfWindow, n_grid_);
    const int first = std::clamp(base - kHalfWindow + 1, 1, n_grid_ - width + 1);

    Eigen::MatrixXd cov(width, width);
    Eigen::VectorXd cross(width), values(width);
    for (int a = 0; a < width; ++a) {
      const double ta = (first + a) * spacing_;
      cross[a] = fbm_covariance(hurst_, t, ta);
      values[a] = path[first + a];
      for (int c = 0; c < width; ++c) cov(a, c) = fbm_covariance(hurst_, ta, (first + c) * spacing_);
    }
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
    const Eigen::VectorXd w = ldlt.solve(cross);
    const double resid = std::max(0.0, std::pow(t, 2.0 * hurst_) - w.dot(cross));
    std::normal_distribution<double> normal;
    return w.dot(values) + std::sqrt(resid) * normal(rng);
  }

 private:
  double hurst_;
  double spacing_;
  int n_grid_;
};

void time_change_fill(const GfhpConfig& config, const std::vector<double>& ys, TrajectorySet& out,
                      const SimOptions& options) {
  const double h = config.hurst;
  const TimeGrid grid = out.grid;
  const std::size_t n = ys.size();
  const std::size_t batch = std::max<std::size_t>(options.batch_size, 1);
  std::vector<double> stretch(n);
  for (std::size_t i = 0; i < n; ++i) stretch[i] = std::pow(ys[i], 1.0 / (2.0 * h));

  for (std::size_t start = 0, b = 0; start < n; start += batch, ++b) {
    const std::size_t stop = std::min(n, start + batch);
    std::vector<double> s(stretch.begin() + start, stretch.begin() + stop);
    const double s_max = *std::max_element(s.begin(), s.end());
    std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
    const double spacing = grid.dt() * std::min(1.0, s[s.size() / 2]);
    const double cover = grid.t_max * s_max;
    const double steps = std::max(std::ceil(cover / spacing), static_cast<double>(grid.n_steps));
    if (steps > static_cast<double>(options.max_covering_steps))
      throw Error(ErrorKind::GridTooLarge, "time-change covering grid needs " + std::to_string(steps) + " steps");
    const int n_fine = static_cast<int>(steps);
    const TimeGrid fine{spacing * n_fine, n_fine};

    Engine rng = make_stream(out.seed, b, rng_domain::kTimeChange);
    const auto fbm = fbm_paths(h, fine, stop - start, rng(), options.generator,
                               {.cholesky_cap = options.cholesky_cap, .threads = options.threads});
    const FbmInterpolator interp(h, spacing, n_fine);
    for (std::size_t i = start; i < stop; ++i) {
      const auto src = fbm.path(i - start);
      auto dst = out.path(i);
      for (int k = 0; k <= grid.n_steps; ++k) dst[k] = interp(src, grid.time(k) * stretch[i], rng);
    }
  }
}

}  // namespace

GfhpConfig make_config(const FhdamSpec& spec, FactorDecomposition decomp, double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw Error(ErrorKind::InvalidArgument, "Hurst index must lie in (0,1)");
  for (const auto& f : decomp.factors) check_factor(f);
  require_decomposition(decomp, spec);
  return GfhpConfig{spec, std::move(decomp), hurst};
}

CovMatrix make_cov_matrix(double hurst, std::span<const double> times) {
  check_times(times);
  CovMatrix cov;
  cov.times.assign(times.begin(), times.end());
  const std::size_t n = times.size();
  cov.entries.resize(n * n);
  for (std::size_t l = 0; l < n; ++l)
    for (std::size_t k = 0; k < n; ++k) cov.entries[l * n + k] = fbm_covariance(hurst, times[l], times[k]);
  return cov;
}

std::string_view to_string(SimMode mode) { return mode == SimMode::Scale ? "scale" : "time_change"; }

std::optional<SimMode> parse_sim_mode(std::string_view text) {
  if (text == "scale") return SimMode::Scale;
  if (text == "time_change") return SimMode::TimeChange;
  return std::nullopt;
}

TrajectorySet simulate(const GfhpConfig& config, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                       SimMode mode, const SimOptions& options) {
  make_grid(grid.t_max, grid.n_steps);
  if (n_paths < 1) throw Error(ErrorKind::InvalidArgument, "n_paths must be >= 1");
  const std::vector<double> ys = sample(config.decomp, n_paths, seed).values;

  TrajectorySet out;
  out.grid = grid;
  out.n_paths = n_paths;
  out.hurst = config.hurst;
  out.seed = seed;
  out.generator = options.generator;
  if (mode == SimMode::Scale) {
    scale_fill(config, ys, out, options);
  } else {
    out.values.assign(n_paths * out.row_size(), 0.0);
    time_change_fill(config, ys, out, options);
  }
  out.seed = seed;
  return out;
}

double char_fn(const GfhpConfig& config, std::span<const double> times, std::span<const double> lambda) {
  if (times.size() != lambda.size()) throw Error(ErrorKind::InvalidArgument, "times and lambda differ in length");
  const CovMatrix cov = make_cov_matrix(config.hurst, times);
  const double q = quadratic_form(cov, lambda);
  if (q == 0.0) return 1.0;
  return gwf_eval(config.spec, -0.5 * q) / config.spec.constants().k_norm;
}

double increment_chf(const GfhpConfig& config, double t, double s, double lambda) {
  if (!(t >= 0.0 && s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "times must be >= 0");
  const double q = lambda * lambda * std::pow(std::abs(t - s), 2.0 * config.hurst);
  if (q == 0.0) return 1.0;
  return gwf_eval(config.spec, -0.5 * q) / config.spec.constants().k_norm;
}

double joint_density(const GfhpConfig& config, std::span<const double> times, std::span<const double> x,
                     int quad_nodes) {
  if (times.size() != x.size()) throw Error(ErrorKind::InvalidArgument, "times and x differ in length");
  if (quad_nodes < 8) throw Error(ErrorKind::InvalidArgument, "quad_nodes must be >= 8");
  for (std::size_t i = 1; i < times.size(); ++i)
    if (times[i] == times[i - 1]) throw Error(ErrorKind::SingularCovariance, "repeated time point");
  const CovMatrix cov = make_cov_matrix(config.hurst, times);
  const auto n = static_cast<Eigen::Index>(cov.size());
  const Eigen::Map<const Eigen::MatrixXd> sigma(cov.entries.data(), n, n);
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) throw Error(ErrorKind::SingularCovariance, "covariance matrix is singular");
  const Eigen::MatrixXd lower = llt.matrixL();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_det += 2.0 * std::log(lower(i, i));
  if (!std::isfinite(log_det) || lower.diagonal().minCoeff() < 1e-12 * lower.diagonal().maxCoeff())
    throw Error(ErrorKind::SingularCovariance, "covariance matrix is numerically singular");
  const Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x.data(), n);
  const double q = llt.matrixL().solve(xv).squaredNorm();
  const double dim = static_cast<double>(n);
  const double log_gauss = -0.5 * dim * std::log(2.0 * std::numbers::pi) - 0.5 * log_det;

  if (config.spec.is_degenerate()) return std::exp(log_gauss - 0.5 * q);

  // τ-integrand on the log axis, including the Jacobian τ.
  auto g = [&](double u) {
    const double tau = std::exp(u);
    const double log_factor = log_gauss + (1.0 - 0.5 * dim) * u - 0.5 * q / tau;
    if (log_factor < -745.0) return 0.0;
    const double rho = density_eval(config.spec, tau);
    if (rho <= 0.0) return 0.0;
    return std::exp(log_factor) * rho;
  };

  const double u_max = std::log(support_upper(config.spec));
  const double cell = (u_max - kScanLow) / kScanCells;
  std::vector<double> scan(kScanCells);
  double peak = 0.0;
  for (int j = 0; j < kScanCells; ++j) {
    scan[j] = g(kScanLow + (j + 0.5) * cell);
    peak = std::max(peak, scan[j]);
  }
  if (!(peak > 0.0)) return 0.0;
  int first = 0, last = kScanCells - 1;
  while (scan[first] <= kScanFloor * peak) ++first;
  while (scan[last] <= kScanFloor * peak) --last;
  if (first == 0)
    throw Error(ErrorKind::QuadratureNonConvergent,
                "mixture integrand does not decay as tau -> 0 (density is infinite at this point)");
  const double lo = kScanLow + (first - 1) * cell;
  const double hi = std::min(u_max, kScanLow + (last + 2) * cell);

  auto integrate = [&](int nodes) {
    const GaussLegendreRule& rule = cached_rule(nodes);
    const double half = 0.5 * (hi - lo), mid = 0.5 * (hi + lo);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * g(mid + half * rule.nodes[i]);
    return acc * half;
  };
  const double fine = integrate(quad_nodes);
  const double coarse = integrate(quad_nodes / 2);
  if (std::abs(fine - coarse) > kMixtureRelTol * std::abs(fine))
    throw Error(ErrorKind::QuadratureNonConvergent, "mixture quadrature did not settle: " + std::to_string(fine) +
                                                        " vs " + std::to_string(coarse) + " with half the nodes");
  return fine;
}

double analytic_moment(const GfhpConfig& config, double t, int order) {
  if (order < 0) throw Error(ErrorKind::InvalidArgument, "moment order must be >= 0");
  if (!(t >= 0.0)) throw Error(ErrorKind::InvalidArgument, "t must be >= 0");
  if (order % 2 == 1) return 0.0;
  const int n = order / 2;
  double gaussian = 1.0;  // (2n−1)!!
  for (int k = 2 * n - 1; k > 1; k -= 2) gaussian *= k;
  return fhdam_moment(config.spec, n) * gaussian * std::pow(t, 2.0 * n * config.hurst);
}

double covariance(const GfhpConfig& config, double t, double s) {
  if (!(t >= 0.0 && s >= 0.0)) throw Error(ErrorKind::InvalidArgument, "times must be >= 0");
  return fhdam_moment(config.spec, 1) * fbm_covariance(config.hurst, t, s);
}

}  // namespace foxh
