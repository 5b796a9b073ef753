#include "foxh/fbm.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <mutex>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <fftw3.h>

#include "foxh/errors.hpp"
#include "foxh/parallel.hpp"
#include "foxh/random.hpp"

namespace foxh {
namespace {

constexpr double kEigenFloor = -1e-10;
constexpr double kQuadTol = 1e-13;

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwBuffer {
  fftw_complex* data;
  explicit FftwBuffer(std::size_t n) : data(fftw_alloc_complex(n)) {
    if (!data) throw std::bad_alloc();
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

// Owns an FFTW plan; creation and destruction are serialized because the
// planner is not thread-safe. Execution on other buffers is.
class FftPlan {
 public:
  FftPlan(int n, fftw_complex* in, fftw_complex* out) {
    std::lock_guard lock(fftw_planner_mutex());
    plan_ = fftw_plan_dft_1d(n, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  }
  ~FftPlan() {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;
  void run(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan_, in, out); }

 private:
  fftw_plan plan_;
};

// (t+y)^p − y^p without cancellation for y ≫ t.
double power_gap(double t, double y, double p) {
  if (y > t) return std::pow(y, p) * std::expm1(p * std::log1p(t / y));
  return std::pow(t + y, p) - std::pow(y, p);
}

double positive_part_pow(double u, double p) {
  if (u > 0.0) return std::pow(u, p);
  if (u < 0.0) return 0.0;
  if (p > 0.0) return 0.0;
  return p == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
}

void cumulate(std::span<double> row, const double* increments, double scale) {
  row[0] = 0.0;
  double acc = 0.0;
  for (std::size_t j = 1; j < row.size(); ++j) {
    acc += scale * increments[j - 1];
    row[j] = acc;
  }
}

void check_hurst(double hurst) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw Error(ErrorKind::InvalidArgument, "Hurst index must lie in (0,1)");
}

void circulant_fill(TrajectorySet& out, const FbmOptions& options) {
  const int n = out.grid.n_steps;
  const int size = 2 * n;
  const std::vector<double> lambda = circulant_eigenvalues(out.hurst, n);
  std::vector<double> amplitude(lambda.size());
  for (std::size_t k = 0; k < lambda.size(); ++k) amplitude[k] = std::sqrt(lambda[k] / size);

  FftwBuffer plan_in(size), plan_out(size);
  const FftPlan plan(size, plan_in.data, plan_out.data);
  const double scale = std::pow(out.grid.dt(), out.hurst);

  parallel_blocks(out.n_paths, options.threads, [&](std::size_t begin, std::size_t end) {
    FftwBuffer in(size), res(size);
    std::vector<double> incr(n);
    std::normal_distribution<double> normal;
    for (std::size_t i = begin; i < end; ++i) {
      Engine rng = make_stream(out.seed, i, rng_domain::kGaussian);
      for (int k = 0; k < size; ++k) {
        const double re = normal(rng);
        const double im = normal(rng);
        in.data[k][0] = amplitude[k] * re;
        in.data[k][1] = amplitude[k] * im;
      }
      plan.run(in.data, res.data);
      for (int j = 0; j < n; ++j) incr[j] = res.data[j][0];
      cumulate(out.path(i), incr.data(), scale);
    }
  });
}

void cholesky_fill(TrajectorySet& out, const FbmOptions& options) {
  const int n = out.grid.n_steps;
  if (n > options.cholesky_cap)
    throw Error(ErrorKind::GridTooLarge, "cholesky generator limited to " + std::to_string(options.cholesky_cap) +
                                             " steps, got " + std::to_string(n));
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cov(i, j) = fgn_autocovariance(out.hurst, std::abs(i - j));
  const Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::SingularCovariance, "increment covariance is not positive definite");
  const Eigen::MatrixXd lower = llt.matrixL();
  const double scale = std::pow(out.grid.dt(), out.hurst);

  parallel_blocks(out.n_paths, options.threads, [&](std::size_t begin, std::size_t end) {
    Eigen::VectorXd z(n), incr(n);
    std::normal_distribution<double> normal;
    for (std::size_t i = begin; i < end; ++i) {
      Engine rng = make_stream(out.seed, i, rng_domain::kGaussian);
      for (int k = 0; k < n; ++k) z[k] = normal(rng);
      incr.noalias() = lower.triangularView<Eigen::Lower>() * z;
      cumulate(out.path(i), incr.data(), scale);
    }
  });
}

}  // namespace

TimeGrid make_grid(double t_max, int n_steps) {
  if (!(t_max > 0.0) || !std::isfinite(t_max)) throw Error(ErrorKind::InvalidArgument, "t_max must be positive");
  if (n_steps < 1) throw Error(ErrorKind::InvalidArgument, "n_steps must be >= 1");
  return {t_max, n_steps};
}

std::string_view to_string(Generator g) { return g == Generator::Circulant ? "circulant" : "cholesky"; }

std::optional<Generator> parse_generator(std::string_view text) {
  if (text == "circulant") return Generator::Circulant;
  if (text == "cholesky") return Generator::Cholesky;
  return std::nullopt;
}

double fbm_covariance(double hurst, double t, double s) {
  const double h2 = 2.0 * hurst;
  return 0.5 * (std::pow(t, h2) + std::pow(s, h2) - std::pow(std::abs(t - s), h2));
}

double fgn_autocovariance(double hurst, long k) {
  const double h2 = 2.0 * hurst;
  const double x = static_cast<double>(std::abs(k));
  return 0.5 * (std::pow(x + 1.0, h2) - 2.0 * std::pow(x, h2) + std::pow(std::abs(x - 1.0), h2));
}

std::vector<double> circulant_eigenvalues(double hurst, int n) {
  const int size = 2 * n;
  FftwBuffer in(size), out(size);
  for (int k = 0; k < size; ++k) {
    const int lag = k <= n ? k : size - k;
    in.data[k][0] = fgn_autocovariance(hurst, lag);
    in.data[k][1] = 0.0;
  }
  {
    const FftPlan plan(size, in.data, out.data);
    plan.run(in.data, out.data);
  }
  std::vector<double> lambda(size);
  for (int k = 0; k < size; ++k) {
    const double v = out.data[k][0];
    if (v < kEigenFloor)
      throw Error(ErrorKind::EmbeddingNotPSD,
                  "circulant embedding eigenvalue " + std::to_string(v) + " below tolerance; use cholesky");
    lambda[k] = std::max(v, 0.0);
  }
  return lambda;
}

TrajectorySet fbm_paths(double hurst, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                        Generator method, const FbmOptions& options) {
  check_hurst(hurst);
  make_grid(grid.t_max, grid.n_steps);
  if (n_paths < 1) throw Error(ErrorKind::InvalidArgument, "n_paths must be >= 1");
  TrajectorySet out;
  out.grid = grid;
  out.n_paths = n_paths;
  out.hurst = hurst;
  out.seed = seed;
  out.generator = method;
  out.values.assign(n_paths * out.row_size(), 0.0);
  if (method == Generator::Circulant)
    circulant_fill(out, options);
  else
    cholesky_fill(out, options);
  return out;
}

KernelValue frac_indicator_kernel(double hurst, double t, double x) {
  check_hurst(hurst);
  if (!(t > 0.0)) throw Error(ErrorKind::InvalidArgument, "kernel needs t > 0");
  if (hurst == 0.5) return {(x >= 0.0 && x < t) ? 1.0 : 0.0, false};
  const double p = hurst - 0.5;
  const bool singular = p < 0.0 && (x == 0.0 || x == t);
  thread_local double cached_hurst = -1.0, cached_c = 0.0;
  if (hurst != cached_hurst) {
    cached_c = k_constant(hurst) / std::tgamma(hurst + 0.5);
    cached_hurst = hurst;
  }
  const double c = cached_c;
  if (x >= t && !singular) return {0.0, false};
  return {c * (positive_part_pow(t - x, p) - positive_part_pow(-x, p)), singular};
}

double k_constant(double hurst) {
  check_hurst(hurst);
  const double p = hurst - 0.5;
  if (p == 0.0) return 1.0;
  auto f = [p](double s) {
    const double g = power_gap(1.0, s, p);
    return g * g;
  };
  boost::math::quadrature::tanh_sinh<double> head;
  boost::math::quadrature::exp_sinh<double> tail;
  const double integral = head.integrate(f, 0.0, 1.0, kQuadTol) + tail.integrate(f, 1.0, INFINITY, kQuadTol);
  return std::tgamma(hurst + 0.5) / std::sqrt(integral + 1.0 / (2.0 * hurst));
}

double kernel_inner_product(double hurst, double t1, double t2) {
  check_hurst(hurst);
  if (!(t1 > 0.0 && t2 > 0.0)) throw Error(ErrorKind::InvalidArgument, "kernel needs t > 0");
  const double p = hurst - 0.5;
  const double c = k_constant(hurst) / std::tgamma(hurst + 0.5);
  const double lo = std::min(t1, t2), hi = std::max(t1, t2);

  // x ∈ (0, lo): (lo−x)^p (hi−x)^p, with lo−x taken from the complement near lo.
  auto inner = [&](double x, double xc) {
    const double d = xc > 0.0 ? xc : lo - x;
    return std::pow(d, p) * std::pow(hi - lo + d, p);
  };
  // x = −y < 0: ((t1+y)^p − y^p)((t2+y)^p − y^p)
  auto outer = [&](double y) { return power_gap(t1, y, p) * power_gap(t2, y, p); };

  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  double total = ts.integrate(inner, 0.0, lo, kQuadTol);
  if (p != 0.0) total += ts.integrate(outer, 0.0, hi, kQuadTol) + es.integrate(outer, hi, INFINITY, kQuadTol);
  return c * c * total;
}

}  // namespace foxh
