#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace foxh {

struct TimeGrid {
  double t_max = 1.0;
  int n_steps = 1;

  double dt() const { return t_max / n_steps; }
  double time(int k) const { return t_max * k / n_steps; }
};

/// Throws InvalidArgument unless t_max > 0 and n_steps >= 1.
TimeGrid make_grid(double t_max, int n_steps);

enum class Generator { Circulant, Cholesky };

std::string_view to_string(Generator g);
std::optional<Generator> parse_generator(std::string_view text);

/// n_paths × (n_steps+1) values, row-major; column 0 is t = 0.
struct TrajectorySet {
  TimeGrid grid;
  std::size_t n_paths = 0;
  std::vector<double> values;
  double hurst = 0.5;
  std::uint64_t seed = 0;
  Generator generator = Generator::Circulant;

  std::size_t row_size() const { return static_cast<std::size_t>(grid.n_steps) + 1; }
  std::span<double> path(std::size_t i) { return {values.data() + i * row_size(), row_size()}; }
  std::span<const double> path(std::size_t i) const { return {values.data() + i * row_size(), row_size()}; }
  double at(std::size_t i, int k) const { return values[i * row_size() + static_cast<std::size_t>(k)]; }
};

/// ½(t^{2H} + s^{2H} − |t−s|^{2H}).
double fbm_covariance(double hurst, double t, double s);

/// Autocovariance of unit-spacing fractional Gaussian noise at lag k.
double fgn_autocovariance(double hurst, long k);

struct FbmOptions {
  int cholesky_cap = 4096;
  int threads = 0;
};

/// Fractional Brownian motion paths on a uniform grid. Path i depends only on
/// (seed, i, hurst, grid, method), not on n_paths or the thread count.
/// Circulant: throws EmbeddingNotPSD if an eigenvalue is below −1e−10.
/// Cholesky: throws GridTooLarge above options.cholesky_cap steps.
TrajectorySet fbm_paths(double hurst, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                        Generator method = Generator::Circulant, const FbmOptions& options = {});

/// Eigenvalues of the circulant embedding of n fGn autocovariances (length 2n).
std::vector<double> circulant_eigenvalues(double hurst, int n);

struct KernelValue {
  double value = 0.0;
  bool singular = false;  // H < 1/2 and x ∈ {0, t}: kernel is infinite there
};

/// (M^H_− 1_{[0,t)})(x) = K_H/Γ(H+½)·((t−x)_+^{H−½} − (−x)_+^{H−½}).
KernelValue frac_indicator_kernel(double hurst, double t, double x);

/// K_H by quadrature of its defining integral.
double k_constant(double hurst);

/// ∫_ℝ (M^H 1_{[0,t1)})(x)(M^H 1_{[0,t2)})(x) dx by quadrature on the pieces
/// (−∞,0), (0,min(t1,t2)); endpoint singularities are handled by
/// double-exponential rules.
double kernel_inner_product(double hurst, double t1, double t2);

}  // namespace foxh
