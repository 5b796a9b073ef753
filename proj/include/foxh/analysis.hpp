#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "foxh/errors.hpp"
#include "foxh/fbm.hpp"
#include "foxh/gfhp.hpp"

namespace foxh {

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov–Smirnov test with the asymptotic Kolmogorov law
/// (Stephens' small-sample correction of the effective size).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Kolmogorov survival function Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}.
double kolmogorov_q(double lambda);

enum class Diffusion { Sub, Normal, Super };

std::string_view to_string(Diffusion d);

struct MsdReport {
  std::vector<double> lags;
  std::vector<double> msd;
  double slope = 0.0;
  std::pair<double, double> slope_ci{0.0, 0.0};  // 95%, from batch means over paths
  Diffusion classification = Diffusion::Normal;
};

/// Ensemble mean of (X_{t+ℓ} − X_t)² pooled over all valid t, and the
/// log-log least-squares slope. Lags must be positive multiples of the grid
/// spacing. Throws InsufficientLags for fewer than 3 distinct lags.
MsdReport msd(const TrajectorySet& trajs, std::span<const double> lags, int n_batches = 20);

/// Lags ℓ = dt·2^k up to half the horizon.
std::vector<double> dyadic_lags(const TimeGrid& grid);

struct LocalTimeEstimate {
  std::vector<double> x_bins;  // edges
  std::vector<double> values;  // time per unit space, one per bin
  std::pair<double, double> interval{0.0, 0.0};
  double mass = 0.0;          // Σ values·width
  double outside_time = 0.0;  // time spent outside [x_bins.front(), x_bins.back())
};

/// Occupation density of one path over `interval`, treating the path as
/// piecewise linear between grid points, so time in each bin is exact.
/// Throws EmptyInterval or InvalidArgument (fewer than 2 bins, unsorted edges).
LocalTimeEstimate local_time(std::span<const double> path, const TimeGrid& grid, std::pair<double, double> interval,
                             std::span<const double> x_bins);

/// n+1 equally spaced edges on [lo, hi].
std::vector<double> uniform_edges(double lo, double hi, int n_bins);

struct BermanReport {
  double mellin_half = 0.0;           // K·∫ r^{−1/2} ρ_H(r) dr by quadrature
  double mellin_half_analytic = 0.0;  // ΠΓ(b_j+β_j/2) / ΠΓ(a_i+α_i/2)
  double time_integral = 0.0;
  bool condition_holds = true;  // 2b_j + β_j > 0 for all j
  bool finite = false;
  std::optional<ErrorKind> issue;
};

/// 2/((2−H)(1−H)); +inf once H ≥ 1 − 1e−9.
double berman_time_integral(double hurst);

/// Ingredients of the square-integrable local time criterion. Never throws for
/// a violated parameter condition; it is reported through `issue`.
BermanReport berman_check(const GfhpConfig& config);

struct QvRow {
  int n = 0;
  double mean = 0.0;  // ensemble mean of Σ (ΔX)² over n equal cells of [0, t_max]
  double se = 0.0;
};

/// Every n must divide grid.n_steps.
std::vector<QvRow> quadratic_variation_scan(const TrajectorySet& trajs, std::span<const int> partitions);

struct SelfSimilarityResult {
  KsResult ks;
  double exponent = 0.0;
};

/// KS p-value between c^{−H'}X_{ct} and X_t from independent ensembles of size
/// n. H' defaults to the process' own H; pass another value for a negative
/// control.
SelfSimilarityResult self_similarity_test(const GfhpConfig& config, double c, double t, std::size_t n,
                                          std::uint64_t seed, std::optional<double> exponent = std::nullopt,
                                          const SimOptions& options = {});

}  // namespace foxh
