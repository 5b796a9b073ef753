#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "foxh/fbm.hpp"
#include "foxh/fhdam.hpp"
#include "foxh/wright.hpp"

namespace foxh {

/// A generalized Fox-H process X = √Y·B^H. Construct with make_config.
struct GfhpConfig {
  FhdamSpec spec;
  FactorDecomposition decomp;
  double hurst = 0.5;
};

/// Checks H ∈ (0,1) and that the decomposition reproduces the spec moments
/// (MomentMismatch otherwise).
GfhpConfig make_config(const FhdamSpec& spec, FactorDecomposition decomp, double hurst);

/// σ_lk = ½(t_l^{2H} + t_k^{2H} − |t_l − t_k|^{2H}), row-major.
struct CovMatrix {
  std::vector<double> times;
  std::vector<double> entries;

  std::size_t size() const { return times.size(); }
  double operator()(std::size_t l, std::size_t k) const { return entries[l * times.size() + k]; }
};

/// Throws InvalidArgument unless times are positive and strictly increasing.
CovMatrix make_cov_matrix(double hurst, std::span<const double> times);

enum class SimMode { Scale, TimeChange };

std::string_view to_string(SimMode mode);
std::optional<SimMode> parse_sim_mode(std::string_view text);

struct SimOptions {
  Generator generator = Generator::Circulant;
  int threads = 0;
  int cholesky_cap = 4096;
  std::size_t batch_size = 256;     // time-change batches share one covering grid
  long max_covering_steps = 1 << 22;
};

/// Sample paths of X on `grid`. Y is drawn once per path, independently of the
/// fBm noise.
/// Scale: X = √Y·B^H path-wise.
/// TimeChange: X_t = B^H(t·Y^{1/(2H)}); B^H is simulated per batch on a
/// uniform grid covering t_max·max Y^{1/(2H)} and read off between grid
/// points by Gaussian conditioning on the 8 nearest grid values plus residual
/// noise. One-point laws are exact; joint laws carry a small error from the
/// finite conditioning window.
TrajectorySet simulate(const GfhpConfig& config, const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                       SimMode mode = SimMode::Scale, const SimOptions& options = {});

/// E exp(i⟨λ, X_times⟩) = Ψ(−⟨λ, Σλ⟩/2)/K.
double char_fn(const GfhpConfig& config, std::span<const double> times, std::span<const double> lambda);

/// E exp(iλ(X_t − X_s)); depends on t, s only through |t − s|.
double increment_chf(const GfhpConfig& config, double t, double s, double lambda);

/// Joint density of (X_{t_1}, …, X_{t_n}) at x, as the Gaussian mixture
/// ∫ τ^{−n/2} φ_Σ(x/√τ) ρ_H(τ) dτ on a log axis with `quad_nodes`
/// Gauss–Legendre nodes. Throws SingularCovariance or QuadratureNonConvergent.
double joint_density(const GfhpConfig& config, std::span<const double> times, std::span<const double> x,
                     int quad_nodes = 256);

/// E[X_t^order]: zero for odd orders, E[Y^n](2n)!/(n!2^n) t^{2nH} for order 2n.
double analytic_moment(const GfhpConfig& config, double t, int order);

/// Cov(X_t, X_s) = E[Y]·½(t^{2H} + s^{2H} − |t−s|^{2H}).
double covariance(const GfhpConfig& config, double t, double s);

}  // namespace foxh
