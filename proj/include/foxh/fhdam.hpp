#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "foxh/random.hpp"
#include "foxh/wright.hpp"

namespace foxh {

struct GammaFactor {
  double shape = 1.0;
  double scale = 1.0;
  double power = 1.0;
};

struct BetaFactor {
  double a = 1.0;
  double b = 1.0;
  double power = 1.0;
};

struct MWrightFactor {
  double beta = 0.5;
  double power = 1.0;
};

using Factor = std::variant<GammaFactor, BetaFactor, MWrightFactor>;

/// Y = Π_f F_f^{power_f} with independent factors. Empty means Y ≡ 1 (C0).
struct FactorDecomposition {
  std::vector<Factor> factors;
};

/// Throws InvalidArgument if some factor has out-of-range parameters.
void check_factor(const Factor& factor);

/// E[F^{power·order}] for a single factor; throws InvalidArgument when the
/// moment does not exist.
double factor_moment(const Factor& factor, double order);

/// E[Y^order] for the product Y.
double decomposition_moment(const FactorDecomposition& decomp, double order);

/// (1/K) ΠΓ(b_j+β_j(l+1)) / ΠΓ(a_i+α_i(l+1)).
double fhdam_moment(const FhdamSpec& spec, int l);

/// The same formula at real order l. Valid wherever every gamma argument stays
/// positive (e.g. l = −1/2 when 2b_j + β_j > 0); throws InvalidArgument
/// otherwise.
double fhdam_moment_real(const FhdamSpec& spec, double l);

struct DensityValue {
  double value = 0.0;
  bool via_oracle = false;  // closed form unavailable, Mellin–Barnes used
};

/// ρ_H(τ) = H^{m,0}_{p,m}(τ)/K. Closed forms: single gamma power (C1), single
/// beta power (C2), H^{1,0}_{1,1} with α < β (C4). Everything else goes through
/// the Mellin–Barnes route and sets `via_oracle`. Throws DegenerateClass for C0.
DensityValue density_eval_detailed(const FhdamSpec& spec, double tau);
double density_eval(const FhdamSpec& spec, double tau);

/// Upper end of the effective support: exact for bounded (a* = 0) laws,
/// otherwise where the tail envelope falls below 1e-16 of its peak.
double support_upper(const FhdamSpec& spec);

struct LaplaceCheck {
  double lhs = 0.0;  // ∫ e^{−sτ} ρ_H(τ) dτ by quadrature
  double rhs = 0.0;  // (1/K) Ψ(−s)
};

LaplaceCheck laplace_identity_check(const FhdamSpec& spec, double s);

struct SampleBatch {
  std::vector<double> values;
  std::uint64_t seed = 0;
  std::string spec_id;
};

/// n independent draws of Y. Deterministic in (decomp, n, seed); values are
/// produced in fixed-size chunks with one RNG stream per chunk.
SampleBatch sample(const FactorDecomposition& decomp, std::size_t n, std::uint64_t seed,
                   std::string spec_id = {});

/// One draw of Y from a caller-owned engine.
double sample_one(const FactorDecomposition& decomp, Engine& rng);

struct MomentMatchReport {
  std::vector<int> orders;
  std::vector<double> decomposition_moments;
  std::vector<double> spec_moments;
  std::vector<double> relative_errors;
  bool passed = true;
  std::optional<int> first_failing_order;
};

/// Compares E[Y^l] of the decomposition with fhdam_moment for l = 1..max_order.
MomentMatchReport verify_decomposition(const FactorDecomposition& decomp, const FhdamSpec& spec,
                                       int max_order = 6, double rel_tol = 1e-9);

/// Throws MomentMismatch (first failing order and both values) unless the
/// report passes.
void require_decomposition(const FactorDecomposition& decomp, const FhdamSpec& spec, int max_order = 6,
                           double rel_tol = 1e-9);

}  // namespace foxh
