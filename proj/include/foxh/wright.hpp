#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace foxh {

/// One (shift, weight) pair: (a_i, α_i) in the upper list or (b_j, β_j) in the
/// lower list of H^{m,0}_{p,m}.
struct ParamPair {
  double shift = 0.0;
  double weight = 1.0;

  friend bool operator==(const ParamPair&, const ParamPair&) = default;
};

/// Parameter lists of a Fox-H density / generalized Wright function pair.
/// `upper` has p entries (a_i, α_i), `lower` has m entries (b_j, β_j).
struct WrightParams {
  std::vector<ParamPair> upper;
  std::vector<ParamPair> lower;

  friend bool operator==(const WrightParams&, const WrightParams&) = default;
};

struct DerivedConstants {
  double a_star = 0.0;       // Σβ_j − Σα_i
  double delta_cap = 0.0;    // Δ; equals a_star for H^{m,0}_{p,m}
  double delta_small = 1.0;  // δ = Πβ_j^{β_j} Πα_i^{−α_i}
  double mu = 0.0;           // Σb_j − Σa_i + (p − m)/2
  double rho = 0.0;          // min_j b_j/β_j, 0 when m = 0
  double k_norm = 1.0;       // ΠΓ(b_j+β_j) / ΠΓ(a_i+α_i)
};

struct SeriesPolicy {
  double abs_tol = 1e-14;
  double rel_tol = 1e-12;
  int max_terms = 10'000;
};

enum class ClassTag { C0, C1, C2, C3, C4, C5, C6, C7, Custom };

std::string_view to_string(ClassTag tag);
std::optional<ClassTag> parse_class_tag(std::string_view text);

/// Validated parameters plus derived constants. Only `validate_params` builds
/// one, so holding an FhdamSpec means items 1–3 of the admissibility
/// conditions were checked.
class FhdamSpec {
 public:
  const WrightParams& params() const noexcept { return params_; }
  const DerivedConstants& constants() const noexcept { return constants_; }
  ClassTag class_tag() const noexcept { return class_tag_; }

  std::size_t p() const noexcept { return params_.upper.size(); }
  std::size_t m() const noexcept { return params_.lower.size(); }
  bool is_degenerate() const noexcept { return p() == 0 && m() == 0; }

  /// True when the gWf is entire (C0, or a* < 1); otherwise the series has a
  /// finite radius and the spec is flagged for production use.
  bool entire() const noexcept { return entire_; }

  /// Non-negativity of H^{m,0}_{p,m} on (0,∞) is assumed, never proven by
  /// validation. Callers may spot-check numerically.
  bool nonnegativity_verified() const noexcept { return false; }

 private:
  friend FhdamSpec validate_params(const WrightParams&, std::optional<ClassTag>);
  FhdamSpec() = default;

  WrightParams params_;
  DerivedConstants constants_;
  ClassTag class_tag_ = ClassTag::Custom;
  bool entire_ = true;
};

/// Checks the admissibility conditions and computes the derived constants.
/// `class_override` replaces the inferred class label (it does not change
/// which density routine is used). Throws Error with NonPositiveWeight,
/// ShiftViolation, AStarViolation or PoleCollision.
FhdamSpec validate_params(const WrightParams& params,
                          std::optional<ClassTag> class_override = std::nullopt);

DerivedConstants derive_constants(const WrightParams& params);
ClassTag infer_class(const WrightParams& params);

/// Σ_k ΠΓ(b_j+β_j(k+1)) / ΠΓ(a_i+α_i(k+1)) · z^k/k!, the un-normalized gWf
/// attached to the parameter set (divide by K for the Laplace transform).
double gwf_eval(const FhdamSpec& spec, double z, const SeriesPolicy& policy = {});

/// Same evaluation for raw parameters that need not form an admissible
/// density (e.g. derivative-shifted parameters).
double gwf_eval(const WrightParams& params, double z, const SeriesPolicy& policy = {});

/// Plain power series only; throws NoConvergence / Overflow. `max_abs_term`
/// receives the largest |term| seen, a measure of cancellation.
double gwf_series(const WrightParams& params, double z, const SeriesPolicy& policy,
                  double* max_abs_term = nullptr);

/// Ψ(−s) for s > 0 through its Mellin–Barnes representation
/// (1/2πi)∫Γ(u)ΠΓ(B_j−β_j u)/ΠΓ(A_i−α_i u) s^{−u} du, valid for a* > −1.
double gwf_negative_mellin_barnes(const WrightParams& params, double s);

/// Parameters whose gWf is the derivative of the given one:
/// b_j → b_j+β_j, a_i → a_i+α_i.
WrightParams gwf_derivative_params(const FhdamSpec& spec);
WrightParams gwf_derivative_params(const WrightParams& params);

/// Rightmost pole −b_j/β_j of ΠΓ(b_j+β_j s); −inf when m = 0.
double rightmost_pole(const WrightParams& params);

/// Normalized density H^{m,0}_{p,m}(τ)/K by trapezoidal quadrature along
/// Re s = gamma_line with `n_nodes` nodes on the half line. Oracle route.
double mellin_barnes_density(const FhdamSpec& spec, double tau, double gamma_line, int n_nodes);

/// Adaptive variant: saddle-point contour, node count doubled until two
/// successive estimates agree. Throws QuadratureNonConvergent.
double mellin_barnes_density(const FhdamSpec& spec, double tau);

/// Real saddle point of |ℋ(γ) τ^{−γ}| to the right of all poles, clamped to
/// keep a usable distance from the rightmost pole.
double saddle_contour(const WrightParams& params, double tau);

/// x^{(μ+1/2)/Δ} exp(−Δ δ^{−1/Δ} x^{1/Δ}), the large-x envelope of H^{m,0}_{p,m}
/// up to a constant. Requires Δ > 0.
double tail_envelope(const DerivedConstants& constants, double x);

/// log ΠΓ(b_j+β_j s) − log ΠΓ(a_i+α_i s) for real s where all arguments are
/// positive (the log-Mellin transform of H^{m,0}_{p,m}).
double log_mellin_ratio(const WrightParams& params, double s);

}  // namespace foxh
