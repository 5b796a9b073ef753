#pragma once

#include <complex>
#include <vector>

namespace foxh {

/// log Γ(z) for complex z. exp() of the result is Γ(z) to ~1e-14 relative
/// accuracy; the imaginary part is only defined modulo 2π. Undefined at the
/// poles of Γ.
std::complex<double> log_gamma(std::complex<double> z);

/// 1/Γ(x) for real x, finite everywhere (zero at the poles of Γ).
double reciprocal_gamma(double x);

/// Sign of Γ(x) for real x that is not a pole.
int gamma_sign(double x);

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// n-point Gauss–Legendre rule by Newton iteration on P_n.
GaussLegendreRule gauss_legendre(int n);

}  // namespace foxh
