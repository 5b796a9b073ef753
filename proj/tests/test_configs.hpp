#pragma once

#include "foxh/gfhp.hpp"

namespace foxh::testing {

inline GfhpConfig brownian_config(double hurst = 0.5) { return make_config(validate_params({{}, {}}), {}, hurst); }

// Mittag-Leffler mixing: Y ~ M_β.
inline GfhpConfig ggbm_config(double beta, double hurst) {
  return make_config(validate_params({{{1.0 - beta, beta}}, {{0.0, 1.0}}}), {{MWrightFactor{beta, 1.0}}}, hurst);
}

// Y ~ Exp(1).
inline GfhpConfig gamma_config(double hurst) {
  return make_config(validate_params({{}, {{0.0, 1.0}}}), {{GammaFactor{1.0, 1.0, 1.0}}}, hurst);
}

}  // namespace foxh::testing
