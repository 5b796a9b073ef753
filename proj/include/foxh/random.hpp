#pragma once

#include <cstdint>
#include <random>

namespace foxh {

using Engine = std::mt19937_64;

/// Independent engine for (seed, stream). `domain` separates unrelated uses of
/// the same seed (mixing variable vs Gaussian noise, say).
Engine make_stream(std::uint64_t seed, std::uint64_t stream, std::uint32_t domain = 0);

namespace rng_domain {
inline constexpr std::uint32_t kMixing = 0x4d495859;    // "MIXY"
inline constexpr std::uint32_t kGaussian = 0x4742534e;  // "GBSN"
inline constexpr std::uint32_t kSample = 0x53414d50;    // "SAMP"
inline constexpr std::uint32_t kTimeChange = 0x5443484e;  // "TCHN"
}  // namespace rng_domain

/// Standard one-sided β-stable variable with E[e^{−sS}] = e^{−s^β}, 0 < β < 1
/// (Kanter's representation).
double positive_stable(double beta, Engine& rng);

/// M-Wright variable M_β, sampled as S^{−β} with S positive β-stable.
double mwright(double beta, Engine& rng);

}  // namespace foxh
