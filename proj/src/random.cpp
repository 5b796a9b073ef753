#include "foxh/random.hpp"

#include <cmath>
#include <numbers>

namespace foxh {

Engine make_stream(std::uint64_t seed, std::uint64_t stream, std::uint32_t domain) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), domain};
  return Engine(seq);
}

namespace {

// log of sin(βU)^β sin((1−β)U)^{1−β} / sin(U), Kanter's A(U)^{1−β}.
double log_kanter(double beta, double u) {
  return beta * std::log(std::sin(beta * u)) + (1.0 - beta) * std::log(std::sin((1.0 - beta) * u)) -
         std::log(std::sin(u));
}

void draw_uniform_exponential(Engine& rng, double& u, double& e) {
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::exponential_distribution<double> expo(1.0);
  do {
    u = angle(rng);
  } while (u <= 0.0);
  e = expo(rng);
}

}  // namespace

double positive_stable(double beta, Engine& rng) {
  double u = 0.0, e = 0.0;
  draw_uniform_exponential(rng, u, e);
  // S = (A(U)/E)^{(1−β)/β} with A(U) = exp(log_kanter / (1−β))
  return std::exp((log_kanter(beta, u) / (1.0 - beta) - std::log(e)) * (1.0 - beta) / beta);
}

double mwright(double beta, Engine& rng) {
  double u = 0.0, e = 0.0;
  draw_uniform_exponential(rng, u, e);
  // S^{−β} = (E / A(U))^{1−β}
  return std::exp((1.0 - beta) * std::log(e) - log_kanter(beta, u));
}

}  // namespace foxh
