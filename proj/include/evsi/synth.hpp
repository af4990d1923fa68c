#pragma once

// Synthetic validation samples from a one-parameter logistic risk model:
// linear predictor ~ Normal(mu, slope^2), risk = logistic(lp),
// outcome ~ Bernoulli(risk). mu is solved so that the expected event rate
// equals the requested prevalence.

#include <cmath>
#include <cstdint>

#include "evsi/dataset.hpp"
#include "evsi/errors.hpp"
#include "evsi/random.hpp"

namespace evsi {

struct SynthOptions {
  std::size_t n = 500;
  double prevalence = 0.086;
  // Standard deviation of the linear predictor; 0 gives an uninformative model.
  double slope = 1.2;
  std::uint64_t seed = 1;
};

inline double logistic(double x) noexcept {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

// E[logistic(mu + slope Z)], Z standard normal, by midpoint rule on [-10, 10].
inline double mean_logistic_normal(double mu, double slope) noexcept {
  if (slope == 0.0) return logistic(mu);
  constexpr int kPoints = 4000;
  constexpr double kLo = -10.0;
  constexpr double kHi = 10.0;
  const double h = (kHi - kLo) / kPoints;
  double total = 0.0;
  double mass = 0.0;
  for (int i = 0; i < kPoints; ++i) {
    const double zv = kLo + (i + 0.5) * h;
    const double phi = std::exp(-0.5 * zv * zv);
    total += phi * logistic(mu + slope * zv);
    mass += phi;
  }
  return total / mass;
}

inline double solve_intercept(double prevalence, double slope) {
  if (!(prevalence > 0.0 && prevalence < 1.0)) throw DomainError("prevalence must lie strictly inside (0,1)");
  if (slope == 0.0) return std::log(prevalence / (1.0 - prevalence));
  double lo = -40.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_logistic_normal(mid, slope) < prevalence ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Record i is generated from substream(seed, i).
inline ValidationSample synthesize(const SynthOptions& opt) {
  if (opt.n < 1) throw DomainError("sample size must be at least 1");
  if (!(opt.slope >= 0.0) || !std::isfinite(opt.slope)) throw DomainError("slope must be nonnegative");
  const double mu = solve_intercept(opt.prevalence, opt.slope);
  ValidationSample s;
  s.records.reserve(opt.n);
  for (std::size_t i = 0; i < opt.n; ++i) {
    RandomStream rng = substream(opt.seed, i);
    const double lp = opt.slope == 0.0 ? mu : mu + opt.slope * sample_normal(rng);
    const double risk = opt.slope == 0.0 ? opt.prevalence : logistic(lp);
    const int outcome = rng.uniform() < risk ? 1 : 0;
    s.records.push_back({risk, outcome});
  }
  return s;
}

}  // namespace evsi
