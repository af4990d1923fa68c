#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "evsi/errors.hpp"

namespace evsi {

// Risk threshold z, strictly inside (0, 1).
class Threshold {
 public:
  explicit Threshold(double z) : z_(z) {
    if (!(z > 0.0 && z < 1.0)) {
      throw DomainError("threshold must lie strictly inside (0,1), got " + std::to_string(z));
    }
  }

  double value() const noexcept { return z_; }

  // Exchange rate of a false positive in true-positive units, z/(1-z).
  double odds() const noexcept { return z_ / (1.0 - z_); }

  friend bool operator==(const Threshold&, const Threshold&) = default;

 private:
  double z_;
};

// Population parameters fully determining net benefit at one threshold.
struct ThetaTriplet {
  double prevalence = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;

  friend bool operator==(const ThetaTriplet&, const ThetaTriplet&) = default;
};

inline bool is_probability(double x) noexcept { return x >= 0.0 && x <= 1.0; }

inline void validate(const ThetaTriplet& t) {
  if (!is_probability(t.prevalence) || !is_probability(t.sensitivity) ||
      !is_probability(t.specificity)) {
    throw DomainError("theta components must lie in [0,1]");
  }
}

enum class Strategy : std::size_t { treat_none = 0, use_model = 1, treat_all = 2 };

inline constexpr std::size_t kStrategyCount = 3;

// One value per strategy, indexed by Strategy.
using StrategyValues = std::array<double, kStrategyCount>;

inline const char* to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::treat_none: return "treat_none";
    case Strategy::use_model: return "use_model";
    case Strategy::treat_all: return "treat_all";
  }
  return "unknown";
}

namespace detail {

inline double nb_model(const ThetaTriplet& t, double odds) noexcept {
  return t.prevalence * t.sensitivity - (1.0 - t.prevalence) * (1.0 - t.specificity) * odds;
}

// p - (1-p) z/(1-z), written as (p - z)/(1 - z) so that it is exactly 0 at p = z.
inline double nb_all(const ThetaTriplet& t, double z) noexcept {
  return (t.prevalence - z) / (1.0 - z);
}

}  // namespace detail

inline double net_benefit(Strategy s, const ThetaTriplet& theta, Threshold z) {
  validate(theta);
  switch (s) {
    case Strategy::treat_none: return 0.0;
    case Strategy::use_model: return detail::nb_model(theta, z.odds());
    case Strategy::treat_all: return detail::nb_all(theta, z.value());
  }
  throw DomainError("unknown strategy");
}

// Unchecked: the engines call this in their inner loops on validated inputs.
inline StrategyValues net_benefits(const ThetaTriplet& theta, Threshold z) noexcept {
  return {0.0, detail::nb_model(theta, z.odds()), detail::nb_all(theta, z.value())};
}

// Argmax over strategies; ties go to the lowest index.
inline Strategy best_strategy(const StrategyValues& enb) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < kStrategyCount; ++i) {
    if (!std::isfinite(enb[i])) throw DomainError("expected net benefit must be finite");
    if (enb[i] > enb[best]) best = i;
  }
  return static_cast<Strategy>(best);
}

inline double max_value(const StrategyValues& v) noexcept {
  double m = v[0];
  for (std::size_t i = 1; i < kStrategyCount; ++i) m = v[i] > m ? v[i] : m;
  return m;
}

inline double value_of(const StrategyValues& v, Strategy s) noexcept {
  return v[static_cast<std::size_t>(s)];
}

// NB of the model minus the best default strategy.
inline double incremental_nb(const ThetaTriplet& theta, Threshold z) {
  validate(theta);
  const StrategyValues nb = net_benefits(theta, z);
  return nb[1] - std::max(nb[0], nb[2]);
}

}  // namespace evsi
