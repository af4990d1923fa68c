#pragma once

// Types shared by the value-of-information engines.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>

#include "evsi/errors.hpp"
#include "evsi/net_benefit.hpp"
#include "evsi/random.hpp"

namespace evsi {

struct VoiEstimate {
  double z = 0.0;
  std::int64_t n_star = 0;
  // Headline values, clamped at zero.
  double evpi = 0.0;
  double evsi = 0.0;
  double evpi_raw = 0.0;
  double evsi_raw = 0.0;
  double mc_se_evpi = 0.0;
  double mc_se_evsi = 0.0;
  std::uint64_t n_sims = 0;
  std::uint64_t seed = 0;
  std::string engine;
  StrategyValues enb_current{};
  std::map<std::string, double> diagnostics;
};

inline void set_headline(VoiEstimate& e, double evpi_raw, double evsi_raw) {
  e.evpi_raw = evpi_raw;
  e.evsi_raw = evsi_raw;
  e.evpi = std::max(0.0, evpi_raw);
  e.evsi = std::max(0.0, evsi_raw);
  e.diagnostics["evpi_raw"] = evpi_raw;
  e.diagnostics["evsi_raw"] = evsi_raw;
  e.diagnostics["clamped"] = (evpi_raw < 0.0 || evsi_raw < 0.0) ? 1.0 : 0.0;
}

// Confusion counts of a simulated future study of size n_star.
struct FutureCounts {
  std::int64_t n_star = 0;
  std::int64_t n_pos = 0;
  std::int64_t n_tp = 0;
  std::int64_t n_fn = 0;
  std::int64_t n_tn = 0;
  std::int64_t n_fp = 0;

  friend bool operator==(const FutureCounts&, const FutureCounts&) = default;
};

inline void validate(const FutureCounts& fc) {
  if (fc.n_star < 0 || fc.n_pos < 0 || fc.n_tp < 0 || fc.n_fn < 0 || fc.n_tn < 0 || fc.n_fp < 0 ||
      fc.n_tp + fc.n_fn != fc.n_pos || fc.n_tn + fc.n_fp != fc.n_star - fc.n_pos) {
    throw DomainError("inconsistent future counts");
  }
}

inline FutureCounts make_future_counts(std::int64_t n_star, std::int64_t n_pos, std::int64_t n_tp, std::int64_t n_tn) {
  FutureCounts fc{n_star, n_pos, n_tp, n_pos - n_tp, n_tn, n_star - n_pos - n_tn};
  validate(fc);
  return fc;
}

// Draws a future dataset: events ~ Bin(n*, p), true positives among events
// ~ Bin(events, se), true negatives among non-events ~ Bin(non-events, sp).
inline FutureCounts simulate_future_counts(const ThetaTriplet& theta, std::int64_t n_star, RandomStream& rng) {
  if (n_star < 0) throw DomainError("future sample size must be nonnegative");
  FutureCounts fc;
  fc.n_star = n_star;
  fc.n_pos = sample_binomial(n_star, theta.prevalence, rng);
  fc.n_tp = sample_binomial(fc.n_pos, theta.sensitivity, rng);
  fc.n_fn = fc.n_pos - fc.n_tp;
  fc.n_tn = sample_binomial(n_star - fc.n_pos, theta.specificity, rng);
  fc.n_fp = n_star - fc.n_pos - fc.n_tn;
  return fc;
}

struct RunOptions {
  std::uint64_t n_sims = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

inline void validate(const RunOptions& o) {
  if (o.n_sims < 2) throw DomainError("n_sims must be at least 2");
}

}  // namespace evsi
