#pragma once

// Two-level resampling engine on individual-level data. The outer level draws
// a population F as a (Bayesian or ordinary) bootstrap of the sample; the
// inner level draws a future study from F and pools it with the sample.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "evsi/dataset.hpp"
#include "evsi/errors.hpp"
#include "evsi/net_benefit.hpp"
#include "evsi/parallel.hpp"
#include "evsi/random.hpp"
#include "evsi/voi.hpp"

namespace evsi {

enum class BootstrapKind { bayesian, ordinary };

inline const char* to_string(BootstrapKind k) noexcept {
  return k == BootstrapKind::bayesian ? "bayesian" : "ordinary";
}

inline std::vector<double> bootstrap_weights(BootstrapKind kind, std::size_t n, RandomStream& rng) {
  return kind == BootstrapKind::bayesian ? dirichlet_weights(n, rng) : multinomial_weights(n, rng);
}

// Weighted confusion cells at z; weights are aligned with sample.records.
inline WeightedCounts weighted_cells(const ValidationSample& s, const std::vector<double>& w, Threshold z) {
  if (w.size() != s.records.size()) throw DomainError("weight vector length does not match the sample");
  WeightedCounts c;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Record& r = s.records[i];
    const bool positive = r.risk >= z.value();
    if (r.outcome == 1) {
      (positive ? c.tp : c.fn) += w[i];
    } else {
      (positive ? c.fp : c.tn) += w[i];
    }
  }
  return c;
}

// Weighted prevalence, sensitivity and specificity; an empty class gives 0.
inline ThetaTriplet weighted_theta(const ValidationSample& s, const std::vector<double>& w, Threshold z,
                                   bool* degenerate = nullptr) {
  return theta_from_weighted(weighted_cells(s, w, z), EmptyClassRule::zero, degenerate);
}

namespace detail {

struct BootstrapAcc {
  std::array<Moments, kStrategyCount> population;  // NB_i(F)
  std::array<Moments, kStrategyCount> perfect;     // max_k NB_k(F) - NB_i(F)
  // sample[k][i]: pooled max ENB - NB_i(F), for future size k.
  std::vector<std::array<Moments, kStrategyCount>> sample;
  std::uint64_t degenerate = 0;

  void merge(const BootstrapAcc& o) {
    for (std::size_t i = 0; i < kStrategyCount; ++i) {
      population[i].merge(o.population[i]);
      perfect[i].merge(o.perfect[i]);
    }
    for (std::size_t k = 0; k < sample.size(); ++k) {
      for (std::size_t i = 0; i < kStrategyCount; ++i) sample[k][i].merge(o.sample[k][i]);
    }
    degenerate += o.degenerate;
  }
};

}  // namespace detail

// ENB under current information is the per-strategy average of NB(F) over
// iterations. EVPI and EVSI are reported as means of per-iteration differences
// against the strategy that maximises that average, and their standard errors
// are those of the paired differences.
//
// D* enters the pooled estimate only through its confusion counts. Drawing
// n_star records from F's categorical distribution over records induces
// Multinomial(n_star; F-weighted cell totals) on those counts, which is drawn
// directly as events ~ Bin(n*, p_F), tp ~ Bin(events, se_F),
// tn ~ Bin(n* - events, sp_F).
inline std::vector<VoiEstimate> run_bootstrap_grid(const ValidationSample& sample, Threshold z,
                                                   const std::vector<std::int64_t>& n_stars, const RunOptions& opt,
                                                   BootstrapKind kind = BootstrapKind::bayesian) {
  validate(sample);
  validate(opt);
  for (auto n : n_stars) {
    if (n < 0) throw DomainError("future sample size must be nonnegative");
  }
  const ConfusionCounts base = confusion_at_threshold(sample, z);
  if (base.events() == 0) throw DataError("no events");
  if (base.non_events() == 0) throw DataError("no non-events");

  detail::BootstrapAcc init;
  init.sample.resize(n_stars.size());
  const auto acc = parallel_accumulate(opt.n_sims, opt.workers, init, [&](std::uint64_t j, detail::BootstrapAcc& a) {
    RandomStream rng = substream(opt.seed, j);
    const std::vector<double> w = bootstrap_weights(kind, sample.size(), rng);
    bool degen = false;
    const ThetaTriplet pop = weighted_theta(sample, w, z, &degen);
    a.degenerate += degen ? 1 : 0;
    const StrategyValues nb = net_benefits(pop, z);
    const double best_true = max_value(nb);
    for (std::size_t i = 0; i < kStrategyCount; ++i) {
      a.population[i].add(nb[i]);
      a.perfect[i].add(best_true - nb[i]);
    }
    for (std::size_t k = 0; k < n_stars.size(); ++k) {
      RandomStream future = rng;
      const FutureCounts fc = simulate_future_counts(pop, n_stars[k], future);
      ConfusionCounts pooled = base;
      pooled.n_tp += fc.n_tp;
      pooled.n_fn += fc.n_fn;
      pooled.n_tn += fc.n_tn;
      pooled.n_fp += fc.n_fp;
      const double best_pooled = max_value(net_benefits(theta_hat(pooled), z));
      for (std::size_t i = 0; i < kStrategyCount; ++i) a.sample[k][i].add(best_pooled - nb[i]);
    }
  });

  StrategyValues current{};
  for (std::size_t i = 0; i < kStrategyCount; ++i) current[i] = acc.population[i].mean;
  const auto star = static_cast<std::size_t>(best_strategy(current));

  std::vector<VoiEstimate> out;
  out.reserve(n_stars.size());
  for (std::size_t k = 0; k < n_stars.size(); ++k) {
    VoiEstimate e;
    e.z = z.value();
    e.n_star = n_stars[k];
    e.n_sims = opt.n_sims;
    e.seed = opt.seed;
    e.engine = std::string("bootstrap-") + to_string(kind);
    e.enb_current = current;
    e.mc_se_evpi = acc.perfect[star].se();
    e.mc_se_evsi = acc.sample[k][star].se();
    set_headline(e, acc.perfect[star].mean, acc.sample[k][star].mean);
    e.diagnostics["degenerate_replicates"] = static_cast<double>(acc.degenerate);
    out.push_back(std::move(e));
  }
  return out;
}

inline VoiEstimate run_bootstrap(const ValidationSample& sample, Threshold z, std::int64_t n_star,
                                 const RunOptions& opt, BootstrapKind kind = BootstrapKind::bayesian) {
  return run_bootstrap_grid(sample, z, {n_star}, opt, kind).front();
}

}  // namespace evsi
