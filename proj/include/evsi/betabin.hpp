#pragma once

// EVPI and EVSI under independent beta distributions on prevalence,
// sensitivity and specificity, using beta-binomial conjugacy for the update.

#include <cmath>
#include <cstdint>
#include <vector>

#include "evsi/dataset.hpp"
#include "evsi/errors.hpp"
#include "evsi/net_benefit.hpp"
#include "evsi/parallel.hpp"
#include "evsi/random.hpp"
#include "evsi/voi.hpp"

namespace evsi {

struct BetaParams {
  double alpha = 1.0;
  double beta = 1.0;

  double mean() const noexcept { return alpha / (alpha + beta); }

  friend bool operator==(const BetaParams&, const BetaParams&) = default;
};

struct BetaPriorSet {
  BetaParams prevalence;
  BetaParams sensitivity;
  BetaParams specificity;

  friend bool operator==(const BetaPriorSet&, const BetaPriorSet&) = default;
};

inline void validate(const BetaPriorSet& p) {
  for (const BetaParams* b : {&p.prevalence, &p.sensitivity, &p.specificity}) {
    if (!(b->alpha > 0.0) || !(b->beta > 0.0) || !std::isfinite(b->alpha) || !std::isfinite(b->beta)) {
      throw DomainError("beta prior parameters must be positive and finite");
    }
  }
}

inline BetaPriorSet flat_priors() noexcept { return {}; }

// Every parameter set to eps; stands in for the improper Beta(0,0).
inline BetaPriorSet vanishing_priors(double eps = 1e-6) noexcept {
  return {{eps, eps}, {eps, eps}, {eps, eps}};
}

inline BetaPriorSet priors_from_sample(const ConfusionCounts& c, const BetaPriorSet& base) {
  validate(base);
  if (c.n_tp < 0 || c.n_fn < 0 || c.n_tn < 0 || c.n_fp < 0) throw DomainError("negative counts");
  BetaPriorSet p = base;
  p.prevalence.alpha += static_cast<double>(c.n_tp + c.n_fn);
  p.prevalence.beta += static_cast<double>(c.n_tn + c.n_fp);
  p.sensitivity.alpha += static_cast<double>(c.n_tp);
  p.sensitivity.beta += static_cast<double>(c.n_fn);
  p.specificity.alpha += static_cast<double>(c.n_tn);
  p.specificity.beta += static_cast<double>(c.n_fp);
  return p;
}

inline ThetaTriplet prior_means(const BetaPriorSet& p) noexcept {
  return {p.prevalence.mean(), p.sensitivity.mean(), p.specificity.mean()};
}

// Exact: NB is linear in each component and the components are independent,
// so E[NB(theta)] = NB(E[theta]).
inline StrategyValues enb_current(const BetaPriorSet& priors, Threshold z) {
  validate(priors);
  return net_benefits(prior_means(priors), z);
}

inline ThetaTriplet posterior_mean_update(const BetaPriorSet& p, const FutureCounts& fc) noexcept {
  const auto n = [](std::int64_t v) { return static_cast<double>(v); };
  return {(p.prevalence.alpha + n(fc.n_tp + fc.n_fn)) / (p.prevalence.alpha + p.prevalence.beta + n(fc.n_star)),
          (p.sensitivity.alpha + n(fc.n_tp)) / (p.sensitivity.alpha + p.sensitivity.beta + n(fc.n_tp + fc.n_fn)),
          (p.specificity.alpha + n(fc.n_tn)) / (p.specificity.alpha + p.specificity.beta + n(fc.n_tn + fc.n_fp))};
}

inline ThetaTriplet sample_theta(const BetaPriorSet& p, RandomStream& rng) {
  ThetaTriplet t;
  t.prevalence = sample_beta(p.prevalence.alpha, p.prevalence.beta, rng);
  t.sensitivity = sample_beta(p.sensitivity.alpha, p.sensitivity.beta, rng);
  t.specificity = sample_beta(p.specificity.alpha, p.specificity.beta, rng);
  return t;
}

namespace detail {

struct BetabinAcc {
  Moments perfect;              // max true NB - max ENB_current
  std::vector<Moments> sample;  // per n_star: max updated ENB - max ENB_current

  void merge(const BetabinAcc& o) {
    perfect.merge(o.perfect);
    for (std::size_t k = 0; k < sample.size(); ++k) sample[k].merge(o.sample[k]);
  }
};

}  // namespace detail

// Runs the conjugate engine for several future sample sizes at once. Each
// iteration j draws theta from substream(seed, j); every future size then
// continues from a copy of that stream, so each entry equals a standalone
// run() with the same seed.
inline std::vector<VoiEstimate> run_betabin_grid(const BetaPriorSet& priors, Threshold z,
                                                 const std::vector<std::int64_t>& n_stars, const RunOptions& opt) {
  validate(priors);
  validate(opt);
  for (auto n : n_stars) {
    if (n < 0) throw DomainError("future sample size must be nonnegative");
  }
  const StrategyValues current = enb_current(priors, z);
  const double best_current = max_value(current);

  detail::BetabinAcc init;
  init.sample.resize(n_stars.size());
  const auto acc = parallel_accumulate(opt.n_sims, opt.workers, init, [&](std::uint64_t j, detail::BetabinAcc& a) {
    RandomStream rng = substream(opt.seed, j);
    const ThetaTriplet truth = sample_theta(priors, rng);
    a.perfect.add(max_value(net_benefits(truth, z)) - best_current);
    for (std::size_t k = 0; k < n_stars.size(); ++k) {
      RandomStream future = rng;
      const FutureCounts fc = simulate_future_counts(truth, n_stars[k], future);
      a.sample[k].add(max_value(net_benefits(posterior_mean_update(priors, fc), z)) - best_current);
    }
  });

  std::vector<VoiEstimate> out;
  out.reserve(n_stars.size());
  for (std::size_t k = 0; k < n_stars.size(); ++k) {
    VoiEstimate e;
    e.z = z.value();
    e.n_star = n_stars[k];
    e.n_sims = opt.n_sims;
    e.seed = opt.seed;
    e.engine = "betabin";
    e.enb_current = current;
    e.mc_se_evpi = acc.perfect.se();
    e.mc_se_evsi = acc.sample[k].se();
    set_headline(e, acc.perfect.mean, acc.sample[k].mean);
    out.push_back(std::move(e));
  }
  return out;
}

inline VoiEstimate run_betabin(const BetaPriorSet& priors, Threshold z, std::int64_t n_star, const RunOptions& opt) {
  return run_betabin_grid(priors, z, {n_star}, opt).front();
}

}  // namespace evsi
