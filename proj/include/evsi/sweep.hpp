#pragma once

// EVSI as a function of the amount of current information: for each
// current-sample size, repeatedly subsample a master dataset, build conjugate
// priors from the subsample and average the resulting EVSI curves.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "evsi/betabin.hpp"
#include "evsi/dataset.hpp"
#include "evsi/errors.hpp"
#include "evsi/parallel.hpp"
#include "evsi/random.hpp"
#include "evsi/voi.hpp"

namespace evsi {

struct SweepOptions {
  std::vector<std::size_t> sizes = {500, 1000, 2000, 4000, 8000};
  std::vector<Threshold> thresholds = {Threshold(0.01), Threshold(0.02)};
  std::vector<std::int64_t> n_stars = {0, 125, 250, 500, 1000, 2000, 4000, 8000};
  std::size_t reps = 100;
  BetaPriorSet base = flat_priors();
  RunOptions run{100000, 1, 1};
};

struct SweepCurve {
  std::size_t n_current = 0;
  // One estimate per (threshold, n_star), threshold-major.
  std::vector<VoiEstimate> rows;
};

// n distinct records drawn without replacement (partial Fisher-Yates).
inline ValidationSample subsample(const ValidationSample& master, std::size_t n, RandomStream& rng) {
  if (n > master.size()) {
    throw DataError("subsample size " + std::to_string(n) + " exceeds master dataset size " +
                    std::to_string(master.size()));
  }
  std::vector<std::size_t> idx(master.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  ValidationSample out;
  out.records.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(master.size() - i));
    std::swap(idx[i], idx[j]);
    out.records.push_back(master.records[idx[i]]);
  }
  return out;
}

// Repetition r at size n subsamples with substream(derive_seed(derive_seed(seed, 1), n), r)
// and runs the engine with seed derive_seed(seed, 2 + r), shared across sizes
// and thresholds. A curve therefore does not depend on which other sizes are
// in the sweep.
//
// Reported mc_se_evsi / mc_se_evpi are standard errors of the mean across
// repetitions (the within-run MC error when reps == 1).
inline std::vector<SweepCurve> run_sweep(const ValidationSample& master, const SweepOptions& opt) {
  validate(master);
  validate(opt.run);
  if (opt.sizes.empty() || opt.thresholds.empty() || opt.n_stars.empty()) throw DomainError("sweep grids must be non-empty");
  if (opt.reps < 1) throw DomainError("at least one repetition is required");
  for (auto n : opt.sizes) {
    if (n < 1) throw DomainError("current sample sizes must be positive");
    if (n > master.size()) {
      throw DataError("subsample size " + std::to_string(n) + " exceeds master dataset size " +
                      std::to_string(master.size()));
    }
  }

  const std::size_t n_cells = opt.thresholds.size() * opt.n_stars.size();
  std::vector<SweepCurve> curves;
  for (std::size_t s = 0; s < opt.sizes.size(); ++s) {
    std::vector<Moments> evsi(n_cells);
    std::vector<Moments> evpi(n_cells);
    std::vector<double> within_evsi(n_cells, 0.0);
    std::vector<double> within_evpi(n_cells, 0.0);
    std::vector<StrategyValues> enb(n_cells, StrategyValues{});
    for (std::size_t r = 0; r < opt.reps; ++r) {
      RandomStream pick = substream(derive_seed(derive_seed(opt.run.seed, 1), opt.sizes[s]), r);
      const ValidationSample current = subsample(master, opt.sizes[s], pick);
      RunOptions run = opt.run;
      run.seed = derive_seed(opt.run.seed, 2 + r);
      for (std::size_t t = 0; t < opt.thresholds.size(); ++t) {
        const BetaPriorSet priors = priors_from_sample(confusion_at_threshold(current, opt.thresholds[t]), opt.base);
        const auto est = run_betabin_grid(priors, opt.thresholds[t], opt.n_stars, run);
        for (std::size_t k = 0; k < opt.n_stars.size(); ++k) {
          const std::size_t c = t * opt.n_stars.size() + k;
          evsi[c].add(est[k].evsi_raw);
          evpi[c].add(est[k].evpi_raw);
          within_evsi[c] += est[k].mc_se_evsi * est[k].mc_se_evsi;
          within_evpi[c] += est[k].mc_se_evpi * est[k].mc_se_evpi;
          for (std::size_t i = 0; i < kStrategyCount; ++i) enb[c][i] += est[k].enb_current[i] / static_cast<double>(opt.reps);
        }
      }
    }
    SweepCurve curve;
    curve.n_current = opt.sizes[s];
    const double reps = static_cast<double>(opt.reps);
    for (std::size_t t = 0; t < opt.thresholds.size(); ++t) {
      for (std::size_t k = 0; k < opt.n_stars.size(); ++k) {
        const std::size_t c = t * opt.n_stars.size() + k;
        VoiEstimate e;
        e.z = opt.thresholds[t].value();
        e.n_star = opt.n_stars[k];
        e.n_sims = opt.run.n_sims;
        e.seed = opt.run.seed;
        e.engine = "betabin";
        e.enb_current = enb[c];
        const double mc_evsi = std::sqrt(within_evsi[c]) / reps;
        const double mc_evpi = std::sqrt(within_evpi[c]) / reps;
        e.mc_se_evsi = opt.reps > 1 ? evsi[c].se() : mc_evsi;
        e.mc_se_evpi = opt.reps > 1 ? evpi[c].se() : mc_evpi;
        set_headline(e, evpi[c].mean, evsi[c].mean);
        e.diagnostics["reps"] = reps;
        e.diagnostics["n_current"] = static_cast<double>(opt.sizes[s]);
        e.diagnostics["mc_se_evsi_within"] = mc_evsi;
        e.diagnostics["mc_se_evpi_within"] = mc_evpi;
        curve.rows.push_back(std::move(e));
      }
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

}  // namespace evsi
