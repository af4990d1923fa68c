#pragma once

// EVSI for an arbitrary current-information distribution represented by
// posterior draws. The post-study distribution is the same set of draws with
// weights proportional to the binomial likelihood of the simulated study.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include "evsi/betabin.hpp"
#include "evsi/dataset.hpp"
#include "evsi/errors.hpp"
#include "evsi/net_benefit.hpp"
#include "evsi/parallel.hpp"
#include "evsi/random.hpp"
#include "evsi/voi.hpp"

namespace evsi {

struct PosteriorDraws {
  std::vector<ThetaTriplet> draws;

  std::size_t size() const noexcept { return draws.size(); }
};

inline void validate(const PosteriorDraws& d) {
  if (d.draws.size() < 2) throw DataError("at least two posterior draws are required");
  for (const auto& t : d.draws) validate(t);
}

struct WeightDiagnostics {
  double effective_sample_size = 0.0;
  double min_log_weight = 0.0;
  double max_log_weight = 0.0;
  bool underflow = false;
};

struct Reweighted {
  std::vector<double> weights;  // normalised to sum to one
  WeightDiagnostics diagnostics;
};

// Weighted mean NB per strategy. Each mean is taken relative to the first
// draw's NB and shifted back, so identical draws reproduce that NB exactly.
inline StrategyValues enb_from_draws(const PosteriorDraws& d, const std::vector<double>& w, Threshold z) {
  if (w.size() != d.draws.size()) throw DomainError("weight vector length does not match the draws");
  if (d.draws.empty()) throw DataError("no posterior draws");
  const StrategyValues ref = net_benefits(d.draws.front(), z);
  StrategyValues acc{};
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (!(w[k] >= 0.0)) throw DomainError("weights must be nonnegative");
    if (w[k] == 0.0) continue;
    const StrategyValues nb = net_benefits(d.draws[k], z);
    for (std::size_t i = 1; i < kStrategyCount; ++i) acc[i] += w[k] * (nb[i] - ref[i]);
    total += w[k];
  }
  if (!(total > 0.0)) throw DomainError("all weights are zero");
  StrategyValues out{};
  for (std::size_t i = 1; i < kStrategyCount; ++i) out[i] = ref[i] + acc[i] / total;
  return out;
}

namespace detail {

inline double xlogy(std::int64_t k, double log_p) noexcept {
  return k == 0 ? 0.0 : static_cast<double>(k) * log_p;
}

inline double log_choose(std::int64_t n, std::int64_t k) noexcept {
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

// Per-draw logs of each component and its complement.
struct LogTheta {
  double p, q, se, fn, sp, fp;
};

inline LogTheta log_theta(const ThetaTriplet& t) noexcept {
  return {std::log(t.prevalence), std::log1p(-t.prevalence), std::log(t.sensitivity),
          std::log1p(-t.sensitivity), std::log(t.specificity), std::log1p(-t.specificity)};
}

inline double log_likelihood(const LogTheta& l, const FutureCounts& fc) noexcept {
  return xlogy(fc.n_pos, l.p) + xlogy(fc.n_star - fc.n_pos, l.q) + xlogy(fc.n_tp, l.se) + xlogy(fc.n_fn, l.fn) +
         xlogy(fc.n_tn, l.sp) + xlogy(fc.n_fp, l.fp);
}

inline double log_coefficient(const FutureCounts& fc) noexcept {
  return log_choose(fc.n_star, fc.n_pos) + log_choose(fc.n_pos, fc.n_tp) + log_choose(fc.n_star - fc.n_pos, fc.n_tn);
}

inline Reweighted normalise_log_weights(std::vector<double> lw) {
  Reweighted r;
  const double hi = *std::max_element(lw.begin(), lw.end());
  if (!std::isfinite(hi)) throw GuardError("every importance weight is zero");
  double lo = std::numeric_limits<double>::infinity();
  for (double v : lw) lo = std::min(lo, v);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (auto& v : lw) {
    v = std::exp(v - hi);
    sum += v;
    sum_sq += v * v;
  }
  for (auto& v : lw) v /= sum;
  r.weights = std::move(lw);
  r.diagnostics.effective_sample_size = sum * sum / sum_sq;
  r.diagnostics.min_log_weight = lo;
  r.diagnostics.max_log_weight = hi;
  r.diagnostics.underflow = r.diagnostics.effective_sample_size < 0.01 * static_cast<double>(r.weights.size());
  return r;
}

}  // namespace detail

// w_k proportional to Bin(n_pos; n*, p_k) Bin(n_tp; n_pos, se_k) Bin(n_tn; n* - n_pos, sp_k),
// formed in log space and normalised after subtracting the largest log weight.
// Reported log weights are full log-likelihoods.
inline Reweighted reweight(const PosteriorDraws& d, const FutureCounts& fc) {
  validate(fc);
  if (d.draws.empty()) throw DataError("no posterior draws");
  const double coef = detail::log_coefficient(fc);
  std::vector<double> lw(d.draws.size());
  for (std::size_t k = 0; k < lw.size(); ++k) {
    lw[k] = coef + detail::log_likelihood(detail::log_theta(d.draws[k]), fc);
  }
  return detail::normalise_log_weights(std::move(lw));
}

namespace detail {

struct GenericAcc {
  Moments perfect;
  std::vector<Moments> sample;
  std::vector<std::uint64_t> underflow;
  std::vector<Moments> ess;

  void merge(const GenericAcc& o) {
    perfect.merge(o.perfect);
    for (std::size_t k = 0; k < sample.size(); ++k) {
      sample[k].merge(o.sample[k]);
      underflow[k] += o.underflow[k];
      ess[k].merge(o.ess[k]);
    }
  }
};

}  // namespace detail

// Truth for iteration j is draw j mod M when n_sims >= M; otherwise the first
// n_sims entries of a seeded permutation of the draws.
inline std::vector<VoiEstimate> run_generic_grid(const PosteriorDraws& d, Threshold z,
                                                 const std::vector<std::int64_t>& n_stars, const RunOptions& opt) {
  validate(d);
  validate(opt);
  for (auto n : n_stars) {
    if (n < 0) throw DomainError("future sample size must be nonnegative");
  }
  const std::size_t m = d.size();
  const StrategyValues current = enb_from_draws(d, std::vector<double>(m, 1.0), z);
  const double best_current = max_value(current);

  std::vector<StrategyValues> nb(m);
  std::vector<detail::LogTheta> logs(m);
  for (std::size_t k = 0; k < m; ++k) {
    nb[k] = net_benefits(d.draws[k], z);
    logs[k] = detail::log_theta(d.draws[k]);
  }

  std::vector<std::size_t> order;
  if (opt.n_sims < m) {
    order.resize(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    RandomStream shuffle = substream(derive_seed(opt.seed, 0x5348554646ULL), 0);
    for (std::size_t i = m - 1; i > 0; --i) std::swap(order[i], order[shuffle.uniform_index(i + 1)]);
  }

  detail::GenericAcc init;
  init.sample.resize(n_stars.size());
  init.underflow.resize(n_stars.size());
  init.ess.resize(n_stars.size());
  const auto acc = parallel_accumulate(opt.n_sims, opt.workers, init, [&](std::uint64_t j, detail::GenericAcc& a) {
    const std::size_t t = order.empty() ? static_cast<std::size_t>(j % m) : order[j];
    const ThetaTriplet& truth = d.draws[t];
    a.perfect.add(max_value(nb[t]) - best_current);
    RandomStream rng = substream(opt.seed, j);
    std::vector<double> lw(m);
    for (std::size_t k = 0; k < n_stars.size(); ++k) {
      RandomStream future = rng;
      const FutureCounts fc = simulate_future_counts(truth, n_stars[k], future);
      double hi = -std::numeric_limits<double>::infinity();
      for (std::size_t q = 0; q < m; ++q) {
        lw[q] = detail::log_likelihood(logs[q], fc);
        hi = std::max(hi, lw[q]);
      }
      if (!std::isfinite(hi)) throw GuardError("every importance weight is zero");
      // Same accumulation order as enb_from_draws, so n_star = 0 reproduces
      // ENB under current information bit for bit.
      StrategyValues acc_nb{};
      double total = 0.0;
      double total_sq = 0.0;
      for (std::size_t q = 0; q < m; ++q) {
        const double w = std::exp(lw[q] - hi);
        if (w == 0.0) continue;
        for (std::size_t i = 1; i < kStrategyCount; ++i) acc_nb[i] += w * (nb[q][i] - nb[0][i]);
        total += w;
        total_sq += w * w;
      }
      StrategyValues updated{};
      for (std::size_t i = 1; i < kStrategyCount; ++i) updated[i] = nb[0][i] + acc_nb[i] / total;
      const double ess = total * total / total_sq;
      a.sample[k].add(max_value(updated) - best_current);
      a.underflow[k] += ess < 0.01 * static_cast<double>(m) ? 1 : 0;
      a.ess[k].add(ess);
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
    e.engine = "generic";
    e.enb_current = current;
    e.mc_se_evpi = acc.perfect.se();
    e.mc_se_evsi = acc.sample[k].se();
    set_headline(e, acc.perfect.mean, acc.sample[k].mean);
    e.diagnostics["underflow_fraction"] = static_cast<double>(acc.underflow[k]) / static_cast<double>(opt.n_sims);
    e.diagnostics["mean_ess"] = acc.ess[k].mean;
    e.diagnostics["n_draws"] = static_cast<double>(m);
    out.push_back(std::move(e));
  }
  return out;
}

inline VoiEstimate run_generic(const PosteriorDraws& d, Threshold z, std::int64_t n_star, const RunOptions& opt) {
  return run_generic_grid(d, z, {n_star}, opt).front();
}

// M independent draws from the conjugate posterior; draw k uses substream(seed, k).
inline PosteriorDraws sample_posterior_draws(const BetaPriorSet& priors, std::size_t m, std::uint64_t seed) {
  validate(priors);
  PosteriorDraws d;
  d.draws.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    RandomStream rng = substream(seed, k);
    d.draws.push_back(sample_theta(priors, rng));
  }
  return d;
}

inline PosteriorDraws parse_draws_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) detail::strip_bom(line);
    have_header = !detail::blank(line);
  }
  if (!have_header) throw DataError("empty draws file");
  const auto header = detail::split(line, ',');
  const std::array<std::string_view, 3> names = {"theta_p", "theta_se", "theta_sp"};
  std::array<std::size_t, 3> idx{};
  for (std::size_t c = 0; c < 3; ++c) {
    const auto it = std::find(header.begin(), header.end(), names[c]);
    if (it == header.end()) throw DataError("missing column '" + std::string(names[c]) + "'", line_no);
    idx[c] = static_cast<std::size_t>(it - header.begin());
  }
  const std::size_t needed = *std::max_element(idx.begin(), idx.end()) + 1;
  PosteriorDraws d;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    const auto fields = detail::split(line, ',');
    if (fields.size() < needed) throw DataError("too few fields", line_no);
    std::array<double, 3> v{};
    for (std::size_t c = 0; c < 3; ++c) {
      const auto x = detail::parse_double(fields[idx[c]]);
      if (!x || !is_probability(*x)) {
        throw DataError(std::string(names[c]) + " '" + std::string(fields[idx[c]]) + "' is not a probability", line_no);
      }
      v[c] = *x;
    }
    d.draws.push_back({v[0], v[1], v[2]});
  }
  if (d.draws.size() < 2) throw DataError("at least two posterior draws are required");
  return d;
}

inline void write_draws_csv(std::ostream& out, const PosteriorDraws& d) {
  out << "theta_p,theta_se,theta_sp\n";
  char buf[64];
  for (const auto& t : d.draws) {
    for (int c = 0; c < 3; ++c) {
      const double v = c == 0 ? t.prevalence : (c == 1 ? t.sensitivity : t.specificity);
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
      out.write(buf, ptr - buf);
      out << (c == 2 ? '\n' : ',');
    }
  }
}

}  // namespace evsi
