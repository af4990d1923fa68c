#pragma once

// Exact EVPI and EVSI for discrete priors over theta, by exhaustive
// enumeration of the future study's sufficient statistics
// (events, true positives, true negatives). No randomness.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "evsi/betabin.hpp"
#include "evsi/errors.hpp"
#include "evsi/net_benefit.hpp"

namespace evsi {

struct Atom {
  ThetaTriplet theta;
  double probability = 0.0;
};

struct DiscretePrior {
  std::vector<Atom> atoms;
};

inline void validate(const DiscretePrior& p) {
  if (p.atoms.empty()) throw DomainError("discrete prior needs at least one atom");
  double total = 0.0;
  for (const auto& a : p.atoms) {
    validate(a.theta);
    if (!(a.probability > 0.0)) throw DomainError("atom probabilities must be positive");
    total += a.probability;
  }
  if (std::fabs(total - 1.0) > 1e-12) throw DomainError("atom probabilities must sum to 1");
}

inline StrategyValues enb_exact(const DiscretePrior& p, Threshold z) {
  validate(p);
  StrategyValues enb{};
  for (const auto& a : p.atoms) {
    const StrategyValues nb = net_benefits(a.theta, z);
    for (std::size_t i = 0; i < kStrategyCount; ++i) enb[i] += a.probability * nb[i];
  }
  return enb;
}

// Sum over atoms of p * (max_i NB_i - NB_best), which is nonnegative term by
// term.
inline double evpi_exact(const DiscretePrior& p, Threshold z) {
  const auto star = static_cast<std::size_t>(best_strategy(enb_exact(p, z)));
  double total = 0.0;
  for (const auto& a : p.atoms) {
    const StrategyValues nb = net_benefits(a.theta, z);
    total += a.probability * (max_value(nb) - nb[star]);
  }
  return total;
}

inline constexpr double kOracleOutcomeLimit = 1e6;

// Number of (events, true positives, true negatives) outcomes for a future
// study of size n_star.
inline double oracle_outcome_count(std::int64_t n_star) noexcept {
  double count = 0.0;
  for (std::int64_t pos = 0; pos <= n_star; ++pos) {
    count += static_cast<double>(pos + 1) * static_cast<double>(n_star - pos + 1);
  }
  return count;
}

namespace detail {

// pmf(x; m, p) for x = 0..m via log-gamma.
inline void binomial_pmf_row(std::int64_t m, double p, const std::vector<double>& log_fact, double* out) {
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  for (std::int64_t x = 0; x <= m; ++x) {
    double l = log_fact[m] - log_fact[x] - log_fact[m - x];
    if (x > 0) l += static_cast<double>(x) * lp;
    if (m - x > 0) l += static_cast<double>(m - x) * lq;
    out[x] = std::exp(l);
  }
}

}  // namespace detail

// Exact EVSI: sum over outcomes o of max_i a_i(o) - a_best(o), with
// a_i(o) = sum_k p_k P(o | theta_k) NB_i(theta_k). Each term is nonnegative,
// and the outcome probabilities sum to one, so this equals
// E_o[max_i E[NB_i | o]] - max_i E[NB_i].
inline double evsi_exact(const DiscretePrior& p, Threshold z, std::int64_t n_star) {
  validate(p);
  if (n_star < 0) throw DomainError("future sample size must be nonnegative");
  const double n_outcomes = oracle_outcome_count(n_star);
  if (n_outcomes > kOracleOutcomeLimit) {
    throw GuardError("enumeration needs " + std::to_string(static_cast<long long>(n_outcomes)) +
                     " outcomes, more than the limit of " + std::to_string(static_cast<long long>(kOracleOutcomeLimit)));
  }
  const auto star = static_cast<std::size_t>(best_strategy(enb_exact(p, z)));
  const auto n = static_cast<std::size_t>(n_star);

  std::vector<double> log_fact(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) log_fact[k] = std::lgamma(static_cast<double>(k) + 1.0);

  // Outcome lattice in (pos, tp, tn) lexicographic order.
  std::vector<std::size_t> offset(n + 1);
  std::size_t cells = 0;
  for (std::size_t pos = 0; pos <= n; ++pos) {
    offset[pos] = cells;
    cells += (pos + 1) * (n - pos + 1);
  }
  std::vector<double> a1(cells, 0.0);
  std::vector<double> a2(cells, 0.0);

  std::vector<double> pmf_pos(n + 1);
  std::vector<double> pmf_tp(n + 1);
  std::vector<double> pmf_tn(n + 1);
  for (const auto& atom : p.atoms) {
    const StrategyValues nb = net_benefits(atom.theta, z);
    detail::binomial_pmf_row(n_star, atom.theta.prevalence, log_fact, pmf_pos.data());
    for (std::size_t pos = 0; pos <= n; ++pos) {
      const double w_pos = atom.probability * pmf_pos[pos];
      if (w_pos == 0.0) continue;
      detail::binomial_pmf_row(static_cast<std::int64_t>(pos), atom.theta.sensitivity, log_fact, pmf_tp.data());
      detail::binomial_pmf_row(static_cast<std::int64_t>(n - pos), atom.theta.specificity, log_fact, pmf_tn.data());
      const std::size_t neg = n - pos;
      for (std::size_t tp = 0; tp <= pos; ++tp) {
        const double w_tp = w_pos * pmf_tp[tp];
        if (w_tp == 0.0) continue;
        double* r1 = &a1[offset[pos] + tp * (neg + 1)];
        double* r2 = &a2[offset[pos] + tp * (neg + 1)];
        for (std::size_t tn = 0; tn <= neg; ++tn) {
          const double w = w_tp * pmf_tn[tn];
          r1[tn] += w * nb[1];
          r2[tn] += w * nb[2];
        }
      }
    }
  }

  double total = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    const StrategyValues a{0.0, a1[c], a2[c]};
    total += max_value(a) - a[star];
  }
  return total;
}

// Gauss-Legendre nodes and weights on [0, 1].
inline void gauss_legendre_unit(std::size_t order, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(order, 0.0);
  weights.assign(order, 0.0);
  const auto n = static_cast<double>(order);
  for (std::size_t i = 0; i < order; ++i) {
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= order; ++k) {
        const auto kd = static_cast<double>(k);
        const double p2 = ((2.0 * kd - 1.0) * x * p1 - (kd - 1.0) * p0) / kd;
        p0 = p1;
        p1 = p2;
      }
      if (order == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::fabs(dx) < 1e-16) break;
    }
    nodes[i] = 0.5 * (1.0 - x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
  }
}

// Product-grid discretisation of three independent beta distributions,
// `order` Gauss-Legendre nodes per component. Intended for parameters >= 1,
// where the densities are bounded.
inline DiscretePrior quadrature_prior(const BetaPriorSet& priors, std::size_t order) {
  validate(priors);
  if (order < 1) throw DomainError("quadrature order must be positive");
  std::vector<double> x;
  std::vector<double> w;
  gauss_legendre_unit(order, x, w);
  auto axis = [&](const BetaParams& b) {
    std::vector<double> mass(order);
    double total = 0.0;
    for (std::size_t i = 0; i < order; ++i) {
      mass[i] = w[i] * std::exp((b.alpha - 1.0) * std::log(x[i]) + (b.beta - 1.0) * std::log1p(-x[i]));
      total += mass[i];
    }
    for (auto& m : mass) m /= total;
    return mass;
  };
  const auto mp = axis(priors.prevalence);
  const auto mse = axis(priors.sensitivity);
  const auto msp = axis(priors.specificity);
  DiscretePrior out;
  out.atoms.reserve(order * order * order);
  for (std::size_t i = 0; i < order; ++i) {
    for (std::size_t j = 0; j < order; ++j) {
      for (std::size_t k = 0; k < order; ++k) {
        const double prob = mp[i] * mse[j] * msp[k];
        if (prob > 0.0) out.atoms.push_back({{x[i], x[j], x[k]}, prob});
      }
    }
  }
  double total = 0.0;
  for (const auto& a : out.atoms) total += a.probability;
  for (auto& a : out.atoms) a.probability /= total;
  return out;
}

}  // namespace evsi
