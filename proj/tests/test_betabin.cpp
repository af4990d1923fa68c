#include <catch_amalgamated.hpp>

#include <cmath>

#include "evsi/betabin.hpp"
#include "evsi/oracle.hpp"
#include "evsi/synth.hpp"
#include "support.hpp"

using namespace evsi;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

double combined(double a, double b) { return std::sqrt(a * a + b * b); }

}  // namespace

TEST_CASE("priors from a sample") {
  const auto p = priors_from_sample({9, 1, 60, 30, std::nullopt}, flat_priors());
  CHECK(p.prevalence == BetaParams{11, 91});
  CHECK(p.sensitivity == BetaParams{10, 2});
  CHECK(p.specificity == BetaParams{61, 31});
  const BetaPriorSet base{{2, 3}, {4, 5}, {6, 7}};
  CHECK(priors_from_sample({0, 0, 0, 0, std::nullopt}, base) == base);
  const auto none = priors_from_sample({0, 0, 12, 5, std::nullopt}, base);
  CHECK(none.prevalence == BetaParams{2, 3 + 17});
  CHECK_THROWS_AS(priors_from_sample({0, 0, 0, 0, std::nullopt}, {{0, 1}, {1, 1}, {1, 1}}), DomainError);
}

TEST_CASE("prior validation rejects improper parameters") {
  CHECK_THROWS_AS(validate(BetaPriorSet{{0, 0}, {1, 1}, {1, 1}}), DomainError);
  CHECK_THROWS_AS(validate(BetaPriorSet{{1, 1}, {-1, 1}, {1, 1}}), DomainError);
  CHECK_NOTHROW(validate(vanishing_priors()));
}

TEST_CASE("expected net benefit under current information") {
  const BetaPriorSet p{{8, 92}, {9, 1}, {6, 4}};
  const auto enb = enb_current(p, Threshold(0.02));
  CHECK_THAT(enb[1], WithinAbs(0.0644898, 5e-8));
  CHECK(enb[0] == 0.0);

  const BetaPriorSet at_z{{2, 98}, {1, 1}, {1, 1}};
  CHECK_THAT(enb_current(at_z, Threshold(0.02))[2], WithinAbs(0.0, 1e-15));

  const BetaPriorSet perfect{{3, 7}, {1e9, 1}, {1e9, 1}};
  CHECK_THAT(enb_current(perfect, Threshold(0.1))[1], WithinAbs(0.3, 1e-8));

  // Product of independent means: matches a fine quadrature of the priors.
  const BetaPriorSet q{{3, 7}, {8, 2}, {6, 4}};
  const auto exact = enb_exact(quadrature_prior(q, 40), Threshold(0.2));
  const auto analytic = enb_current(q, Threshold(0.2));
  for (int i = 0; i < 3; ++i) CHECK_THAT(exact[i], WithinAbs(analytic[i], 1e-12));
}

TEST_CASE("posterior mean update") {
  const auto t = posterior_mean_update(flat_priors(), make_future_counts(10, 3, 2, 5));
  CHECK_THAT(t.prevalence, WithinAbs(4.0 / 12.0, 1e-15));
  CHECK_THAT(t.sensitivity, WithinAbs(3.0 / 5.0, 1e-15));
  CHECK_THAT(t.specificity, WithinAbs(6.0 / 9.0, 1e-15));

  const BetaPriorSet p{{2, 5}, {3, 1}, {4, 4}};
  const auto same = posterior_mean_update(p, make_future_counts(0, 0, 0, 0));
  CHECK(same == prior_means(p));

  const auto big = posterior_mean_update(flat_priors(), make_future_counts(10000000, 1000000, 800000, 6300000));
  CHECK_THAT(big.prevalence, WithinAbs(0.1, 1e-6));
  CHECK_THAT(big.sensitivity, WithinAbs(0.8, 1e-6));
  CHECK_THAT(big.specificity, WithinAbs(0.7, 1e-6));
}

TEST_CASE("future counts") {
  RandomStream r = substream(1, 0);
  CHECK(simulate_future_counts({0.3, 0.4, 0.5}, 0, r) == FutureCounts{});
  const auto sure = simulate_future_counts({1.0, 1.0, 0.3}, 5, r);
  CHECK(sure.n_pos == 5);
  CHECK(sure.n_tp == 5);
  const auto half = simulate_future_counts({0.5, 0.5, 0.5}, 100000, r);
  CHECK(std::fabs(half.n_pos / 1e5 - 0.5) < 0.005);
  for (int i = 0; i < 1000; ++i) {
    const auto fc = simulate_future_counts({0.2, 0.7, 0.9}, 37, r);
    REQUIRE_NOTHROW(validate(fc));
  }
  CHECK_THROWS_AS(make_future_counts(3, 4, 0, 0), DomainError);
  CHECK_THROWS_AS(simulate_future_counts({0.2, 0.7, 0.9}, -1, r), DomainError);
}

TEST_CASE("no future data carries no information") {
  const BetaPriorSet p{{11, 91}, {10, 2}, {61, 31}};
  for (double z : {0.01, 0.02, 0.1, 0.5}) {
    const auto e = run_betabin(p, Threshold(z), 0, {20000, 3, 1});
    CHECK(e.evsi_raw == 0.0);
    CHECK(e.evsi == 0.0);
    CHECK(e.mc_se_evsi == 0.0);
  }
}

TEST_CASE("point-mass priors give no decision uncertainty") {
  const BetaPriorSet p{{8e8, 9.2e9}, {9e9, 1e9}, {6e9, 4e9}};
  const auto e = run_betabin(p, Threshold(0.02), 500, {20000, 5, 1});
  CHECK(std::fabs(e.evpi_raw) <= 3.0 * e.mc_se_evpi + 1e-15);
  CHECK(std::fabs(e.evsi_raw) <= 3.0 * e.mc_se_evsi + 1e-15);
}

TEST_CASE("grid runs equal standalone runs and ignore worker count") {
  const BetaPriorSet p{{11, 91}, {10, 2}, {61, 31}};
  const std::vector<std::int64_t> ns{0, 10, 100, 1000};
  const auto grid = run_betabin_grid(p, Threshold(0.1), ns, {30000, 17, 1});
  const auto wide = run_betabin_grid(p, Threshold(0.1), ns, {30000, 17, 8});
  for (std::size_t k = 0; k < ns.size(); ++k) {
    const auto single = run_betabin(p, Threshold(0.1), ns[k], {30000, 17, 1});
    CHECK(single.evsi_raw == grid[k].evsi_raw);
    CHECK(single.mc_se_evsi == grid[k].mc_se_evsi);
    CHECK(wide[k].evsi_raw == grid[k].evsi_raw);
    CHECK(wide[k].evpi_raw == grid[k].evpi_raw);
    CHECK(wide[k].mc_se_evsi == grid[k].mc_se_evsi);
    CHECK(grid[k].engine == "betabin");
    CHECK(grid[k].seed == 17);
  }
  const auto other = run_betabin(p, Threshold(0.1), 100, {30000, 18, 1});
  CHECK(other.evsi_raw != grid[2].evsi_raw);
}

TEST_CASE("ordering properties on a synthetic case study") {
  const ValidationSample s = synthesize({500, 0.086, 1.2, 2023});
  const std::vector<std::int64_t> ns{0, 125, 250, 500, 1000, 2000, 4000, 8000, 100000};
  for (double z : {0.01, 0.02}) {
    const auto p = priors_from_sample(confusion_at_threshold(s, Threshold(z)), flat_priors());
    const auto est = run_betabin_grid(p, Threshold(z), ns, {100000, 2023, 1});
    CHECK(est.front().evsi_raw == 0.0);
    for (std::size_t k = 0; k < est.size(); ++k) {
      INFO("z=" << z << " n*=" << ns[k]);
      CHECK(est[k].evsi_raw <= est[k].evpi_raw + 3.0 * combined(est[k].mc_se_evpi, est[k].mc_se_evsi));
      if (k > 0) {
        CHECK(est[k].evsi_raw >= est[k - 1].evsi_raw - 3.0 * combined(est[k].mc_se_evsi, est[k - 1].mc_se_evsi));
      }
      CHECK(est[k].evsi >= 0.0);
      CHECK(est[k].evpi >= 0.0);
    }
    const auto& last = est.back();
    CHECK(std::fabs(last.evpi_raw - last.evsi_raw) <= 3.0 * combined(last.mc_se_evpi, last.mc_se_evsi));
  }
}

TEST_CASE("case-study magnitude at z = 0.02") {
  const ValidationSample s = synthesize({500, 0.086, 1.2, 2023});
  const auto p = priors_from_sample(confusion_at_threshold(s, Threshold(0.02)), flat_priors());
  const auto e = run_betabin(p, Threshold(0.02), 500, {1000000, 2023, 1});
  CHECK(e.evsi > 1e-5);
  CHECK(e.evsi < 1e-2);
}

TEST_CASE("agreement with exact enumeration on a discretised prior") {
  const BetaPriorSet p{{3, 7}, {8, 2}, {6, 4}};
  const DiscretePrior prior = quadrature_prior(p, 40);
  for (double z : {0.2, 0.5}) {
    const std::vector<std::int64_t> ns{1, 3, 6};
    const auto est = run_betabin_grid(p, Threshold(z), ns, {100000, 9, 1});
    const double evpi = evpi_exact(prior, Threshold(z));
    INFO("z=" << z);
    CHECK(std::fabs(est[0].evpi_raw - evpi) <= 3.0 * est[0].mc_se_evpi);
    for (std::size_t k = 0; k < ns.size(); ++k) {
      const double exact = evsi_exact(prior, Threshold(z), ns[k]);
      INFO("n*=" << ns[k] << " exact=" << exact << " mc=" << est[k].evsi_raw);
      CHECK(std::fabs(est[k].evsi_raw - exact) <= 3.0 * est[k].mc_se_evsi);
    }
  }
}

TEST_CASE("engine argument checks") {
  CHECK_THROWS_AS(run_betabin(flat_priors(), Threshold(0.1), 10, {1, 1, 1}), DomainError);
  CHECK_THROWS_AS(run_betabin(flat_priors(), Threshold(0.1), -1, {10, 1, 1}), DomainError);
  CHECK_THROWS_AS(run_betabin({{0, 1}, {1, 1}, {1, 1}}, Threshold(0.1), 1, {10, 1, 1}), DomainError);
}
