#pragma once

// Deterministic random streams and the samplers the Monte Carlo engines use.
//
// A stream is keyed by (seed, stream_id). Engines give every iteration its own
// stream_id, so results depend only on the seed and never on how iterations
// are scheduled across threads. The generator is xoshiro256** seeded through
// SplitMix64; every sampler below is implemented here on top of the raw 64-bit
// output, so sequences are identical on any platform with IEEE doubles (up to
// libm rounding in log/exp/cos).

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "evsi/errors.hpp"

namespace evsi {

namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  std::uint64_t s = x;
  return splitmix64(s);
}

inline constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

// Derives an independent seed from a parent seed and a tag. Used to give
// distinct sub-computations (repetitions, shuffles) their own seed space.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return detail::mix64(detail::mix64(seed) ^ detail::mix64(tag + 0x632BE59BD9B4E019ULL));
}

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
      : seed_(seed), stream_id_(stream_id) {
    std::uint64_t sm = detail::mix64(seed) ^ detail::mix64(~stream_id);
    sm = detail::mix64(sm + stream_id);
    for (auto& w : s_) w = detail::splitmix64(sm);
  }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = detail::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  // Unbiased integer in [0, n), Lemire's multiply-shift with rejection.
  std::uint64_t uniform_index(std::uint64_t n) noexcept {
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(next_u64()) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  friend bool operator==(const RandomStream&, const RandomStream&) = default;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> s_{};
};

inline RandomStream substream(std::uint64_t seed, std::uint64_t stream_id) noexcept {
  return RandomStream(seed, stream_id);
}

inline double sample_exponential(RandomStream& rng) noexcept { return -std::log(rng.uniform_open()); }

// Box-Muller, one variate per call.
inline double sample_normal(RandomStream& rng) noexcept {
  const double u1 = rng.uniform_open();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace detail {

// Marsaglia-Tsang for shape >= 1.
inline double gamma_shape_ge1(double shape, RandomStream& rng) noexcept {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = sample_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform_open();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace detail

// Log of a Gamma(shape, 1) variate. Stays finite for tiny shapes, where the
// variate itself underflows.
inline double sample_log_gamma(double shape, RandomStream& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("gamma shape must be positive");
  if (shape >= 1.0) return std::log(detail::gamma_shape_ge1(shape, rng));
  const double g = detail::gamma_shape_ge1(shape + 1.0, rng);
  return std::log(g) + std::log(rng.uniform_open()) / shape;
}

inline double sample_gamma(double shape, RandomStream& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) throw DomainError("gamma shape must be positive");
  if (shape >= 1.0) return detail::gamma_shape_ge1(shape, rng);
  return std::exp(sample_log_gamma(shape, rng));
}

inline double sample_beta(double alpha, double beta, RandomStream& rng) {
  if (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw DomainError("beta parameters must be positive and finite (improper Beta(0,0) is not supported)");
  }
  if (alpha >= 1.0 && beta >= 1.0) {
    const double x = detail::gamma_shape_ge1(alpha, rng);
    const double y = detail::gamma_shape_ge1(beta, rng);
    return x / (x + y);
  }
  const double lx = sample_log_gamma(alpha, rng);
  const double ly = sample_log_gamma(beta, rng);
  // x/(x+y) = 1/(1+exp(ly-lx)), evaluated without forming x or y.
  const double d = ly - lx;
  if (d > 0.0) {
    const double e = std::exp(-d);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(d));
}

namespace detail {

// Tail of Stirling's series, log(k!) - [(k+1/2)log(k+1) - (k+1) + log(2pi)/2].
inline double stirling_tail(double k) noexcept {
  static constexpr std::array<double, 10> table = {
      0.08106146679532726, 0.04134069595540929, 0.02767792568499834, 0.02079067210376509,
      0.01664469118982119, 0.01387612882307075, 0.01189670994589177, 0.01041126526197209,
      0.009255462182712733, 0.008330563433362871};
  if (k <= 9.0) return table[static_cast<std::size_t>(k)];
  const double kp1sq = (k + 1.0) * (k + 1.0);
  return (1.0 / 12.0 - (1.0 / 360.0 - 1.0 / 1260.0 / kp1sq) / kp1sq) / (k + 1.0);
}

// Sequential inversion; expected cost O(n p). Requires p <= 1/2.
inline std::int64_t binomial_inversion(std::int64_t n, double p, RandomStream& rng) noexcept {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = static_cast<double>(n + 1) * s;
  const double r0 = std::pow(q, static_cast<double>(n));
  for (;;) {
    double r = r0;
    double u = rng.uniform();
    std::int64_t x = 0;
    while (u > r) {
      u -= r;
      ++x;
      if (x > n) break;
      r *= a / static_cast<double>(x) - s;
    }
    if (x <= n) return x;
  }
}

// Hormann's BTRS transformed rejection with squeeze. Requires p <= 1/2 and
// n p >= 10.
inline std::int64_t binomial_btrs(std::int64_t n, double p, RandomStream& rng) noexcept {
  const double count = static_cast<double>(n);
  const double stddev = std::sqrt(count * p * (1.0 - p));
  const double b = 1.15 + 2.53 * stddev;
  const double a = -0.0873 + 0.0248 * b + 0.01 * p;
  const double c = count * p + 0.5;
  const double v_r = 0.92 - 4.2 / b;
  const double r = p / (1.0 - p);
  const double alpha = (2.83 + 5.1 / b) * stddev;
  const double m = std::floor((count + 1.0) * p);
  for (;;) {
    const double u = rng.uniform() - 0.5;
    double v = rng.uniform_open();
    const double us = 0.5 - std::fabs(u);
    const double k = std::floor((2.0 * a / us + b) * u + c);
    if (k < 0.0 || k > count) continue;
    if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
    v = std::log(v * alpha / (a / (us * us) + b));
    const double bound = (m + 0.5) * std::log((m + 1.0) / (r * (count - m + 1.0))) +
                         (count + 1.0) * std::log((count - m + 1.0) / (count - k + 1.0)) +
                         (k + 0.5) * std::log(r * (count - k + 1.0) / (k + 1.0)) +
                         stirling_tail(m) + stirling_tail(count - m) - stirling_tail(k) -
                         stirling_tail(count - k);
    if (v <= bound) return static_cast<std::int64_t>(k);
  }
}

}  // namespace detail

inline std::int64_t sample_binomial(std::int64_t trials, double p, RandomStream& rng) {
  if (trials < 0) throw DomainError("binomial trials must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial probability must lie in [0,1]");
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  const bool flip = p > 0.5;
  const double pp = flip ? 1.0 - p : p;
  const std::int64_t x = static_cast<double>(trials) * pp < 10.0
                             ? detail::binomial_inversion(trials, pp, rng)
                             : detail::binomial_btrs(trials, pp, rng);
  return flip ? trials - x : x;
}

// Bayesian-bootstrap weights: a Dirichlet(1, ..., 1) draw.
inline std::vector<double> dirichlet_weights(std::size_t n, RandomStream& rng) {
  if (n == 0) throw DomainError("weight vector length must be at least 1");
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = sample_exponential(rng);
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

// Ordinary-bootstrap weights: resample counts of n draws with replacement,
// scaled by 1/n.
inline std::vector<double> multinomial_weights(std::size_t n, RandomStream& rng) {
  if (n == 0) throw DomainError("weight vector length must be at least 1");
  std::vector<std::uint32_t> counts(n, 0);
  for (std::size_t i = 0; i < n; ++i) ++counts[rng.uniform_index(n)];
  std::vector<double> w(n);
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = counts[i] * inv;
  return w;
}

}  // namespace evsi
