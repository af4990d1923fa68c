#pragma once

// Individual-level validation data: ingestion, confusion counts at a
// threshold, plug-in estimates, and decision curves with bootstrap intervals.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "evsi/errors.hpp"
#include "evsi/net_benefit.hpp"
#include "evsi/parallel.hpp"
#include "evsi/random.hpp"

namespace evsi {

struct Record {
  double risk = 0.0;
  int outcome = 0;

  friend bool operator==(const Record&, const Record&) = default;
};

struct ValidationSample {
  std::vector<Record> records;

  std::size_t size() const noexcept { return records.size(); }
};

inline void validate(const ValidationSample& s) {
  if (s.records.empty()) throw DataError("empty sample");
  for (std::size_t i = 0; i < s.records.size(); ++i) {
    const auto& r = s.records[i];
    if (!is_probability(r.risk)) throw DataError("record " + std::to_string(i) + ": risk outside [0,1]");
    if (r.outcome != 0 && r.outcome != 1) throw DataError("record " + std::to_string(i) + ": outcome not 0/1");
  }
}

struct ConfusionCounts {
  std::int64_t n_tp = 0;
  std::int64_t n_fn = 0;
  std::int64_t n_tn = 0;
  std::int64_t n_fp = 0;
  std::optional<Threshold> z;

  std::int64_t events() const noexcept { return n_tp + n_fn; }
  std::int64_t non_events() const noexcept { return n_tn + n_fp; }
  std::int64_t total() const noexcept { return n_tp + n_fn + n_tn + n_fp; }
};

// Cell totals with real-valued (bootstrap-weighted) membership.
struct WeightedCounts {
  double tp = 0.0;
  double fn = 0.0;
  double tn = 0.0;
  double fp = 0.0;
};

struct CsvOptions {
  std::string risk_column = "risk";
  std::string outcome_column = "outcome";
  char delimiter = ',';
};

namespace detail {

inline std::string_view trim(std::string_view s) noexcept {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

inline std::optional<double> parse_double(std::string_view s) noexcept {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v)) return std::nullopt;
  return v;
}

inline bool blank(std::string_view s) noexcept { return trim(s).empty(); }

inline void strip_bom(std::string& line) {
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
}

}  // namespace detail

// Parses a header-prefixed delimited file. Blank lines are skipped; extra
// columns are ignored.
inline ValidationSample parse_validation_csv(std::istream& in, const CsvOptions& opt = {}) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    ++line_no;
    if (line_no == 1) detail::strip_bom(line);
    have_header = !detail::blank(line);
  }
  if (!have_header) throw DataError("empty file");

  const auto header = detail::split(line, opt.delimiter);
  std::optional<std::size_t> risk_idx;
  std::optional<std::size_t> outcome_idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == opt.risk_column && !risk_idx) risk_idx = i;
    if (header[i] == opt.outcome_column && !outcome_idx) outcome_idx = i;
  }
  if (!risk_idx) throw DataError("missing column '" + opt.risk_column + "'", line_no);
  if (!outcome_idx) throw DataError("missing column '" + opt.outcome_column + "'", line_no);
  const std::size_t needed = std::max(*risk_idx, *outcome_idx) + 1;

  ValidationSample sample;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    const auto fields = detail::split(line, opt.delimiter);
    if (fields.size() < needed) throw DataError("too few fields", line_no);
    const auto risk = detail::parse_double(fields[*risk_idx]);
    if (!risk) throw DataError("non-numeric risk '" + std::string(fields[*risk_idx]) + "'", line_no);
    if (!is_probability(*risk)) throw DataError("risk " + std::string(fields[*risk_idx]) + " outside [0,1]", line_no);
    const auto outcome = detail::parse_double(fields[*outcome_idx]);
    if (!outcome || (*outcome != 0.0 && *outcome != 1.0)) {
      throw DataError("outcome '" + std::string(fields[*outcome_idx]) + "' is not 0 or 1", line_no);
    }
    sample.records.push_back({*risk, static_cast<int>(*outcome)});
  }
  if (sample.records.empty()) throw DataError("empty sample");
  return sample;
}

inline void write_validation_csv(std::ostream& out, const ValidationSample& s) {
  out << "risk,outcome\n";
  char buf[64];
  for (const auto& r : s.records) {
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, r.risk);
    out.write(buf, ptr - buf);
    out << ',' << r.outcome << '\n';
  }
}

// Classifies risk >= z as positive.
inline ConfusionCounts confusion_at_threshold(const ValidationSample& s, Threshold z) {
  ConfusionCounts c;
  c.z = z;
  for (const auto& r : s.records) {
    const bool positive = r.risk >= z.value();
    if (r.outcome == 1) {
      ++(positive ? c.n_tp : c.n_fn);
    } else {
      ++(positive ? c.n_fp : c.n_tn);
    }
  }
  return c;
}

inline ThetaTriplet theta_hat(const ConfusionCounts& c) {
  if (c.n_tp < 0 || c.n_fn < 0 || c.n_tn < 0 || c.n_fp < 0) throw DomainError("negative counts");
  if (c.events() == 0) throw DataError("no events");
  if (c.non_events() == 0) throw DataError("no non-events");
  const auto n = static_cast<double>(c.total());
  return {static_cast<double>(c.events()) / n,
          static_cast<double>(c.n_tp) / static_cast<double>(c.events()),
          static_cast<double>(c.n_tn) / static_cast<double>(c.non_events())};
}

// How to fill a sensitivity or specificity whose denominator is zero.
enum class EmptyClassRule {
  zero,        // 0/0 -> 0; the component then has no effect on NB.
  flat_prior,  // Beta(1,1)-smoothed: (0+1)/(0+2).
};

// Plug-in theta from weighted cells; marks `degenerate` when a class is empty.
inline ThetaTriplet theta_from_weighted(const WeightedCounts& w, EmptyClassRule rule, bool* degenerate = nullptr) {
  const double events = w.tp + w.fn;
  const double non_events = w.tn + w.fp;
  const double total = events + non_events;
  if (!(total > 0.0)) throw DataError("empty sample");
  const double fill = rule == EmptyClassRule::zero ? 0.0 : 0.5;
  bool degen = false;
  ThetaTriplet t;
  t.prevalence = events / total;
  if (events > 0.0) {
    t.sensitivity = w.tp / events;
  } else {
    t.sensitivity = fill;
    degen = true;
  }
  if (non_events > 0.0) {
    t.specificity = w.tn / non_events;
  } else {
    t.specificity = fill;
    degen = true;
  }
  if (degenerate != nullptr) *degenerate = degen;
  return t;
}

inline WeightedCounts to_weighted(const ConfusionCounts& c) noexcept {
  return {static_cast<double>(c.n_tp), static_cast<double>(c.n_fn), static_cast<double>(c.n_tn),
          static_cast<double>(c.n_fp)};
}

// R's default (type 7) sample quantile of already-sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct DecisionCurvePoint {
  double z = 0.0;
  StrategyValues nb{};
  double delta_nb = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
};

struct DecisionCurve {
  std::vector<DecisionCurvePoint> points;
  std::uint64_t n_boot = 0;
  std::uint64_t seed = 0;
  double ci_level = 0.95;
  // Bootstrap replicates (summed over thresholds) with an empty outcome class,
  // filled with Beta(1,1)-smoothed estimates.
  std::uint64_t degenerate_replicates = 0;
  // Thresholds whose point estimate needed the same smoothing.
  std::uint64_t smoothed_points = 0;
};

struct DecisionCurveOptions {
  std::uint64_t n_boot = 10000;
  std::uint64_t seed = 1;
  double ci_level = 0.95;
  unsigned workers = 1;
};

// Plug-in decision curve with percentile intervals on incremental NB from
// ordinary bootstrap resamples. Replicate b uses substream(seed, b).
inline DecisionCurve decision_curve(const ValidationSample& sample, const std::vector<Threshold>& thresholds,
                                    const DecisionCurveOptions& opt) {
  validate(sample);
  if (opt.n_boot < 2) throw DomainError("n_boot must be at least 2");
  if (!(opt.ci_level > 0.0 && opt.ci_level < 1.0)) throw DomainError("ci level must lie in (0,1)");
  if (thresholds.empty()) throw DomainError("threshold grid is empty");

  // Records sorted by risk; positives at z form a suffix.
  std::vector<Record> sorted = sample.records;
  std::stable_sort(sorted.begin(), sorted.end(), [](const Record& a, const Record& b) { return a.risk < b.risk; });
  const std::size_t n = sorted.size();
  std::vector<std::size_t> cut(thresholds.size());
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    const double z = thresholds[t].value();
    cut[t] = static_cast<std::size_t>(
        std::lower_bound(sorted.begin(), sorted.end(), z, [](const Record& r, double v) { return r.risk < v; }) -
        sorted.begin());
  }

  // Weighted cells at every threshold.
  auto cells_at = [&](const std::vector<double>& w, std::vector<WeightedCounts>& out) {
    std::vector<double> suffix_event(n + 1, 0.0);
    std::vector<double> suffix_non(n + 1, 0.0);
    for (std::size_t i = n; i-- > 0;) {
      suffix_event[i] = suffix_event[i + 1] + (sorted[i].outcome == 1 ? w[i] : 0.0);
      suffix_non[i] = suffix_non[i + 1] + (sorted[i].outcome == 1 ? 0.0 : w[i]);
    }
    out.resize(thresholds.size());
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      const double tp = suffix_event[cut[t]];
      const double fp = suffix_non[cut[t]];
      out[t] = {tp, suffix_event[0] - tp, suffix_non[0] - fp, fp};
    }
  };

  DecisionCurve curve;
  curve.n_boot = opt.n_boot;
  curve.seed = opt.seed;
  curve.ci_level = opt.ci_level;

  std::vector<WeightedCounts> cells;
  cells_at(std::vector<double>(n, 1.0), cells);
  for (std::size_t t = 0; t < thresholds.size(); ++t) {
    bool degen = false;
    const ThetaTriplet th = theta_from_weighted(cells[t], EmptyClassRule::flat_prior, &degen);
    curve.smoothed_points += degen ? 1 : 0;
    DecisionCurvePoint p;
    p.z = thresholds[t].value();
    p.nb = net_benefits(th, thresholds[t]);
    p.delta_nb = p.nb[1] - std::max(p.nb[0], p.nb[2]);
    curve.points.push_back(p);
  }

  // Replicate-major storage of incremental NB: replicates[t * n_boot + b].
  const std::size_t n_thr = thresholds.size();
  std::vector<double> replicates(n_thr * opt.n_boot);
  struct Count {
    std::uint64_t degenerate = 0;
    void merge(const Count& o) { degenerate += o.degenerate; }
  };
  const Count counted = parallel_accumulate(opt.n_boot, opt.workers, Count{}, [&](std::uint64_t b, Count& acc) {
    RandomStream rng = substream(opt.seed, b);
    const std::vector<double> w = multinomial_weights(n, rng);
    std::vector<WeightedCounts> rc;
    cells_at(w, rc);
    for (std::size_t t = 0; t < n_thr; ++t) {
      bool degen = false;
      const ThetaTriplet th = theta_from_weighted(rc[t], EmptyClassRule::flat_prior, &degen);
      acc.degenerate += degen ? 1 : 0;
      replicates[t * opt.n_boot + b] = incremental_nb(th, thresholds[t]);
    }
  });
  curve.degenerate_replicates = counted.degenerate;

  const double tail = (1.0 - opt.ci_level) / 2.0;
  for (std::size_t t = 0; t < n_thr; ++t) {
    std::vector<double> v(replicates.begin() + static_cast<std::ptrdiff_t>(t * opt.n_boot),
                          replicates.begin() + static_cast<std::ptrdiff_t>((t + 1) * opt.n_boot));
    std::sort(v.begin(), v.end());
    curve.points[t].ci_lo = quantile_sorted(v, tail);
    curve.points[t].ci_hi = quantile_sorted(v, 1.0 - tail);
  }
  return curve;
}

}  // namespace evsi
