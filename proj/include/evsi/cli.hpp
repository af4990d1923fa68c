#pragma once

// Command-line front end: dca, voi, sweep, synth and oracle-check.
//
// Exit codes: 0 success, 1 usage, 2 data error, 3 numerical guard.
// Output is assembled in memory and written through a temporary file plus
// rename, so a failing command never leaves a partial file behind.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evsi/betabin.hpp"
#include "evsi/bootstrap.hpp"
#include "evsi/dataset.hpp"
#include "evsi/errors.hpp"
#include "evsi/generic.hpp"
#include "evsi/oracle.hpp"
#include "evsi/report.hpp"
#include "evsi/sweep.hpp"
#include "evsi/synth.hpp"

namespace evsi::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kGuard = 3 };

inline constexpr std::uint64_t kDefaultSeed = 2023;
inline constexpr const char* kSeedEnv = "EVSI_SEED";

inline std::uint64_t default_seed() {
  if (const char* env = std::getenv(kSeedEnv); env != nullptr && *env != '\0') {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw DomainError(std::string(kSeedEnv) + " is not an unsigned integer");
  }
  return kDefaultSeed;
}

// "a,b,c" or "lo:hi:step" (inclusive, step > 0).
inline std::vector<double> parse_real_grid(const std::string& text) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    const auto parts = detail::split(text, ':');
    if (parts.size() != 3) throw DomainError("range must be lo:hi:step, got '" + text + "'");
    const auto lo = detail::parse_double(parts[0]);
    const auto hi = detail::parse_double(parts[1]);
    const auto step = detail::parse_double(parts[2]);
    if (!lo || !hi || !step || !(*step > 0.0) || *hi < *lo) throw DomainError("invalid range '" + text + "'");
    const auto count = static_cast<std::int64_t>(std::floor((*hi - *lo) / *step + 1e-9));
    for (std::int64_t i = 0; i <= count; ++i) {
      // Rounded to 12 decimals so 0.01:0.10:0.01 yields 0.03, not 0.030000000000000002.
      out.push_back(std::round((*lo + static_cast<double>(i) * *step) * 1e12) / 1e12);
    }
  } else {
    for (const auto& f : detail::split(text, ',')) {
      const auto v = detail::parse_double(f);
      if (!v) throw DomainError("not a number: '" + std::string(f) + "'");
      out.push_back(*v);
    }
  }
  if (out.empty()) throw DomainError("empty grid");
  return out;
}

inline std::vector<Threshold> parse_thresholds(const std::string& text) {
  std::vector<Threshold> out;
  for (double z : parse_real_grid(text)) out.emplace_back(z);
  return out;
}

inline std::vector<std::int64_t> parse_int_grid(const std::string& text) {
  std::vector<std::int64_t> out;
  for (double v : parse_real_grid(text)) {
    if (v < 0.0 || v != std::floor(v)) throw DomainError("expected nonnegative integers in '" + text + "'");
    out.push_back(static_cast<std::int64_t>(v));
  }
  return out;
}

inline Format parse_format(const std::string& f) {
  if (f == "csv") return Format::csv;
  if (f == "json") return Format::json;
  throw DomainError("unknown format '" + f + "'");
}

inline ValidationSample read_sample(const std::string& path, const CsvOptions& opt) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  try {
    return parse_validation_csv(in, opt);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
}

inline BetaParams beta_from_json(const nlohmann::json& j, const char* name) {
  try {
    return {j.at("alpha").get<double>(), j.at("beta").get<double>()};
  } catch (const nlohmann::json::exception&) {
    throw DataError(std::string("prior '") + name + "' needs numeric alpha and beta");
  }
}

inline bool has_beta_triplet(const nlohmann::json& j) {
  return j.is_object() && j.contains("prevalence") && j.contains("sensitivity") && j.contains("specificity");
}

inline BetaPriorSet beta_set_from_json(const nlohmann::json& j) {
  BetaPriorSet p{beta_from_json(j.at("prevalence"), "prevalence"), beta_from_json(j.at("sensitivity"), "sensitivity"),
                 beta_from_json(j.at("specificity"), "specificity")};
  try {
    validate(p);
  } catch (const DomainError& e) {
    throw DataError(e.what());
  }
  return p;
}

// Prior specification: either six parameters, or {"dataset": path, "base": {...}}
// whose priors are the base updated with the dataset's counts at each threshold.
struct PriorSpec {
  std::optional<BetaPriorSet> fixed;
  std::optional<ValidationSample> dataset;
  BetaPriorSet base = flat_priors();

  BetaPriorSet at(Threshold z) const {
    if (fixed) return *fixed;
    return priors_from_sample(confusion_at_threshold(*dataset, z), base);
  }
};

inline PriorSpec read_prior_spec(const std::string& path, const CsvOptions& csv) {
  const nlohmann::json j = read_json(path);
  PriorSpec spec;
  if (j.contains("base")) {
    if (!has_beta_triplet(j["base"])) throw DataError(path + ": 'base' needs prevalence, sensitivity, specificity");
    spec.base = beta_set_from_json(j["base"]);
  }
  if (j.contains("dataset")) {
    std::filesystem::path data = j["dataset"].get<std::string>();
    if (data.is_relative()) data = std::filesystem::path(path).parent_path() / data;
    spec.dataset = read_sample(data.string(), csv);
    return spec;
  }
  if (!has_beta_triplet(j)) throw DataError(path + ": expected six beta parameters or a dataset reference");
  spec.fixed = beta_set_from_json(j);
  return spec;
}

inline PosteriorDraws read_draws(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open draws file '" + path + "'");
  try {
    return parse_draws_csv(in);
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline DiscretePrior discrete_prior_from_json(const nlohmann::json& j) {
  DiscretePrior p;
  try {
    for (const auto& a : j.at("atoms")) {
      p.atoms.push_back({{a.at("theta_p").get<double>(), a.at("theta_se").get<double>(), a.at("theta_sp").get<double>()},
                         a.at("p").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed discrete prior: ") + e.what());
  }
  try {
    validate(p);
  } catch (const DomainError& e) {
    throw DataError(e.what());
  }
  return p;
}

// Atoms replicated in proportion to their probabilities when these share a
// denominator up to `max_denominator`; otherwise nullopt.
inline std::optional<PosteriorDraws> draws_from_atoms(const DiscretePrior& p, std::size_t max_denominator = 10000) {
  for (std::size_t d = 1; d <= max_denominator; ++d) {
    bool ok = true;
    for (const auto& a : p.atoms) {
      const double c = a.probability * static_cast<double>(d);
      if (std::fabs(c - std::round(c)) > 1e-9 * static_cast<double>(d) || std::round(c) < 1.0) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    PosteriorDraws draws;
    for (const auto& a : p.atoms) {
      const auto c = static_cast<std::size_t>(std::round(a.probability * static_cast<double>(d)));
      for (std::size_t i = 0; i < c; ++i) draws.draws.push_back(a.theta);
    }
    if (draws.draws.size() < 2) draws.draws.push_back(draws.draws.front());
    return draws;
  }
  return std::nullopt;
}

// M draws from a discrete prior, by inverse CDF on substream(seed, k).
inline PosteriorDraws sample_atoms(const DiscretePrior& p, std::size_t m, std::uint64_t seed) {
  PosteriorDraws d;
  for (std::size_t k = 0; k < m; ++k) {
    RandomStream rng = substream(seed, k);
    double u = rng.uniform();
    std::size_t i = 0;
    while (i + 1 < p.atoms.size() && u >= p.atoms[i].probability) u -= p.atoms[i++].probability;
    d.draws.push_back(p.atoms[i].theta);
  }
  return d;
}

// Writes `content` to `path` via a temporary sibling and a rename.
inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp.string() + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw DataError("cannot rename onto '" + path.string() + "': " + ec.message());
  }
}

// Rethrows an engine error with the grid point it came from.
template <class Fn>
auto at_grid_point(double z, std::int64_t n_star, Fn&& fn) -> decltype(fn()) {
  const std::string where = "z=" + detail::fmt("%.10g", z) + (n_star >= 0 ? ", n_star=" + std::to_string(n_star) : "");
  try {
    return fn();
  } catch (const DataError& e) {
    throw DataError(where + ": " + e.what());
  } catch (const GuardError& e) {
    throw GuardError(where + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + ": " + e.what());
  }
}

struct CommonConfig {
  std::uint64_t seed = kDefaultSeed;
  unsigned workers = 1;
  std::string out;
  std::string format = "csv";
  std::string risk_col = "risk";
  std::string outcome_col = "outcome";
  std::string delimiter = ",";

  CsvOptions csv() const {
    if (delimiter.size() != 1) throw DomainError("delimiter must be a single character");
    return {risk_col, outcome_col, delimiter.front()};
  }
};

struct DcaConfig {
  std::string input;
  std::string thresholds = "0.01:0.10:0.01";
  std::uint64_t n_boot = 10000;
  double ci_level = 0.95;
};

struct VoiConfig {
  std::string engine = "betabin";
  std::string input;
  std::string priors;
  std::string draws;
  std::size_t n_draws = 50000;
  std::string thresholds = "0.01:0.10:0.01";
  std::string n_star = "0,125,250,500,1000,2000,4000,8000";
  std::uint64_t n_sims = 0;  // 0: engine default
  std::string kind = "bayesian";
  double population = 1.0;
  double horizon = 1.0;
};

struct SweepConfig {
  std::string input;
  std::size_t master_n = 23034;
  double master_prevalence = 0.0679;
  double slope = 1.2;
  std::string sizes = "500,1000,2000,4000,8000";
  std::size_t reps = 100;
  std::string thresholds = "0.01,0.02";
  std::string n_star = "0,125,250,500,1000,2000,4000,8000";
  std::uint64_t n_sims = 100000;
  double population = 1.0;
  double horizon = 1.0;
};

struct SynthConfig {
  std::size_t n = 500;
  double prevalence = 0.086;
  double slope = 1.2;
};

struct OracleConfig {
  std::string priors;
  std::string thresholds = "0.02";
  std::string n_star = "0,1,2,4";
  std::uint64_t n_sims = 100000;
  std::string engines;
  std::size_t quadrature_order = 48;
  std::size_t n_draws = 50000;
  double inject_bias = 0.0;
};

inline std::uint64_t default_n_sims(const std::string& engine) { return engine == "betabin" ? 1000000 : 10000; }

inline std::vector<VoiRow> scale_rows(const std::vector<VoiEstimate>& est, const PopulationContext& ctx) {
  std::vector<VoiRow> rows;
  for (const auto& e : est) rows.push_back({e, scale(e.evsi, ctx, Threshold(e.z))});
  return rows;
}

inline std::string cmd_dca(const CommonConfig& c, const DcaConfig& d) {
  const ValidationSample sample = read_sample(d.input, c.csv());
  const auto thresholds = parse_thresholds(d.thresholds);
  const DecisionCurve curve = decision_curve(sample, thresholds, {d.n_boot, c.seed, d.ci_level, c.workers});
  std::ostringstream os;
  emit_decision_curve(os, curve, parse_format(c.format));
  return os.str();
}

inline std::vector<VoiEstimate> run_voi(const CommonConfig& c, const VoiConfig& v) {
  const auto thresholds = parse_thresholds(v.thresholds);
  const auto n_stars = parse_int_grid(v.n_star);
  const RunOptions run{v.n_sims == 0 ? default_n_sims(v.engine) : v.n_sims, c.seed, c.workers};
  std::vector<VoiEstimate> out;
  auto append = [&](std::vector<VoiEstimate> est) { out.insert(out.end(), est.begin(), est.end()); };

  if (v.engine == "betabin") {
    PriorSpec spec;
    if (!v.priors.empty()) {
      spec = read_prior_spec(v.priors, c.csv());
    } else if (!v.input.empty()) {
      spec.dataset = read_sample(v.input, c.csv());
    } else {
      throw DomainError("betabin engine needs --priors or --input");
    }
    for (const auto& z : thresholds) {
      append(at_grid_point(z.value(), -1, [&] { return run_betabin_grid(spec.at(z), z, n_stars, run); }));
    }
  } else if (v.engine == "bootstrap") {
    if (v.input.empty()) throw DomainError("bootstrap engine needs --input");
    const ValidationSample sample = read_sample(v.input, c.csv());
    BootstrapKind kind;
    if (v.kind == "bayesian") {
      kind = BootstrapKind::bayesian;
    } else if (v.kind == "ordinary") {
      kind = BootstrapKind::ordinary;
    } else {
      throw DomainError("unknown bootstrap kind '" + v.kind + "'");
    }
    for (const auto& z : thresholds) {
      append(at_grid_point(z.value(), -1, [&] { return run_bootstrap_grid(sample, z, n_stars, run, kind); }));
    }
  } else if (v.engine == "generic") {
    std::optional<PosteriorDraws> draws;
    PriorSpec spec;
    if (!v.draws.empty()) {
      draws = read_draws(v.draws);
    } else if (!v.priors.empty()) {
      spec = read_prior_spec(v.priors, c.csv());
    } else if (!v.input.empty()) {
      spec.dataset = read_sample(v.input, c.csv());
    } else {
      throw DomainError("generic engine needs --draws, --priors or --input");
    }
    for (const auto& z : thresholds) {
      append(at_grid_point(z.value(), -1, [&] {
        // Without a draws file, draws come from the conjugate posterior.
        const PosteriorDraws d =
            draws ? *draws : sample_posterior_draws(spec.at(z), v.n_draws, derive_seed(c.seed, 0x4452415753ULL));
        return run_generic_grid(d, z, n_stars, run);
      }));
    }
  } else {
    throw DomainError("unknown engine '" + v.engine + "'");
  }
  return out;
}

inline std::string cmd_voi(const CommonConfig& c, const VoiConfig& v) {
  const auto est = run_voi(c, v);
  std::ostringstream os;
  emit(os, scale_rows(est, {v.population, v.horizon}), parse_format(c.format));
  return os.str();
}

inline std::string cmd_synth(const CommonConfig& c, const SynthConfig& s) {
  const ValidationSample sample = synthesize({s.n, s.prevalence, s.slope, c.seed});
  std::ostringstream os;
  write_validation_csv(os, sample);
  return os.str();
}

struct SweepOutput {
  std::vector<std::pair<std::size_t, std::string>> curves;  // (n_current, content)
};

inline SweepOutput cmd_sweep(const CommonConfig& c, const SweepConfig& s) {
  ValidationSample master = s.input.empty()
                                ? synthesize({s.master_n, s.master_prevalence, s.slope, derive_seed(c.seed, 0x4D4153544552ULL)})
                                : read_sample(s.input, c.csv());
  SweepOptions opt;
  opt.sizes.clear();
  for (auto n : parse_int_grid(s.sizes)) opt.sizes.push_back(static_cast<std::size_t>(n));
  opt.thresholds = parse_thresholds(s.thresholds);
  opt.n_stars = parse_int_grid(s.n_star);
  opt.reps = s.reps;
  opt.run = {s.n_sims, c.seed, c.workers};
  const auto curves = run_sweep(master, opt);
  SweepOutput out;
  for (const auto& curve : curves) {
    std::ostringstream os;
    emit(os, scale_rows(curve.rows, {s.population, s.horizon}), parse_format(c.format));
    out.curves.emplace_back(curve.n_current, os.str());
  }
  return out;
}

struct OracleCheckRow {
  std::string engine;
  double z = 0.0;
  std::int64_t n_star = 0;
  std::string quantity;
  double exact = 0.0;
  double estimate = 0.0;
  double se = 0.0;

  double deviation_in_se() const {
    const double diff = std::fabs(estimate - exact);
    if (se > 0.0) return diff / se;
    return diff <= 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
  }
};

using OracleEngine = std::function<std::vector<VoiEstimate>(Threshold, const std::vector<std::int64_t>&)>;

// Compares each engine's raw EVPI/EVSI with the exact values. Passing means
// every deviation is within 3 MC standard errors.
inline std::vector<OracleCheckRow> oracle_check(const DiscretePrior& prior, const std::vector<Threshold>& thresholds,
                                                const std::vector<std::int64_t>& n_stars,
                                                const std::vector<std::pair<std::string, OracleEngine>>& engines) {
  std::vector<OracleCheckRow> rows;
  for (const auto& z : thresholds) {
    const double evpi = evpi_exact(prior, z);
    std::vector<double> evsi;
    for (auto n : n_stars) evsi.push_back(evsi_exact(prior, z, n));
    for (const auto& [name, engine] : engines) {
      const auto est = engine(z, n_stars);
      for (std::size_t k = 0; k < n_stars.size(); ++k) {
        if (k == 0) rows.push_back({name, z.value(), n_stars[k], "evpi", evpi, est[k].evpi_raw, est[k].mc_se_evpi});
        rows.push_back({name, z.value(), n_stars[k], "evsi", evsi[k], est[k].evsi_raw, est[k].mc_se_evsi});
      }
    }
  }
  return rows;
}

inline bool oracle_check_passes(const std::vector<OracleCheckRow>& rows) {
  for (const auto& r : rows) {
    if (!(r.deviation_in_se() <= 3.0)) return false;
  }
  return true;
}

inline std::string format_oracle_rows(const std::vector<OracleCheckRow>& rows, Format f) {
  std::ostringstream os;
  if (f == Format::json) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
      nlohmann::ordered_json j;
      j["engine"] = r.engine;
      j["z"] = r.z;
      j["n_star"] = r.n_star;
      j["quantity"] = r.quantity;
      j["exact"] = r.exact;
      j["estimate"] = r.estimate;
      j["mc_se"] = r.se;
      const double dev = r.deviation_in_se();
      j["deviation_se"] = std::isfinite(dev) ? nlohmann::ordered_json(dev) : nlohmann::ordered_json("inf");
      j["pass"] = dev <= 3.0;
      arr.push_back(j);
    }
    os << arr.dump(2) << '\n';
    return os.str();
  }
  os << "engine,z,n_star,quantity,exact,estimate,mc_se,deviation_se,pass\n";
  for (const auto& r : rows) {
    const double dev = r.deviation_in_se();
    os << r.engine << ',' << detail::fmt("%.10g", r.z) << ',' << r.n_star << ',' << r.quantity << ','
       << detail::fmt("%.10g", r.exact) << ',' << detail::fmt("%.10g", r.estimate) << ',' << detail::fmt("%.10g", r.se)
       << ',' << (std::isfinite(dev) ? detail::fmt("%.4f", dev) : std::string("inf")) << ','
       << (dev <= 3.0 ? "yes" : "no") << '\n';
  }
  return os.str();
}

inline std::pair<std::string, bool> cmd_oracle_check(const CommonConfig& c, const OracleConfig& o) {
  const nlohmann::json j = read_json(o.priors);
  const auto thresholds = parse_thresholds(o.thresholds);
  const auto n_stars = parse_int_grid(o.n_star);
  const RunOptions run{o.n_sims, c.seed, c.workers};
  const bool beta = has_beta_triplet(j);

  DiscretePrior prior;
  std::optional<BetaPriorSet> beta_priors;
  if (beta) {
    beta_priors = beta_set_from_json(j);
    prior = quadrature_prior(*beta_priors, o.quadrature_order);
  } else {
    prior = discrete_prior_from_json(j);
  }

  std::vector<std::string> names;
  if (o.engines.empty()) {
    names = beta ? std::vector<std::string>{"betabin", "generic"} : std::vector<std::string>{"generic"};
  } else {
    for (const auto& n : detail::split(o.engines, ',')) names.emplace_back(n);
  }

  const double bias = o.inject_bias;
  auto biased = [bias](std::vector<VoiEstimate> est) {
    for (auto& e : est) {
      e.evpi_raw += bias;
      e.evsi_raw += bias;
    }
    return est;
  };

  std::vector<std::pair<std::string, OracleEngine>> engines;
  for (const auto& name : names) {
    if (name == "betabin") {
      if (!beta_priors) throw DomainError("betabin engine needs a beta prior");
      engines.emplace_back(name, [&, p = *beta_priors](Threshold z, const std::vector<std::int64_t>& ns) {
        return biased(run_betabin_grid(p, z, ns, run));
      });
    } else if (name == "generic") {
      PosteriorDraws draws;
      if (beta_priors) {
        draws = sample_posterior_draws(*beta_priors, o.n_draws, derive_seed(c.seed, 0x4452415753ULL));
      } else if (auto exact = draws_from_atoms(prior)) {
        draws = std::move(*exact);
      } else {
        draws = sample_atoms(prior, o.n_draws, derive_seed(c.seed, 0x4452415753ULL));
      }
      engines.emplace_back(name, [&, d = std::move(draws)](Threshold z, const std::vector<std::int64_t>& ns) {
        return biased(run_generic_grid(d, z, ns, run));
      });
    } else {
      throw DomainError("oracle-check supports engines betabin and generic, got '" + name + "'");
    }
  }

  const auto rows = oracle_check(prior, thresholds, n_stars, engines);
  return {format_oracle_rows(rows, parse_format(c.format)), oracle_check_passes(rows)};
}

inline std::filesystem::path sweep_path(const std::filesystem::path& out, std::size_t n) {
  std::filesystem::path p = out;
  p.replace_filename(out.stem().string() + "_n" + std::to_string(n) + out.extension().string());
  return p;
}

// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Expected value of sample information for external validation of risk prediction models"};
  app.set_config("--config", "", "INI/TOML config file; command-line flags take precedence");
  app.require_subcommand(1);

  CommonConfig common;
  try {
    common.seed = default_seed();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  common.workers = 1;

  auto add_common = [&](CLI::App* sub, bool csv_input) {
    sub->add_option("--seed", common.seed, "Random seed (default 2023, or $EVSI_SEED)");
    sub->add_option("--workers", common.workers, "Worker threads; results do not depend on this")
        ->check(CLI::Range(1u, 1024u));
    sub->add_option("--out", common.out, "Output file (default: stdout)");
    sub->add_option("--format", common.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    if (csv_input) {
      sub->add_option("--risk-col", common.risk_col, "Risk column name");
      sub->add_option("--outcome-col", common.outcome_col, "Outcome column name");
      sub->add_option("--delimiter", common.delimiter, "Field delimiter");
    }
  };

  DcaConfig dca;
  auto* dca_cmd = app.add_subcommand("dca", "Decision curve with bootstrap percentile intervals");
  dca_cmd->add_option("--input", dca.input, "Validation CSV (risk, outcome)")->required();
  dca_cmd->add_option("--thresholds", dca.thresholds, "Threshold grid: list or lo:hi:step");
  dca_cmd->add_option("--n-boot", dca.n_boot, "Bootstrap replicates")->check(CLI::Range(std::uint64_t{2}, std::uint64_t{100000000}));
  dca_cmd->add_option("--ci-level", dca.ci_level, "Interval level")->check(CLI::Range(0.0, 1.0));
  add_common(dca_cmd, true);

  VoiConfig voi;
  auto* voi_cmd = app.add_subcommand("voi", "EVPI and EVSI over threshold and future-sample-size grids");
  voi_cmd->add_option("--engine", voi.engine, "Engine")->check(CLI::IsMember({"betabin", "bootstrap", "generic"}));
  voi_cmd->add_option("--input", voi.input, "Validation CSV");
  voi_cmd->add_option("--priors", voi.priors, "Prior JSON");
  voi_cmd->add_option("--draws", voi.draws, "Posterior draws CSV (theta_p,theta_se,theta_sp)");
  voi_cmd->add_option("--n-draws", voi.n_draws, "Posterior draws generated when no draws file is given");
  voi_cmd->add_option("--thresholds", voi.thresholds, "Threshold grid");
  voi_cmd->add_option("--n-star", voi.n_star, "Future sample sizes");
  voi_cmd->add_option("--n-sims", voi.n_sims, "Monte Carlo iterations (default 10^6 betabin, 10^4 otherwise)");
  voi_cmd->add_option("--kind", voi.kind, "Bootstrap kind")->check(CLI::IsMember({"bayesian", "ordinary"}));
  voi_cmd->add_option("--population", voi.population, "Decisions per year");
  voi_cmd->add_option("--horizon", voi.horizon, "Time horizon in years");
  add_common(voi_cmd, true);

  SweepConfig sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "EVSI curves for increasing amounts of current information");
  sweep_cmd->add_option("--input", sweep.input, "Master dataset CSV (default: synthetic)");
  sweep_cmd->add_option("--master-n", sweep.master_n, "Synthetic master dataset size");
  sweep_cmd->add_option("--master-prevalence", sweep.master_prevalence, "Synthetic master prevalence");
  sweep_cmd->add_option("--slope", sweep.slope, "Synthetic linear-predictor SD");
  sweep_cmd->add_option("--sizes", sweep.sizes, "Current-sample sizes");
  sweep_cmd->add_option("--reps", sweep.reps, "Repetitions per size")->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--thresholds", sweep.thresholds, "Threshold grid");
  sweep_cmd->add_option("--n-star", sweep.n_star, "Future sample sizes");
  sweep_cmd->add_option("--n-sims", sweep.n_sims, "Monte Carlo iterations per run");
  sweep_cmd->add_option("--population", sweep.population, "Decisions per year");
  sweep_cmd->add_option("--horizon", sweep.horizon, "Time horizon in years");
  add_common(sweep_cmd, true);

  SynthConfig synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic validation sample");
  synth_cmd->add_option("--n", synth.n, "Sample size")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--prevalence", synth.prevalence, "Expected event rate");
  synth_cmd->add_option("--slope", synth.slope, "SD of the linear predictor (0: uninformative)");
  add_common(synth_cmd, false);

  OracleConfig oracle;
  auto* oracle_cmd = app.add_subcommand("oracle-check", "Compare Monte Carlo engines with exact enumeration");
  oracle_cmd->add_option("--priors", oracle.priors, "Discrete prior JSON ({\"atoms\": [...]}) or beta prior JSON")->required();
  oracle_cmd->add_option("--thresholds", oracle.thresholds, "Threshold grid");
  oracle_cmd->add_option("--n-star", oracle.n_star, "Future sample sizes");
  oracle_cmd->add_option("--n-sims", oracle.n_sims, "Monte Carlo iterations");
  oracle_cmd->add_option("--engines", oracle.engines, "Comma-separated engines (betabin, generic)");
  oracle_cmd->add_option("--quadrature-order", oracle.quadrature_order, "Nodes per axis when discretising a beta prior");
  oracle_cmd->add_option("--n-draws", oracle.n_draws, "Posterior draws for the generic engine");
  oracle_cmd->add_option("--inject-bias", oracle.inject_bias, "Add a constant to engine estimates (harness self-test)");
  add_common(oracle_cmd, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  auto deliver = [&](const std::string& content) {
    if (common.out.empty()) {
      out << content;
    } else {
      write_atomically(common.out, content);
    }
  };

  try {
    if (*dca_cmd) {
      deliver(cmd_dca(common, dca));
    } else if (*voi_cmd) {
      deliver(cmd_voi(common, voi));
    } else if (*synth_cmd) {
      deliver(cmd_synth(common, synth));
    } else if (*sweep_cmd) {
      const SweepOutput result = cmd_sweep(common, sweep);
      if (common.out.empty()) {
        if (result.curves.size() > 1 && parse_format(common.format) == Format::json) {
          nlohmann::ordered_json all = nlohmann::ordered_json::array();
          for (const auto& [n, content] : result.curves) {
            nlohmann::ordered_json curve;
            curve["n_current"] = n;
            curve["rows"] = nlohmann::ordered_json::parse(content);
            all.push_back(std::move(curve));
          }
          out << all.dump(2) << '\n';
        } else {
          for (const auto& [n, content] : result.curves) {
            if (result.curves.size() > 1) out << "# n_current=" << n << '\n';
            out << content;
          }
        }
      } else if (result.curves.size() == 1) {
        write_atomically(common.out, result.curves.front().second);
      } else {
        for (const auto& [n, content] : result.curves) write_atomically(sweep_path(common.out, n), content);
      }
    } else if (*oracle_cmd) {
      const auto [report, pass] = cmd_oracle_check(common, oracle);
      deliver(report);
      if (!pass) {
        err << "oracle-check: deviation above 3 standard errors\n";
        return kGuard;
      }
    }
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  } catch (const GuardError& e) {
    err << "error: " << e.what() << '\n';
    return kGuard;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kOk;
}

}  // namespace evsi::cli
