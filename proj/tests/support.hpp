#pragma once

// Reference computations used only by the tests. They deliberately avoid the
// library's engines and oracle.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace ref {

struct Atom {
  double p;
  double se;
  double sp;
  double mass;
};

inline std::array<double, 3> nb(const Atom& a, double z) {
  const double w = z / (1.0 - z);
  return {0.0, a.p * a.se - (1.0 - a.p) * (1.0 - a.sp) * w, a.p - (1.0 - a.p) * w};
}

inline double max3(const std::array<double, 3>& v) { return std::max({v[0], v[1], v[2]}); }

inline std::array<double, 3> enb(const std::vector<Atom>& atoms, double z) {
  std::array<double, 3> out{};
  for (const auto& a : atoms) {
    const auto v = nb(a, z);
    for (int i = 0; i < 3; ++i) out[i] += a.mass * v[i];
  }
  return out;
}

inline double evpi(const std::vector<Atom>& atoms, double z) {
  double perfect = 0.0;
  for (const auto& a : atoms) perfect += a.mass * max3(nb(a, z));
  return perfect - max3(enb(atoms, z));
}

// EVSI by enumerating every ordered future dataset of n records, each record
// being one of (tp, fn, tn, fp). 4^n datasets; fine for n <= 7.
inline double evsi_brute_force(const std::vector<Atom>& atoms, double z, int n) {
  std::vector<std::array<double, 4>> cell(atoms.size());
  std::vector<std::array<double, 3>> nbs(atoms.size());
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const auto& a = atoms[k];
    cell[k] = {a.p * a.se, a.p * (1 - a.se), (1 - a.p) * a.sp, (1 - a.p) * (1 - a.sp)};
    nbs[k] = nb(a, z);
  }
  std::int64_t total = 1;
  for (int i = 0; i < n; ++i) total *= 4;
  // Each dataset contributes max_s joint[s] - joint[current best], which
  // keeps the sum free of cancellation.
  const auto prior = enb(atoms, z);
  const auto best = static_cast<std::size_t>(std::max_element(prior.begin(), prior.end()) - prior.begin());
  double gain = 0.0;
  for (std::int64_t code = 0; code < total; ++code) {
    std::array<double, 3> joint{};
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      double like = atoms[k].mass;
      std::int64_t c = code;
      for (int i = 0; i < n; ++i) {
        like *= cell[k][static_cast<std::size_t>(c % 4)];
        c /= 4;
      }
      for (int s = 0; s < 3; ++s) joint[s] += like * nbs[k][s];
    }
    gain += max3(joint) - joint[best];
  }
  return gain;
}

inline std::filesystem::path temp_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("evsi_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace ref
