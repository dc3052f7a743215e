// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include "nestla/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <set>

#include "nestla/csv.hpp"

namespace nestla {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = v.find(',', pos);
    out.push_back(trim(v.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos)));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.size() == 1 && out[0].empty()) out.clear();
  return out;
}

template <class T>
T to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  try {
    x = parse_int(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  if (x < static_cast<long long>(std::numeric_limits<T>::min()) ||
      static_cast<unsigned long long>(x) > static_cast<unsigned long long>(std::numeric_limits<T>::max()))
    throw ConfigError(key + ": value " + v + " out of range");
  return static_cast<T>(x);
}

double to_real(const std::string& key, const std::string& v) {
  double x = 0.0;
  try {
    x = parse_double(v);
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  if (!std::isfinite(x)) throw ConfigError(key + ": value must be finite");
  return x;
}

template <class T>
std::vector<T> to_int_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(to_int<T>(key, item));
  return out;
}

std::vector<double> to_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split_list(v)) out.push_back(to_real(key, item));
  return out;
}

template <class T>
std::string join(const std::vector<T>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ",";
    if constexpr (std::is_floating_point_v<T>)
      s += format_double(xs[i]);
    else
      s += std::to_string(xs[i]);
  }
  return s;
}

struct Field {
  const char* name;
  std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define NESTLA_INT(member)                                                                                 \
  Field {                                                                                                  \
    #member,                                                                                               \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                              \
          c.member = to_int<decltype(c.member)>(k, v);                                                     \
        },                                                                                                 \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }                                 \
  }
#define NESTLA_REAL(member)                                                                                \
  Field {                                                                                                  \
    #member, [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_real(k, v); }, \
        [](const ExperimentConfig& c) { return format_double(c.member); }                                  \
  }
#define NESTLA_INT_LIST(member)                                                                            \
  Field {                                                                                                  \
    #member,                                                                                               \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) {                              \
          c.member = to_int_list<decltype(c.member)::value_type>(k, v);                                    \
        },                                                                                                 \
        [](const ExperimentConfig& c) { return join(c.member); }                                           \
  }
#define NESTLA_REAL_LIST(member)                                                                           \
  Field {                                                                                                  \
    #member,                                                                                               \
        [](ExperimentConfig& c, const std::string& k, const std::string& v) { c.member = to_real_list(k, v); }, \
        [](const ExperimentConfig& c) { return join(c.member); }                                           \
  }

const std::vector<Field>& fields() {
  static const std::vector<Field> table{
      Field{"problem_path", [](ExperimentConfig& c, const std::string&, const std::string& v) { c.problem_path = v; },
            [](const ExperimentConfig& c) { return c.problem_path; }},
      NESTLA_INT(dim),
      NESTLA_INT(m),
      NESTLA_REAL(sigma),
      NESTLA_REAL(conditioning),
      NESTLA_INT(problem_seed),
      NESTLA_REAL(start_offset),
      NESTLA_REAL_LIST(alphas),
      NESTLA_INT_LIST(ks),
      NESTLA_REAL(gamma),
      NESTLA_INT(T),
      NESTLA_INT_LIST(seeds),
      NESTLA_INT(seed_count),
      NESTLA_INT(equiv_configs),
      NESTLA_INT(equiv_T),
      NESTLA_INT_LIST(bound_Ts),
      NESTLA_REAL_LIST(bound_fractions),
      NESTLA_INT(restart_M),
      NESTLA_INT(restart_fit_from),
      NESTLA_REAL(restart_slope_max),
      NESTLA_REAL(schedule_gamma0),
      NESTLA_INT(schedule_rounds),
      NESTLA_INT(schedule_check_round),
      NESTLA_REAL(schedule_ratio_max),
      NESTLA_INT(linrate_configs),
      NESTLA_INT(linrate_rounds),
      NESTLA_INT(sweep_seed),
      NESTLA_INT(regflow_dim),
      NESTLA_INT(regflow_seed),
      NESTLA_REAL_LIST(regflow_gammas),
      NESTLA_REAL(claim1_T),
      NESTLA_REAL_LIST(claim1_alphas),
      NESTLA_INT(claim1_points_per_decade),
      NESTLA_INT(claim1_decades),
  };
  return table;
}

#undef NESTLA_INT
#undef NESTLA_REAL
#undef NESTLA_INT_LIST
#undef NESTLA_REAL_LIST

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (const auto& f : fields()) {
    if (key == f.name) {
      f.set(*this, key, trim(value));
      return;
    }
  }
  throw ConfigError("unknown configuration key '" + key + "'");
}

void ExperimentConfig::validate() const {
  if (problem_path.empty()) {
    require(dim >= 1, "dim must be >= 1");
    require(m >= 1, "m must be >= 1");
    require(sigma >= 0.0, "sigma must be >= 0");
    require(conditioning >= 1.0, "conditioning must be >= 1");
  }
  require(alphas.size() == ks.size(), "alphas and ks must have the same length");
  for (double a : alphas) require(a > 0.0 && a <= 1.0, "alphas must lie in (0, 1]");
  for (int k : ks) require(k >= 1, "ks must be >= 1");
  require(gamma >= 0.0, "gamma must be >= 0");
  require(T >= 1, "T must be >= 1");
  require(seed_count >= 0, "seed_count must be >= 0");
  {
    auto sorted = seeds;
    std::sort(sorted.begin(), sorted.end());
    require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "seed list contains duplicates");
  }
  require(seeds.empty() || seed_count == 0, "give either seeds or seed_count, not both");
  require(equiv_configs >= 1 && equiv_T >= 1, "equiv_configs and equiv_T must be >= 1");
  require(!bound_Ts.empty() && !bound_fractions.empty(), "bound_Ts and bound_fractions must be non-empty");
  for (auto t : bound_Ts) require(t >= 1, "bound_Ts must be >= 1");
  for (double f : bound_fractions) require(f > 0.0 && f <= 1.0, "bound_fractions must lie in (0, 1]");
  require(restart_M >= 1 && restart_M <= 12, "restart_M must lie in [1, 12]");
  require(restart_fit_from >= 0 && restart_fit_from < restart_M, "restart_fit_from must lie in [0, restart_M)");
  require(schedule_gamma0 > 0.0, "schedule_gamma0 must be > 0");
  require(schedule_check_round >= 1 && schedule_check_round < schedule_rounds,
          "schedule_check_round must lie in [1, schedule_rounds)");
  require(linrate_configs >= 1 && linrate_rounds >= 1, "linrate_configs and linrate_rounds must be >= 1");
  require(regflow_dim >= 1, "regflow_dim must be >= 1");
  require(regflow_gammas.size() >= 2, "regflow_gammas needs at least two values");
  for (double g : regflow_gammas) require(g > 0.0, "regflow_gammas must be positive");
  require(claim1_T >= 1.0 && claim1_T <= 9.0e18 && claim1_T == std::floor(claim1_T),
          "claim1_T must be a positive integer");
  require(!claim1_alphas.empty(), "claim1_alphas must be non-empty");
  for (double a : claim1_alphas) require(a > 0.0 && a <= 1.0, "claim1_alphas must lie in (0, 1]");
  require(claim1_points_per_decade >= 1 && claim1_decades >= 1, "claim1 grid density must be >= 1");
}

std::vector<std::uint64_t> ExperimentConfig::seed_list(int default_count) const {
  std::vector<std::uint64_t> out = seeds;
  if (out.empty()) {
    const int n = seed_count > 0 ? seed_count : default_count;
    for (int i = 1; i <= n; ++i) out.push_back(static_cast<std::uint64_t>(i));
  }
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) throw ConfigError("seed list contains duplicates");
  return out;
}

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    try {
      cfg.set(key, line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse(in);
}

std::vector<std::string> ExperimentConfig::dump() const {
  std::vector<std::string> out;
  for (const auto& f : fields()) out.push_back(std::string(f.name) + "=" + f.get(*this));
  return out;
}

}  // namespace nestla
