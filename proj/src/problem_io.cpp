// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "nestla/csv.hpp"
#include "nestla/problems.hpp"

namespace nestla {
namespace {

constexpr const char* kMagic = "# nestla-problem v1";

std::string join(const double* data, Eigen::Index n) {
  std::string s;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += format_double(data[i]);
  }
  return s;
}

std::vector<double> split_numbers(const std::string& s) {
  std::vector<double> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(parse_double(tok));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void write_problem(std::ostream& out, const DecomposedProblem& p) {
  const int d = p.dim();
  out << kMagic << '\n';
  out << "dim = " << d << '\n';
  out << "m = " << p.num_components() << '\n';
  out << "sigma = " << format_double(p.noise_sigma()) << '\n';
  for (int i = 0; i < p.num_components(); ++i) {
    const auto& c = p.components()[static_cast<std::size_t>(i)];
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> a = c.hessian;
    out << "A." << i << " = " << join(a.data(), a.size()) << '\n';
    out << "c." << i << " = " << join(c.center.data(), c.center.size()) << '\n';
  }
}

DecomposedProblem read_problem(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line) != kMagic) throw std::runtime_error("problem file: missing header line");
  std::map<std::string, std::string> kv;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw std::runtime_error("problem file line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    if (!kv.emplace(key, trim(t.substr(eq + 1))).second)
      throw std::runtime_error("problem file: duplicate key '" + key + "'");
  }
  auto take = [&](const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("problem file: missing key '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  const long long d = parse_int(take("dim"));
  const long long m = parse_int(take("m"));
  const double sigma = parse_double(take("sigma"));
  if (d < 1 || m < 1) throw std::runtime_error("problem file: dim and m must be positive");
  std::vector<QuadraticComponent> comps;
  for (long long i = 0; i < m; ++i) {
    const auto a = split_numbers(take("A." + std::to_string(i)));
    const auto c = split_numbers(take("c." + std::to_string(i)));
    if (static_cast<long long>(a.size()) != d * d || static_cast<long long>(c.size()) != d)
      throw std::runtime_error("problem file: component " + std::to_string(i) + " has wrong length");
    QuadraticComponent q;
    q.hessian = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        a.data(), d, d);
    q.center = Eigen::Map<const Vec>(c.data(), d);
    comps.push_back(std::move(q));
  }
  if (!kv.empty()) throw std::runtime_error("problem file: unknown key '" + kv.begin()->first + "'");
  return DecomposedProblem(std::move(comps), sigma);
}

void save_problem(const std::string& path, const DecomposedProblem& p) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_problem(f, p);
}

DecomposedProblem load_problem(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open problem file '" + path + "'");
  return read_problem(f);
}

}  // namespace nestla
