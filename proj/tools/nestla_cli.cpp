// Copyright 2026 The nestla Authors.
// SPDX-License-Identifier: Apache-2.0
//
// nestla: command-line driver for the verification suites.
//
//   nestla <command> [--config FILE] [--out PATH] [--seeds N] [--T N]
//                    [--set key=value]... [--quiet]
//
// Exit status: 0 when every check passes, 1 when a check fails, 2 on usage
// or configuration errors.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "nestla/commands.hpp"
#include "nestla/config.hpp"

namespace {

struct Options {
  std::string config_path;
  std::string out;
  int seeds = 0;
  long long T = 0;
  std::vector<std::string> sets;
  bool quiet = false;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--out", o.out, "CSV destination (directory for 'all')");
  cmd->add_option("--seeds", o.seeds, "number of Monte Carlo seeds (uses seeds 1..N)")->check(CLI::PositiveNumber);
  cmd->add_option("--T", o.T, "iteration count")->check(CLI::PositiveNumber);
  cmd->add_option("--set", o.sets, "override a configuration key, key=value");
  cmd->add_flag("--quiet", o.quiet, "print only the verdict");
}

nestla::ExperimentConfig build_config(const Options& o) {
  nestla::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = nestla::ExperimentConfig::load(o.config_path);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw nestla::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seeds > 0) {
    cfg.seeds.clear();
    cfg.seed_count = o.seeds;
  }
  if (o.T > 0) {
    cfg.T = o.T;
    cfg.equiv_T = o.T;
    cfg.bound_Ts = {o.T};
  }
  cfg.validate();
  return cfg;
}

bool execute(const std::string& name, const nestla::ExperimentConfig& cfg, const std::string& out, bool quiet) {
  const auto start = std::chrono::steady_clock::now();
  const auto res = nestla::run_command(name, cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.csv.save(out);
  if (!quiet)
    for (const auto& line : res.summary) std::cout << line << "\n";
  std::cout << name << ": " << (res.pass ? "PASS" : "FAIL") << " (" << secs << " s, csv " << out << ")\n";
  if (!res.pass) std::cout << name << ": first failing check: " << res.first_failure << "\n";
  return res.pass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multilayer Lookahead verification suites"};
  app.require_subcommand(1);
  Options opt;
  std::vector<std::string> names = nestla::command_names();
  names.push_back("all");
  const std::vector<std::string> help{
      "single trajectory CSV", "nested vs matrix-form equivalence", "stationary-point bound vs Monte Carlo",
      "restart and decaying-schedule decay rates", "linear-rate preservation sweep", "modified-flow order checks",
      "optimal alpha on the bound grid", "every suite above"};
  for (std::size_t i = 0; i < names.size(); ++i) add_common(app.add_subcommand(names[i], help[i]), opt);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (app.exit(e) == 0) return 0;
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return 2;
  }

  const std::string name = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = build_config(opt);
    if (name != "all") return execute(name, cfg, opt.out.empty() ? name + ".csv" : opt.out, opt.quiet) ? 0 : 1;
    const std::filesystem::path dir = opt.out.empty() ? "nestla_out" : opt.out;
    std::filesystem::create_directories(dir);
    bool pass = true;
    for (const auto& n : nestla::command_names())
      pass = execute(n, cfg, (dir / (n + ".csv")).string(), opt.quiet) && pass;
    std::cout << "all: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
  } catch (const nestla::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
