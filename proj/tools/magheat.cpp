// magheat: run experiments, preset suites and record comparisons.
#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "magheat/error.hpp"
#include "magheat/harness.hpp"

using namespace magheat;

namespace {

constexpr int kExitPass = 0;
constexpr int kExitNumeric = 1;
constexpr int kExitConfig = 2;

void print_record(const RunRecord& r) {
  std::printf("%-28s %-16s %s  %.2fs\n", r.config.name.empty() ? "-" : r.config.name.c_str(),
              to_string(r.config.kind).c_str(), r.pass ? "PASS" : "FAIL", r.wall_seconds);
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Magnetic heat-semigroup decay experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  int workers = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;

  const char* kinds[] = {"flux", "gauge-check", "spectrum-exact", "spectrum-numeric",
                         "lambda-curve", "hardy", "evolve", "decay-report"};
  for (const char* kind : kinds) {
    auto* sub = app.add_subcommand(kind, std::string("run a ") + kind + " experiment");
    sub->add_option("--config", config_path, "JSON experiment config")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& v) { seed = v; seed_given = true; }, "rng seed");
  }

  std::string suite_name;
  auto* suite = app.add_subcommand("suite", "run a preset suite");
  suite->add_option("name", suite_name, "paper-headline | oracle-only | quick")->required();
  suite->add_option("--out", out_dir, "output root");
  suite->add_option("--workers", workers, "concurrent runs")->check(CLI::PositiveNumber);

  std::string path_a, path_b;
  double rtol = 1e-9, atol = 1e-12;
  auto* cmp = app.add_subcommand("compare", "diff two run records");
  cmp->add_option("a", path_a, "record.json or run directory")->required();
  cmp->add_option("b", path_b, "record.json or run directory")->required();
  cmp->add_option("--rtol", rtol, "relative tolerance");
  cmp->add_option("--atol", atol, "absolute tolerance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitConfig;
  }

  try {
    if (suite->parsed()) {
      RunOptions opts{out_dir.empty() ? default_output_dir() : std::filesystem::path(out_dir),
                      workers};
      const auto records = run_suite(preset_suite(suite_name), opts);
      bool all = true;
      for (const auto& r : records) {
        print_record(r);
        all = all && r.pass;
      }
      return all ? kExitPass : kExitNumeric;
    }
    if (cmp->parsed()) {
      const DiffSummary d = compare(load_record(path_a), load_record(path_b), rtol, atol);
      for (const auto& e : d.entries)
        std::printf("%s: %s -> %s (|diff| %.3e)\n", e.path.c_str(), e.a.c_str(), e.b.c_str(),
                    e.abs_diff);
      std::printf("%zu differing fields\n", d.entries.size());
      return d.empty() ? kExitPass : kExitNumeric;
    }
    for (auto* sub : app.get_subcommands()) {
      ExperimentConfig cfg = load_config(config_path);
      const ExperimentKind kind = parse_experiment_kind(sub->get_name());
      if (cfg.kind != kind)
        throw ConfigError("config kind '" + to_string(cfg.kind) + "' does not match command '" +
                          sub->get_name() + "'");
      if (seed_given) cfg.seed = seed;
      RunOptions opts{out_dir, workers};
      const RunRecord r = run(cfg, opts);
      print_record(r);
      std::printf("summary: %s\n", r.outputs.at("summary").c_str());
      return r.pass ? kExitPass : kExitNumeric;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  }
  return kExitConfig;
}
