#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "magheat/field.hpp"

namespace magheat {

enum class ExperimentKind {
  Flux,
  GaugeCheck,
  SpectrumExact,
  SpectrumNumeric,
  LambdaCurve,
  Hardy,
  Evolve,
  DecayReport
};

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment_kind(const std::string& name);

/// Everything needed to reproduce one run. Fields unused by a kind keep their
/// defaults and are still serialized.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Flux;
  std::string name;
  FieldSpec field{FieldKind::RadialStep, {{"B0", 0.0}, {"R", 1.0}}};
  /// Overrides the field flux for spectrum-exact.
  std::optional<double> flux;
  double R_dom = 16.0;
  int N = 256;
  std::vector<double> s_values;
  /// Self-similar parameter for gauge-check and spectrum-numeric (none: H_B or L_HO).
  std::optional<double> s;
  bool harmonic = true;
  int count = 6;
  int k = 3;
  double radial_R_max = 20.0;
  int radial_M = 4000;
  std::vector<double> hardy_R{8.0, 16.0, 32.0};
  double hardy_h = 0.25;
  std::string frame = "physical";
  std::string datum = "gaussian";
  double T = 50.0;
  double dt = 0.1;
  double h_physical = 0.2;
  double S = 6.0;
  double ds = 0.05;
  std::optional<double> window_start;
  std::optional<double> window_end;
  double eig_tol = 1e-8;
  double cg_rtol = 1e-10;
  std::string output_dir;
  std::uint64_t seed = 1;

  bool operator==(const ExperimentConfig&) const = default;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
/// Rejects unknown keys and out-of-range values with ConfigError.
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& c);

struct RunRecord {
  ExperimentConfig config;
  /// Role -> file path of every output written.
  std::map<std::string, std::string> outputs;
  double wall_seconds = 0.0;
  std::string version;
  nlohmann::json summary;
  bool pass = false;
};

void to_json(nlohmann::json& j, const RunRecord& r);
/// Reads a record.json or a run directory containing one.
RunRecord load_record(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out_dir;
  int workers = 1;
};

/// Default output root: $MAGHEAT_OUT, else ./magheat-out.
std::filesystem::path default_output_dir();

/// Runs one experiment, writing summary.json, record.json and kind-specific
/// CSV files into `out_dir` (or config.output_dir) atomically.
RunRecord run(const ExperimentConfig& config, const RunOptions& options = {});

std::vector<ExperimentConfig> preset_suite(const std::string& name);
std::vector<RunRecord> run_suite(const std::vector<ExperimentConfig>& configs,
                                 const RunOptions& options);

struct DiffEntry {
  std::string path;
  std::string a;
  std::string b;
  double abs_diff = 0.0;
};

struct DiffSummary {
  std::vector<DiffEntry> entries;
  bool empty() const { return entries.empty(); }
};

/// Field-by-field comparison of two summaries; numbers differing by more than
/// atol + rtol |a| are reported. Throws ConfigError on a kind mismatch.
DiffSummary compare(const RunRecord& a, const RunRecord& b, double rtol = 1e-9,
                    double atol = 1e-12);

/// Writes text to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& text);

} // namespace magheat
