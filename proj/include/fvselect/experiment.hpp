#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "fvselect/sampler.hpp"

// Reproducible experiment runner behind the fvselect CLI.

namespace fvselect {

inline constexpr int kCsvSchemaVersion = 1;

enum class ExperimentKind {
  fv_stationary,
  fv_sweep,
  yaglom,
  survival,
  nbbm_speed,
  nbbm_profile,
  qsd_table,
  validate_kernel,
  green_check,
};

std::string_view to_string(ExperimentKind k);
std::optional<ExperimentKind> parse_experiment(std::string_view name);
const std::vector<std::string>& experiment_names();

/// Initial law: "qsd:<lambda>", "point:<x>" or "list:<x1>,<x2>,...".
struct InitialSpec {
  enum class Kind { qsd, point, list };
  Kind kind = Kind::qsd;
  double value = 0.5;
  std::vector<double> points;

  static InitialSpec parse(std::string_view text);
  std::string to_string() const;
  Sampler sampler() const;
};

/// Invalid configuration; the message names the line or field at fault.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::fv_stationary;
  std::vector<std::size_t> n_particles;
  double dt = 1e-3;
  double horizon = 500.0;
  double burn_in = 50.0;
  InitialSpec initial;
  std::uint64_t seed = 1;
  std::size_t replicas = 1;
  std::string output_dir = "run";

  std::vector<double> lambdas;  ///< qsd-table
  std::vector<double> times;    ///< yaglom, survival
  std::size_t paths = 0;        ///< independent particles for killed-process runs
  std::size_t contrast_paths = 0;
  double contrast_lambda = 0.25;  ///< yaglom: QSD start kept for contrast
  double record_interval = 0.1;
  std::size_t n_batches = 30;
  double x0 = 1.0;  ///< validate-kernel start

  nlohmann::json to_json() const;
};

/// Defaults for an experiment before any file or flag is applied.
ExperimentConfig default_config(ExperimentKind kind);

/// Parses JSON (object) or `key = value` text. Keys not set keep the
/// experiment's defaults. Throws ConfigError with line/field diagnostics.
ExperimentConfig parse_config(std::string_view text, ExperimentKind kind);
ExperimentConfig load_config(const std::filesystem::path& file,
                             ExperimentKind kind);
/// Checks the invariants shared by every experiment.
void validate(const ExperimentConfig& c);

struct RunOptions {
  std::size_t workers = 0;  ///< 0: FVSELECT_THREADS or hardware count
  bool quiet = false;
};

/// A simulation failed; carries the replica and seed that failed.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs the experiment, writing manifest.json and its CSVs into
/// config.output_dir. Returns the list of files written.
std::vector<std::filesystem::path> run(const ExperimentConfig& config,
                                       const RunOptions& opts = {});

struct PredicateResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::string experiment;
  bool passed = false;
  std::vector<std::string> missing_files;
  std::vector<PredicateResult> predicates;

  nlohmann::json to_json() const;
};

/// Re-evaluates the acceptance predicates bound to the experiment recorded in
/// run_dir/manifest.json. Writes run_dir/verify.json when the directory exists.
VerifyReport verify(const std::filesystem::path& run_dir);

}  // namespace fvselect
