#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bandframe/besov.hpp"
#include "bandframe/elliptic_operator.hpp"
#include "bandframe/frame_system.hpp"
#include "bandframe/grid_domain.hpp"

namespace bandframe {

inline constexpr std::string_view kReportSchema = "bandframe.report/1";
inline constexpr std::string_view kVersion = "0.3.0";
/// Overrides RunConfig::output_dir when set.
inline constexpr const char* kOutputDirEnv = "BANDFRAME_OUTPUT_DIR";

struct RunConfig {
  // [domain]
  DomainSpec domain{DomainKind::interval, {0.0, 1.0}, 1.0 / 256.0};
  // [operator]: identity | constant | sine_bump | matrix
  std::string coefficient = "identity";
  double coefficient_value = 1.0;
  double amplitude = 0.5;
  std::array<double, 3> matrix{1.0, 0.0, 1.0};
  // [solver]; m = 0 means every pair up to the top frame band.
  std::size_t m = 0;
  double tol = 1e-8;
  std::size_t dense_threshold = 4096;
  double eta = 0.5;
  // [frame]; a0 unset means calibrate.
  double delta = 0.5;
  std::optional<double> a0;
  std::optional<int> max_level;
  std::vector<int> calibration_levels;
  std::size_t calibration_trials = 200;
  // [besov]
  std::vector<double> alphas{0.5, 1.0, 2.0};
  std::vector<double> qs{1.0, 2.0, kInfinity};
  // [test]
  std::uint64_t seed = 12345;
  std::size_t trials = 100;
  std::size_t besov_functions = 20;
  std::size_t reconstruct_iterations = 17;
  // [output]
  std::filesystem::path output_dir = "bandframe-out";
  bool use_cache = true;
  bool write_files = true;
};

/// Throws ConfigError naming the first invalid field.
void validate(const RunConfig& config);
CoefficientField make_coefficient(const RunConfig& config);
/// Applies the output-directory environment override, if any.
RunConfig with_environment(RunConfig config);

enum class Stage { domain, eigs, frame, verify, reconstruct, besov, all };
Stage parse_stage(std::string_view name);
std::string_view to_string(Stage stage);

struct Certificate {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation; // "<=", ">=", "==", "in"
  std::string detail;
  bool gating = true;
};

struct RunReport {
  nlohmann::json body;
  std::vector<Certificate> certificates;
  bool passed() const;
  /// Copy of `body` without the "runtime" block (timings, cache status).
  nlohmann::json numeric() const;
};

/// Runs the stages up to `stage`. Writes report.json and CSV series unless
/// config.write_files is false. Module errors are rethrown as StageError after a partial
/// report has been written.
RunReport run_pipeline(const RunConfig& config, Stage stage = Stage::all);

/// Gaussian coefficients on span{lambda <= omega}, normalized to ||f||_h = 1.
GridFunction sample_bandlimited(const EigenBasis& basis, double omega, std::uint64_t seed);

/// Human-readable summary of a report produced by run_pipeline.
std::string summarize_report(const nlohmann::json& report);

nlohmann::json config_to_json(const RunConfig& config);

/// Sets one dotted key ("frame.delta", "domain.params", ...) from its textual values.
/// Numbers accept "inf" and "p/q"; lists accept several values or one comma-separated value.
/// Throws ConfigError naming the key.
void apply_setting(RunConfig& config, const std::string& key, const std::vector<std::string>& values);
/// Every key accepted by apply_setting.
const std::vector<std::string>& setting_keys();
/// Reads a TOML-style file of [section] key = value entries on top of `base`.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

} // namespace bandframe
