// bandframe: build spectral frames on grid domains and certify their properties.
//
//   bandframe all --config configs/unit_square.toml
//   bandframe frame --domain.kind disk --domain.params 0,0,1 --domain.h 1/32
//   bandframe report --output.dir out
//
// Settings come from the config file first, then from --section.key flags.
// Exit status: 0 when every gating certificate passes, 1 when one fails,
// 2 on configuration errors, 3 when a stage raises.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "bandframe/errors.hpp"
#include "bandframe/pipeline.hpp"

namespace {

int print_saved_report(const bandframe::RunConfig& config, bool as_json) {
  const auto path = config.output_dir / "report.json";
  std::ifstream in(path);
  if (!in) {
    std::cerr << "no report at " << path << "; run a stage first\n";
    return 2;
  }
  const auto report = nlohmann::json::parse(in);
  if (as_json) {
    std::cout << report.dump(2) << '\n';
  } else {
    std::cout << bandframe::summarize_report(report);
  }
  return report.value("passed", false) ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectral frames, Besov norms and certificates on grid domains"};
  app.fallthrough();
  app.require_subcommand(1);

  std::string config_path;
  bool as_json = false;
  bool no_cache = false;
  app.add_option("--config", config_path, "TOML-style file with [section] key = value entries")
      ->check(CLI::ExistingFile);
  app.add_flag("--json", as_json, "print the report as JSON instead of a summary");
  app.add_flag("--no-cache", no_cache, "ignore and do not write the eigenbasis cache");

  std::map<std::string, std::vector<std::string>> given;
  for (const auto& key : bandframe::setting_keys()) {
    app.add_option("--" + key, given[key])->group("Settings")->delimiter(',');
  }

  const std::vector<std::pair<std::string, std::string>> stages = {
      {"domain", "build the grid domain"},
      {"eigs", "assemble the operator and compute the eigenbasis"},
      {"frame", "filters, calibration and frame construction"},
      {"verify", "frame inequalities, localization and the inequality suite"},
      {"reconstruct", "frame algorithm reconstruction"},
      {"besov", "Besov norm comparison"},
      {"all", "every stage"}};
  for (const auto& [name, help] : stages) app.add_subcommand(name, help);
  app.add_subcommand("report", "print the last report in the output directory");

  CLI11_PARSE(app, argc, argv);

  bandframe::RunConfig config;
  try {
    if (!config_path.empty()) config = bandframe::load_config(config_path, config);
    for (const auto& [key, values] : given) {
      if (!values.empty()) bandframe::apply_setting(config, key, values);
    }
    if (no_cache) config.use_cache = false;
    config = bandframe::with_environment(config);
    bandframe::validate(config);
  } catch (const bandframe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  if (sub == "report") return print_saved_report(config, as_json);

  try {
    const auto report = bandframe::run_pipeline(config, bandframe::parse_stage(sub));
    if (as_json) {
      std::cout << report.body.dump(2) << '\n';
    } else {
      std::cout << bandframe::summarize_report(report.body);
    }
    return report.passed() ? 0 : 1;
  } catch (const bandframe::StageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const bandframe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
}
