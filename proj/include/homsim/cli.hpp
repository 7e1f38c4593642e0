#pragma once

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "homsim/errors.hpp"
#include "homsim/presets.hpp"
#include "homsim/scenario.hpp"

namespace homsim::cli {

enum ExitCode : int {
  kOk = 0,
  kValidation = 2,
  kNumerical = 3,
  kTargetFailure = 4,
};

/// Maps library errors onto process exit codes.
inline int exit_code_for(const Error& e) {
  if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const ParameterError*>(&e) ||
      dynamic_cast<const InputError*>(&e)) {
    return kValidation;
  }
  return kNumerical;
}

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

inline int run_command(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, bool quiet,
                       Streams io) {
  const auto config = load_json_file(config_path);
  const auto sc = parse_scenario(config, config_path.parent_path(), out_dir);
  const auto result = run_scenario(sc);
  write_outputs(sc, result);
  if (!quiet) {
    for (const auto& w : result.interferogram.metadata["warnings"]) {
      io.err << "warning: " << w.get<std::string>() << '\n';
    }
    io.out << sc.label << ": fwhm " << format_double(result.report.fwhm) << " um (" << to_string(result.report.method)
           << "), visibility " << format_double(result.report.visibility) << ", asymmetry "
           << format_double(result.report.asymmetry) << '\n'
           << "wrote " << sc.csv_path.string() << " and " << sc.report_path.string() << '\n';
  }
  return kOk;
}

inline int reproduce_command(const std::string& preset, const std::filesystem::path& out_dir, bool quiet,
                             Streams io) {
  PresetResult result;
  try {
    result = run_preset(preset);
  } catch (const Error&) {
    io.err << "preset '" << preset << "' failed\n";
    throw;
  }
  write_preset_outputs(result, out_dir);
  if (!quiet) io.out << summary_table(result);
  return result.passed() ? kOk : kTargetFailure;
}

inline int sweep_command(const std::filesystem::path& config_path, const std::string& param, double min, double max,
                         std::size_t steps, const std::filesystem::path& out_dir, bool quiet, Streams io) {
  const auto config = load_json_file(config_path);
  const auto rows = sweep(config, param, min, max, steps, config_path.parent_path());
  const auto label = config.value("label", std::string("scenario"));
  const auto path = out_dir / (detail::file_stem(label) + "_sweep.csv");
  write_text_file(path, sweep_csv(rows));
  if (!quiet) io.out << "wrote " << rows.size() << " rows to " << path.string() << '\n';
  return kOk;
}

/// Entry point of the homsim tool; returns the process exit code.
inline int main(int argc, const char* const* argv, Streams io = {}) {
  CLI::App app{"Simulate low-coherence and two-photon interferograms through dispersive media"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "homsim 0.1.0");

  std::string out_dir = ".";
  bool quiet = false;
  app.add_option("--out-dir", out_dir, "Directory for output files")->capture_default_str();
  app.add_flag("--quiet", quiet, "Suppress informational output");
  app.fallthrough();

  std::string config;
  auto* run = app.add_subcommand("run", "Run one scenario and write its interferogram and report");
  run->add_option("config", config, "Scenario JSON file")->required();

  std::string preset;
  auto* reproduce = app.add_subcommand("reproduce", "Run a reference preset and compare with its targets");
  reproduce->add_option("preset", preset, "Preset name")->required()->check(CLI::IsMember(preset_names()));

  std::string param;
  double min = 0.0, max = 0.0;
  std::size_t steps = 0;
  auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one numeric scenario field and tabulate the widths");
  sweep_cmd->add_option("config", config, "Scenario JSON file")->required();
  sweep_cmd->add_option("--param", param, "Dotted path of the field, e.g. stack.0.thickness_mm")->required();
  sweep_cmd->add_option("--min", min, "First value")->required();
  sweep_cmd->add_option("--max", max, "Last value")->required();
  sweep_cmd->add_option("--steps", steps, "Number of values")->required()->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, io.out, io.err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, io.out, io.err);
    return kValidation;
  }

  try {
    if (*run) return run_command(config, out_dir, quiet, io);
    if (*reproduce) return reproduce_command(preset, out_dir, quiet, io);
    return sweep_command(config, param, min, max, steps, out_dir, quiet, io);
  } catch (const Error& e) {
    io.err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::filesystem::filesystem_error& e) {
    io.err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace homsim::cli
