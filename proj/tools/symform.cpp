// symform: command-line front end for scenario analysis and simulation.
//
//   symform simulate <scenario.json> [--out DIR] [--dt X] [--horizon T]
//   symform analyze  <scenario.json>
//   symform predict  <scenario.json>
//
// Exit codes: 0 ok, 2 parse error, 3 numeric diagnostic, 4 divergence.
// Failures print a single line "error <code>: <message>" on stderr.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "symform/symform.hpp"

namespace {

constexpr int kExitParse = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitDivergence = 4;

int exit_code_for(symform::ErrorCode code) {
  using symform::ErrorCode;
  switch (code) {
    case ErrorCode::IoError:
    case ErrorCode::MalformedJson:
    case ErrorCode::MissingField:
    case ErrorCode::BadFamily:
    case ErrorCode::MissingAnchor:
    case ErrorCode::MalformedNumber:
    case ErrorCode::InvalidValue:
    case ErrorCode::InvalidEdge:
    case ErrorCode::InvalidAnchor:
    case ErrorCode::InvalidOrder:
    case ErrorCode::InvalidScale:
      return kExitParse;
    case ErrorCode::Divergence:
      return kExitDivergence;
    default:
      return kExitNumeric;
  }
}

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dihedral-symmetry formation control: analysis and simulation"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::optional<std::string> out_dir;
  std::optional<double> dt;
  std::optional<double> horizon;

  auto* simulate = app.add_subcommand("simulate", "Integrate the closed loop and write CSV/JSON results");
  simulate->add_option("scenario", scenario_path, "Scenario JSON file")->required();
  simulate->add_option("--out", out_dir, "Output root (default: $DF_OUT_DIR or ./out)");
  simulate->add_option("--dt", dt, "Integration step override")->check(CLI::PositiveNumber);
  simulate->add_option("--horizon", horizon, "Horizon override")->check(CLI::PositiveNumber);

  auto* analyze = app.add_subcommand("analyze", "Spectral and mirror-line summary as JSON");
  analyze->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  auto* predict = app.add_subcommand("predict", "Closed-form steady state as JSON");
  predict->add_option("scenario", scenario_path, "Scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error usage: " << one_line(e.what()) << "\n";
    return kExitParse;
  }

  try {
    const symform::Scenario scenario = symform::parse_scenario(scenario_path);
    if (*simulate) {
      std::filesystem::path root = "out";
      if (const char* env = std::getenv("DF_OUT_DIR"); env && *env) root = env;
      if (out_dir) root = *out_dir;
      const auto summary = symform::cmd_simulate(scenario, root, {dt, horizon});
      std::cout << summary.dump(2) << "\n";
    } else if (*analyze) {
      std::cout << symform::cmd_analyze(scenario).dump(2) << "\n";
    } else if (*predict) {
      std::cout << symform::cmd_predict(scenario).dump(2) << "\n";
    }
  } catch (const symform::Error& e) {
    std::cerr << "error " << symform::to_string(e.code()) << ": " << one_line(e.what()) << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error internal: " << one_line(e.what()) << "\n";
    return kExitNumeric;
  }
  return 0;
}
