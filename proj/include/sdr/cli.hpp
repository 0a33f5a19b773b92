#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace sdr {

// Everything a subcommand can consume, filled from a flat key=value config
// file first and command-line flags second (flags win).
struct RunConfig {
  std::string command;
  // data source: either a CSV file or a named scenario
  std::string data;
  std::string response = "y";
  std::string covariates;  // comma list; empty selects every other column
  std::string scenario;
  // model
  std::string estimators = "eff";
  int d = 0;  // 0 picks the scenario's dimension, or 1 for CSV data
  std::string pivot;  // comma list of covariate names/1-based indices, or auto-corr
  std::string bandwidth;  // h=..,hx=..,hy=..,b=.. (also trim=, floor=)
  std::string kernel = "quartic";
  std::string pilot = "auto";
  std::string posited;  // local working model: linear, quadratic, cubic
  int slices = 10;
  int resmooth = 1;
  // experiment
  std::uint64_t seed = 1;
  int n = 500;
  int reps = 200;
  int workers = 0;  // 0: take SDR_WORKERS, else 1
  double level = 0.95;
  // custom scenario: columns of beta separated by ';', entries by ','
  std::string beta;
  std::string mean = "linear";
  std::string variance = "unit";
  // output
  std::string format = "text";
  std::string out;  // empty writes to stdout
};

// Exit codes: 0 ok, 2 validation, 3 convergence failure, 4 I/O.
int cmd_fit(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_mc(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_r2scan(const RunConfig& cfg, std::ostream& out, std::ostream& err);

// Applies `key=value` lines from path onto cfg; unknown keys are errors.
void apply_config_file(const std::string& path, RunConfig& cfg);

int run_cli(int argc, const char* const* argv);

}  // namespace sdr
