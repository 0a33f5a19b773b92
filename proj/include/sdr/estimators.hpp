#pragma once

#include <string>
#include <vector>

#include "sdr/inverse_regression.hpp"
#include "sdr/scenarios.hpp"
#include "sdr/scores.hpp"

namespace sdr {

enum class EstimatorKind { oracle, efficient, local, shortcut, sir, dr };

EstimatorKind parse_estimator(const std::string& name);
std::string estimator_name(EstimatorKind kind);
std::vector<EstimatorKind> parse_estimator_list(const std::string& names);

struct FitOptions {
  EstimatorKind estimator = EstimatorKind::efficient;
  int d = 1;
  SmootherSpec bandwidths;  // positive fields override the rate defaults
  SolveOptions solve;
  int resmooth_passes = 1;  // rebuild smoothers at the solution and re-solve
  std::string pilot = "auto";  // auto | sir | local
  int n_slices = 10;
  PositedModel posited;             // local score; empty name -> default for d
  const Scenario* scenario = nullptr;  // supplies the exact law for oracle
};

// Full pipeline: standardize, pick a pilot basis, build the score with
// smoothers frozen at the pilot, solve, optionally re-smooth at the solution,
// then map back to the original covariate scale and attach inference.
// Non-convergence is reported through the result, never thrown.
FitResult fit_sdr(MatRef x, VecRef y, const FitOptions& opt);

// Largest share of any covariate's variation around the pilot index that
// quadratic and cubic terms explain beyond a linear fit; large values flag
// curved inverse regressions, where a slice-based pilot is biased.
double nonlinearity_share(MatRef z, MatRef u);

}  // namespace sdr
