#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sdr/estimators.hpp"

namespace sdr {

// Column-wise summary of one estimator across replications. Coefficients are
// the aligned original-scale basis entries, stacked column-major; entries are
// NaN when undefined (single replication, or no inference for the method).
struct EstimatorReport {
  std::string estimator;
  Vector ave;
  Vector stddev;
  Vector se_mean;    // mean estimated standard error
  Vector se_median;  // median estimated standard error
  Vector coverage;   // share of replications whose CI covers the truth
  double mean_distance = std::numeric_limits<double>::quiet_NaN();
  int failures = 0;
  bool has_inference = false;
};

struct MCReport {
  std::string scenario;
  int p = 0, d = 0, n = 0, reps = 0, workers = 1;
  std::uint64_t seed = 0;
  double level = 0.95;
  std::vector<std::string> coefficients;
  std::vector<EstimatorReport> estimators;
  std::vector<std::string> warnings;
};

// beta1..betap for d=1; beta{row}{col} stacked column-major otherwise.
std::vector<std::string> coefficient_names(int p, int d);

// Independent replications: draw data from the scenario, fit each estimator,
// align the estimated span onto beta_true by least squares, and accumulate
// per-coefficient moments, estimated-se summaries and CI coverage (delta
// method through the alignment). Replication r uses the (seed, r) RNG
// substream, so results are identical for any worker count. Failed or
// non-convergent fits are counted and excluded.
MCReport run_monte_carlo(const Scenario& scenario,
                         const std::vector<EstimatorKind>& estimators, int n,
                         int reps, std::uint64_t seed, int workers,
                         const FitOptions& base = FitOptions{});

enum class ReportFormat { text, csv, json };
ReportFormat parse_format(const std::string& name);
std::string format_name(ReportFormat format);

// text: aligned human-readable table; csv: machine table with a '#' metadata
// preamble; json: full structure. csv and json round-trip losslessly.
std::string report_table(const MCReport& report, ReportFormat format);
MCReport report_from_csv(const std::string& text);
MCReport report_from_json(const std::string& text);

}  // namespace sdr
