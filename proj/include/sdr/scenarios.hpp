#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "sdr/rng.hpp"
#include "sdr/scores.hpp"
#include "sdr/standardize.hpp"
#include "sdr/types.hpp"

namespace sdr {

// Mean or variance of the response as a function of the index, with an
// analytic gradient so the exact conditional law stays available.
struct IndexFunction {
  std::string name;
  std::function<double(VecRef)> value;
  std::function<Vector(VecRef)> grad;
};

IndexFunction mean_function(const std::string& name, int d);
IndexFunction variance_function(const std::string& name, int d);
std::vector<std::string> mean_function_names();
std::vector<std::string> variance_function_names();

// Data-generating process: covariate and response samplers plus, when known,
// the conditional density of Y given the original-scale index t = beta'x and
// its log gradient in t.
struct Scenario {
  std::string name;
  int p = 0;
  int d = 0;
  Matrix beta_true;  // original scale; nonsingular upper d×d block
  std::function<Matrix(int, Rng&)> draw_x;
  std::function<Vector(MatRef, Rng&)> draw_y;
  std::function<double(double, VecRef)> density_t;
  std::function<Vector(double, VecRef)> grad_logdensity_t;
  bool has_oracle = false;
};

// The same conditional law re-expressed on the working scale: u is the index
// of the pivot-normalized true basis after standardization, related to the
// original index by t = C_top' u + beta' mean with C = dewhitener * beta.
struct OracleLaw {
  DensityHandles handles;
  Matrix basis_std;  // true basis in standardized coordinates, identity top
};
OracleLaw standardized_oracle(const Scenario& scenario, const Standardizer& s);

struct Sample {
  Matrix x;
  Vector y;
  Scenario scenario;
};

Scenario example1_scenario();
Scenario example2_scenario();
Scenario example3_scenario();

// Independent standard-normal covariates with a conditionally normal response
// assembled from the named mean/variance registries.
Scenario custom_scenario(std::string name, Matrix beta,
                         const std::string& mean_name,
                         const std::string& variance_name);

Scenario scenario_by_name(const std::string& name);
std::vector<std::string> scenario_names();

Sample draw_sample(const Scenario& scenario, int n, Rng& rng);

Sample make_example1(int n, std::uint64_t seed);
Sample make_example2(int n, std::uint64_t seed);
Sample make_example3(int n, std::uint64_t seed);

}  // namespace sdr
