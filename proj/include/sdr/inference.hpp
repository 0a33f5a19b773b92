#pragma once

#include <string>

#include "sdr/scores.hpp"
#include "sdr/smoothing.hpp"
#include "sdr/types.hpp"

namespace sdr {

struct InferenceReport {
  Matrix vcov;
  Vector se;        // sqrt(vcov_jj / n)
  Vector ci_lower;
  Vector ci_upper;
  double level = 0.95;
  std::string method;  // "sandwich" or "efficient"
};

// A^{-1} B (A^{-1})' with A the mean-score Jacobian at the fit and B the
// sample second moment of the score rows; symmetrized.
Matrix sandwich_vcov(MatRef score_matrix, MatRef jacobian);

// Inverse of the sample second moment of the score rows; symmetrized.
Matrix efficient_vcov(MatRef score_matrix);

// Sample analogue of the information decomposition
// E( E[g g'|u] (x) E[r r'|u] ): conditional second moments of the log-density
// gradient and of the lower covariate residual, kernel-smoothed on u,
// Kronecker-multiplied and averaged over observations.
Matrix remark3_information(ScoreData data, const BasisMatrix& b,
                           const ConditionalDensityFit& fit,
                           const NwEstimator& ex);

// Same decomposition with an arbitrary gradient source (oracle handles).
Matrix remark3_information(ScoreData data, const BasisMatrix& b,
                           const std::function<Vector(double, VecRef)>& grad,
                           const NwEstimator& ex, double h,
                           Kernel kernel = Kernel::quartic, double trim = 1e-4);

InferenceReport confidence_intervals(VecRef beta_hat, MatRef vcov, Index n,
                                     double level = 0.95);

// Adjusted r-squared of the least-squares cubic fit of y on the index.
double cubic_r2(VecRef y, VecRef index);

// Standard normal quantile and CDF.
double normal_quantile(double p);
double normal_cdf(double x);

}  // namespace sdr
