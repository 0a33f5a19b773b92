#pragma once

#include <memory>
#include <string>

#include "sdr/kernels.hpp"
#include "sdr/types.hpp"

namespace sdr {

struct SmootherSpec {
  Kernel kernel = Kernel::quartic;
  double h = 0;     // generic conditional means
  double h_x = 0;   // E(x | index)
  double h_y = 0;   // density fit, covariate direction
  double b = 0;     // density fit, response direction
  double trim = 1e-4;
  double density_floor = 1e-4;

  void validate() const;
};

// Rate-based bandwidths, each scaled by the spread of the projected
// covariates (geometric mean across directions): d=1 uses n^{-1/5} for the
// conditional means, n^{-1/6} and n^{-1/7} for the density pair; d=2 shifts
// every exponent down one; d>=3 extrapolates the same pattern.
SmootherSpec default_bandwidths(int n, int d, VecRef scale);

// Kernel-weighted mean of fixed targets given projected covariates. The
// source sample is bound at construction; queries may fall anywhere, and a
// query whose mean kernel weight drops below trim is flagged.
class NwEstimator {
 public:
  NwEstimator(Matrix targets, Matrix u, double h, Kernel kernel, double trim);

  struct Eval {
    Vector value;
    double denominator;  // mean kernel weight, a density estimate at u0
    bool trimmed;
  };
  Eval operator()(VecRef u0) const;

  Index target_dim() const { return targets_.cols(); }
  Index dim() const { return u_.cols(); }

 private:
  Matrix targets_, u_;
  double h_, trim_;
  Kernel kernel_;
};

Vector nw_regress(MatRef targets, MatRef u, VecRef u0, double h,
                  Kernel kernel = Kernel::quartic, double trim = 1e-4,
                  bool* trimmed = nullptr);

// Double-kernel local-linear estimate of the conditional density of the
// response given the projected covariates: smooth K_b(Y_i - y) against U_i
// with a local linear fit; the intercept estimates the density, the slope its
// gradient in u. Queries are solved lazily, one (d+1)-dimensional weighted
// least squares each.
class ConditionalDensityFit {
 public:
  ConditionalDensityFit(Vector y, Matrix u, SmootherSpec spec);

  struct Eval {
    double density;      // floored at density_floor
    double raw_density;  // unfloored intercept
    Vector gradient;
    bool floored;
    bool trimmed;   // kernel mass at u below trim
    bool fallback;  // locally singular design, local-constant value
  };
  Eval operator()(double y0, VecRef u0) const;

  Index dim() const { return u_.cols(); }
  const Matrix& source_projections() const { return u_; }
  const SmootherSpec& spec() const { return spec_; }

 private:
  Vector y_;
  Matrix u_;
  SmootherSpec spec_;
};

ConditionalDensityFit fit_conditional_density(VecRef y, MatRef u,
                                              const SmootherSpec& spec);

// gradient / max(density, density_floor); finite by construction.
Vector log_density_gradient(const ConditionalDensityFit& fit, double y,
                            VecRef u);

}  // namespace sdr
