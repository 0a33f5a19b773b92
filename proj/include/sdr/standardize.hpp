#pragma once

#include <utility>

#include "sdr/basis.hpp"
#include "sdr/types.hpp"

namespace sdr {

// Affine map taking the covariate sample to mean zero and identity
// covariance. The whitener is the symmetric inverse square root of the
// sample covariance, so it is unique and independent of column order.
struct Standardizer {
  Vector mean;
  Matrix whitener;    // cov^{-1/2}
  Matrix dewhitener;  // cov^{1/2}

  static Standardizer identity(Index p) {
    return {Vector::Zero(p), Matrix::Identity(p, p), Matrix::Identity(p, p)};
  }
};

// Z = (X - mean) * whitener. Requires n > p and a covariance with condition
// number below 1e12; otherwise the design is reported as degenerate.
std::pair<Matrix, Standardizer> standardize(MatRef x);

// Carries a basis fitted on the standardized scale back to the original
// covariate scale: whitener * B, renormalized to an identity upper block.
Matrix backtransform_basis(const BasisMatrix& b, const Standardizer& s);

// Same subspace without the pivot renormalization; always well defined.
Matrix backtransform_span(const BasisMatrix& b, const Standardizer& s);

}  // namespace sdr
