#pragma once

#include <string>
#include <vector>

#include "sdr/standardize.hpp"
#include "sdr/types.hpp"

namespace sdr {

// Spectral estimate from slice moments of the standardized covariates.
struct SliceBasis {
  Matrix basis;          // p×d, original scale, identity upper block
  Matrix span_x;         // p×d, original scale, un-normalized span
  Matrix basis_std;      // p×d eigenvectors on the standardized scale
  Vector eigenvalues;    // top d, descending
  bool weak = false;     // all eigenvalues at the independence-noise scale
  int merged_slices = 0; // empty quantile slices folded into neighbors
  Standardizer standardizer;
  std::vector<std::string> warnings;
};

// Sliced inverse regression: top eigenvectors of the between-slice covariance
// of slice means of the standardized covariates.
SliceBasis sir_estimate(VecRef y, MatRef x, int d, int n_slices = 10);

// Directional regression via slice pairs: with m_s, V_s the slice means and
// second moments of standardized covariates, average (2I - V_s - V_t +
// m_s m_t' + m_t m_s')^2 over pairs with slice-probability weights and take
// the top eigenvectors.
SliceBasis dr_estimate(VecRef y, MatRef x, int d, int n_slices = 10);

}  // namespace sdr
