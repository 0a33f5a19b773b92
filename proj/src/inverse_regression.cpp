#include "sdr/inverse_regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sdr/error.hpp"

namespace sdr {

namespace {

// Quantile slicing by value so ties stay together; empty slices (heavy ties)
// are merged into their neighbors.
std::vector<std::vector<Index>> slice_indices(VecRef y, int n_slices,
                                              int* merged) {
  const Index n = y.size();
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index(0));
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return y(a) < y(b); });

  std::vector<std::vector<Index>> slices;
  Index start = 0;
  for (int s = 0; s < n_slices; ++s) {
    Index stop = (n * (s + 1)) / n_slices;
    // never split a run of tied response values across slices
    while (stop < n && stop > start && y(order[stop]) == y(order[stop - 1]))
      ++stop;
    if (stop > start)
      slices.emplace_back(order.begin() + start, order.begin() + stop);
    start = stop;
  }
  if (merged) *merged = n_slices - int(slices.size());
  return slices;
}

struct SliceMoments {
  std::vector<Vector> mean;
  std::vector<Matrix> second;  // E(zz' | slice), filled on demand
  std::vector<double> weight;
};

SliceMoments slice_moments(const Matrix& z,
                           const std::vector<std::vector<Index>>& slices,
                           bool with_second) {
  const Index p = z.cols();
  SliceMoments m;
  for (const auto& idx : slices) {
    Vector mu = Vector::Zero(p);
    Matrix v = Matrix::Zero(p, p);
    for (Index i : idx) {
      mu += z.row(i).transpose();
      if (with_second) v.noalias() += z.row(i).transpose() * z.row(i);
    }
    mu /= double(idx.size());
    if (with_second) v /= double(idx.size());
    m.mean.push_back(std::move(mu));
    if (with_second) m.second.push_back(std::move(v));
    m.weight.push_back(double(idx.size()) / double(z.rows()));
  }
  return m;
}

// Positive sign on the largest-magnitude entry of each eigenvector.
void fix_signs(Matrix& v) {
  for (Index k = 0; k < v.cols(); ++k) {
    Index imax = 0;
    v.col(k).cwiseAbs().maxCoeff(&imax);
    if (v(imax, k) < 0) v.col(k) = -v.col(k);
  }
}

SliceBasis spectral_basis(VecRef y, MatRef x, int d, int n_slices,
                          bool directional) {
  if (d < 1 || d >= x.cols())
    throw validation_error("slice estimator: need 1 <= d < p");
  if (n_slices < d + 1)
    throw validation_error("slice estimator: need n_slices >= d + 1");
  if (y.size() != x.rows())
    throw validation_error("slice estimator: response and covariates disagree");

  SliceBasis out;
  auto [z, s] = standardize(x);
  out.standardizer = s;

  int merged = 0;
  auto slices = slice_indices(y, n_slices, &merged);
  out.merged_slices = merged;
  if (merged > 0)
    out.warnings.push_back("merged " + std::to_string(merged) +
                           " empty slices into neighbors");
  if (int(slices.size()) < d + 1)
    throw validation_error("slice estimator: fewer usable slices than d + 1");

  const Index p = x.cols();
  Matrix kernel = Matrix::Zero(p, p);
  auto m = slice_moments(z, slices, directional);
  if (!directional) {
    for (std::size_t si = 0; si < m.mean.size(); ++si)
      kernel.noalias() += m.weight[si] * m.mean[si] * m.mean[si].transpose();
  } else {
    const Matrix eye2 = 2.0 * Matrix::Identity(p, p);
    for (std::size_t si = 0; si < m.mean.size(); ++si) {
      for (std::size_t ti = 0; ti < m.mean.size(); ++ti) {
        Matrix a = eye2 - m.second[si] - m.second[ti] +
                   m.mean[si] * m.mean[ti].transpose() +
                   m.mean[ti] * m.mean[si].transpose();
        kernel.noalias() += (m.weight[si] * m.weight[ti]) * (a * a);
      }
    }
  }

  Eigen::SelfAdjointEigenSolver<Matrix> eig(kernel);
  if (eig.info() != Eigen::Success)
    throw degenerate_design_error("slice estimator: eigendecomposition failed");
  // eigenvalues ascending; take the top d, descending
  Matrix vecs(p, d);
  Vector vals(d);
  for (int k = 0; k < d; ++k) {
    vecs.col(k) = eig.eigenvectors().col(p - 1 - k);
    vals(k) = eig.eigenvalues()(p - 1 - k);
  }
  fix_signs(vecs);
  Eigen::FullPivLU<Matrix> lu_std(Matrix(vecs.topRows(d)));
  if (!lu_std.isInvertible())
    throw pivot_error(
        "slice estimator: upper block is singular; reorder the covariates");
  out.basis_std = vecs * lu_std.inverse();
  out.basis_std.topRows(d).setIdentity();
  out.eigenvalues = vals;
  // independence-noise scale for the slice-mean spectrum
  out.weak = vals.maxCoeff() <
             5.0 * double(p) * double(n_slices) / double(x.rows());

  out.span_x = s.whitener * vecs;
  Matrix upper = out.span_x.topRows(d);
  Eigen::FullPivLU<Matrix> lu(upper);
  if (!lu.isInvertible())
    throw pivot_error(
        "slice estimator: upper block is singular; reorder the covariates");
  out.basis = out.span_x * lu.inverse();
  out.basis.topRows(d).setIdentity();
  return out;
}

}  // namespace

SliceBasis sir_estimate(VecRef y, MatRef x, int d, int n_slices) {
  return spectral_basis(y, x, d, n_slices, false);
}

SliceBasis dr_estimate(VecRef y, MatRef x, int d, int n_slices) {
  return spectral_basis(y, x, d, n_slices, true);
}

}  // namespace sdr
