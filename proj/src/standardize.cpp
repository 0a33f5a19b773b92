#include "sdr/standardize.hpp"

#include <cmath>
#include <string>

#include "sdr/error.hpp"

namespace sdr {

std::pair<Matrix, Standardizer> standardize(MatRef x) {
  const Index n = x.rows(), p = x.cols();
  if (n <= p)
    throw validation_error("standardize: need more rows than columns (n=" +
                           std::to_string(n) + ", p=" + std::to_string(p) + ")");
  if (!x.allFinite()) throw validation_error("standardize: non-finite entries");

  Vector mean = x.colwise().mean();
  Matrix centered = x.rowwise() - mean.transpose();
  Matrix cov = centered.transpose() * centered / double(n - 1);

  Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
  if (eig.info() != Eigen::Success)
    throw degenerate_design_error("standardize: eigendecomposition failed");
  const Vector& ev = eig.eigenvalues();
  const double lo = ev.minCoeff(), hi = ev.maxCoeff();
  if (!(lo > 0.0) || hi / lo >= 1e12)
    throw degenerate_design_error(
        "standardize: covariance is numerically singular (eigenvalue " +
        std::to_string(lo) + ", largest " + std::to_string(hi) + ")");

  Vector inv_sqrt = ev.array().rsqrt();
  Vector sqrt_ev = ev.array().sqrt();
  Standardizer s;
  s.mean = mean;
  s.whitener =
      eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  s.dewhitener =
      eig.eigenvectors() * sqrt_ev.asDiagonal() * eig.eigenvectors().transpose();
  return {centered * s.whitener, std::move(s)};
}

Matrix backtransform_span(const BasisMatrix& b, const Standardizer& s) {
  if (s.whitener.rows() != b.p())
    throw validation_error("backtransform: standardizer dimension mismatch");
  return s.whitener * b.matrix();
}

Matrix backtransform_basis(const BasisMatrix& b, const Standardizer& s) {
  Matrix m = backtransform_span(b, s);
  const Index d = b.d();
  Matrix upper = m.topRows(d);
  Eigen::FullPivLU<Matrix> lu(upper);
  if (!lu.isInvertible())
    throw pivot_error(
        "backtransform: upper block is singular on the original scale; "
        "reorder the covariates so the leading block is full rank");
  Matrix out = m * lu.inverse();
  out.topRows(d).setIdentity();
  return out;
}

}  // namespace sdr
