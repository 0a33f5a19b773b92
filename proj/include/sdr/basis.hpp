#pragma once

#include <cmath>
#include <utility>

#include "sdr/error.hpp"
#include "sdr/types.hpp"

namespace sdr {

// Basis of the index space in the fixed chart beta = (I_d; beta_l): the top
// d×d block is pinned to the identity and the lower (p-d)×d block carries the
// free parameters. Only this chart is represented; callers wanting another
// pivot must reorder covariates first.
template <typename Scalar = double>
class BasisMatrixT {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  BasisMatrixT() : p_(0), d_(0) {}

  BasisMatrixT(Index p, Index d) : p_(p), d_(d) {
    check_shape(p, d);
    full_.setZero(p, d);
    full_.topRows(d).setIdentity();
  }

  static BasisMatrixT from_lower(const Mat& lower, Index d) {
    BasisMatrixT b(lower.rows() + d, d);
    b.full_.bottomRows(lower.rows()) = lower;
    return b;
  }

  // Accepts any p×d matrix whose top block is already the identity.
  static BasisMatrixT from_full(const Mat& m, Index d) {
    check_shape(m.rows(), d);
    if (!m.topRows(d).isIdentity(1e-12))
      throw validation_error("basis: top block is not the identity");
    BasisMatrixT b(m.rows(), d);
    b.full_ = m;
    b.full_.topRows(d).setIdentity();
    return b;
  }

  Index p() const { return p_; }
  Index d() const { return d_; }
  Index free_count() const { return (p_ - d_) * d_; }

  const Mat& matrix() const { return full_; }
  auto lower() const { return full_.bottomRows(p_ - d_); }
  auto lower() { return full_.bottomRows(p_ - d_); }

 private:
  static void check_shape(Index p, Index d) {
    if (d < 1 || p <= d)
      throw validation_error("basis: need 1 <= d < p");
  }

  Index p_, d_;
  Mat full_;
};

using BasisMatrix = BasisMatrixT<double>;

// Column-major stack of the lower (p-d)×d block of an arbitrary p×d matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> vecl_lower(
    const Eigen::MatrixBase<Derived>& m, Index d) {
  const Index p = m.rows();
  if (d < 1 || p <= d || m.cols() != d)
    throw validation_error("vecl_lower: need p×d input with 1 <= d < p");
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> v((p - d) * d);
  for (Index k = 0; k < d; ++k)
    v.segment(k * (p - d), p - d) = m.col(k).tail(p - d);
  return v;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vecl(const BasisMatrixT<Scalar>& b) {
  return vecl_lower(b.matrix(), b.d());
}

inline Vector vecl(const BasisMatrix& b) { return vecl_lower(b.matrix(), b.d()); }

inline BasisMatrix unvecl(VecRef v, Index p, Index d) {
  if (d < 1 || p <= d) throw validation_error("unvecl: need 1 <= d < p");
  if (v.size() != (p - d) * d)
    throw validation_error("unvecl: vector length does not match (p-d)d");
  Matrix lower = Eigen::Map<const Matrix>(v.data(), p - d, d);
  return BasisMatrix::from_lower(lower, d);
}

// Thin orthonormal factor of a full-column-rank matrix.
template <typename Derived>
Matrix orthonormal_basis(const Eigen::MatrixBase<Derived>& b) {
  const Index d = b.cols();
  Eigen::ColPivHouseholderQR<Matrix> qr(b);
  if (qr.rank() < d)
    throw validation_error("orthonormal_basis: input is rank deficient");
  Eigen::HouseholderQR<Matrix> hqr(b);
  Matrix q = hqr.householderQ() * Matrix::Identity(b.rows(), d);
  return q;
}

// Frobenius norm of the difference of the two orthogonal projectors; zero iff
// the column spaces agree, at most sqrt(2d) for orthogonal spans.
template <typename D1, typename D2>
double subspace_distance(const Eigen::MatrixBase<D1>& b1,
                         const Eigen::MatrixBase<D2>& b2) {
  if (b1.rows() != b2.rows() || b1.cols() != b2.cols())
    throw validation_error("subspace_distance: shape mismatch");
  Matrix q1 = orthonormal_basis(b1);
  Matrix q2 = orthonormal_basis(b2);
  Matrix diff = q1 * q1.transpose() - q2 * q2.transpose();
  return diff.norm();
}

// Rescales an identity-upper-block estimate onto the reference's coordinate
// scale: Bhat · (upper block of Bref). Right-multiplication only, so the
// estimated column space is untouched.
inline Matrix align_to_reference(MatRef bhat, MatRef bref) {
  if (bhat.rows() != bref.rows() || bhat.cols() != bref.cols())
    throw validation_error("align_to_reference: shape mismatch");
  const Index d = bref.cols();
  Matrix upper = bref.topRows(d);
  Eigen::FullPivLU<Matrix> lu(upper);
  if (!lu.isInvertible())
    throw pivot_error("align_to_reference: reference upper block is singular");
  return bhat * upper;
}

// Least-squares alignment: the projection of the reference columns onto the
// estimated span, argmin_A ||Bhat A - Bref||_F. Reproduces Bref exactly when
// the spans coincide and stays finite for arbitrarily scaled inputs.
inline Matrix align_least_squares(MatRef bhat, MatRef bref) {
  if (bhat.rows() != bref.rows() || bhat.cols() != bref.cols())
    throw validation_error("align_least_squares: shape mismatch");
  Matrix q = orthonormal_basis(bhat);
  return q * (q.transpose() * bref);
}

}  // namespace sdr
