#include "sdr/inference.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sdr/error.hpp"

namespace sdr {

namespace {

Matrix second_moment(MatRef rows) {
  const Index n = rows.rows();
  if (n == 0) throw validation_error("vcov: empty score matrix");
  return rows.transpose() * rows / double(n);
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double condition_number(MatRef a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  const double lo = svd.singularValues().minCoeff();
  const double hi = svd.singularValues().maxCoeff();
  return lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
}

}  // namespace

Matrix sandwich_vcov(MatRef score_matrix, MatRef jacobian) {
  if (jacobian.rows() != jacobian.cols() ||
      jacobian.rows() != score_matrix.cols())
    throw validation_error("sandwich: jacobian must be p_t x p_t");
  const double cond = condition_number(jacobian);
  if (!(cond < 1e10))
    throw degenerate_design_error(
        "sandwich: jacobian is numerically singular (condition number " +
        std::to_string(cond) + ")");
  Matrix b = second_moment(score_matrix);
  Matrix ainv = jacobian.fullPivLu().inverse();
  return symmetrize(ainv * b * ainv.transpose());
}

Matrix efficient_vcov(MatRef score_matrix) {
  Matrix m = second_moment(score_matrix);
  const double cond = condition_number(m);
  if (!(cond < 1e12))
    throw degenerate_design_error(
        "efficient vcov: score second moment is numerically singular "
        "(condition number " + std::to_string(cond) + ")");
  return symmetrize(m.fullPivLu().inverse());
}

Matrix remark3_information(ScoreData data, const BasisMatrix& b,
                           const std::function<Vector(double, VecRef)>& grad,
                           const NwEstimator& ex, double h, Kernel kernel,
                           double trim) {
  const Index n = data.y.size(), p = b.p(), d = b.d(), pl = p - d;
  const Matrix u = data.x * b.matrix();

  Matrix gg(n, d * d), rr(n, pl * pl);
  std::vector<char> drop(n, 0);
  for (Index i = 0; i < n; ++i) {
    const Vector ui = u.row(i).transpose();
    auto exv = ex(ui);
    if (exv.trimmed) {
      drop[i] = 1;
      gg.row(i).setZero();
      rr.row(i).setZero();
      continue;
    }
    Vector g = grad(data.y(i), ui);
    Vector r = (data.x.row(i).transpose() - exv.value).tail(pl);
    Matrix go = g * g.transpose();
    Matrix ro = r * r.transpose();
    gg.row(i) = Eigen::Map<Vector>(go.data(), d * d).transpose();
    rr.row(i) = Eigen::Map<Vector>(ro.data(), pl * pl).transpose();
  }

  NwEstimator eg(gg, u, h, kernel, trim);
  NwEstimator er(rr, u, h, kernel, trim);
  Matrix info = Matrix::Zero(pl * d, pl * d);
  Index used = 0;
  for (Index i = 0; i < n; ++i) {
    if (drop[i]) continue;
    const Vector ui = u.row(i).transpose();
    auto egv = eg(ui);
    auto erv = er(ui);
    if (egv.trimmed || erv.trimmed) continue;
    Eigen::Map<const Matrix> gm(egv.value.data(), d, d);
    Eigen::Map<const Matrix> rm(erv.value.data(), pl, pl);
    for (Index k = 0; k < d; ++k)
      for (Index l = 0; l < d; ++l)
        info.block(k * pl, l * pl, pl, pl) += gm(k, l) * rm;
    ++used;
  }
  if (used == 0) throw validation_error("remark3: all observations trimmed");
  return symmetrize(info / double(used));
}

Matrix remark3_information(ScoreData data, const BasisMatrix& b,
                           const ConditionalDensityFit& fit,
                           const NwEstimator& ex) {
  auto grad = [&fit](double y, VecRef u) {
    return log_density_gradient(fit, y, u);
  };
  const SmootherSpec& sp = fit.spec();
  return remark3_information(data, b, grad, ex, sp.h, sp.kernel, sp.trim);
}

InferenceReport confidence_intervals(VecRef beta_hat, MatRef vcov, Index n,
                                     double level) {
  if (!(level >= 0.0 && level < 1.0))
    throw validation_error("confidence_intervals: level must be in [0, 1)");
  if (vcov.rows() != beta_hat.size() || vcov.cols() != beta_hat.size())
    throw validation_error("confidence_intervals: vcov shape mismatch");
  InferenceReport rep;
  rep.level = level;
  rep.vcov = vcov;
  const double z = level == 0.0 ? 0.0 : normal_quantile(0.5 * (1.0 + level));
  rep.se = (vcov.diagonal().cwiseMax(0.0) / double(n)).cwiseSqrt();
  rep.ci_lower = beta_hat - z * rep.se;
  rep.ci_upper = beta_hat + z * rep.se;
  return rep;
}

double cubic_r2(VecRef y, VecRef index) {
  const Index n = y.size();
  if (n < 5) throw validation_error("cubic_r2: need n >= 5");
  if (index.size() != n) throw validation_error("cubic_r2: length mismatch");
  const double sd = std::sqrt(
      (index.array() - index.mean()).square().sum() / double(n - 1));
  if (!(sd > 0))
    throw validation_error("cubic_r2: index is constant");

  Matrix design(n, 4);
  design.col(0).setOnes();
  design.col(1) = index;
  design.col(2) = index.array().square();
  design.col(3) = index.array().cube();
  Vector coef = design.completeOrthogonalDecomposition().solve(Vector(y));
  const double ss_res = (Vector(y) - design * coef).squaredNorm();
  const double ss_tot = (y.array() - y.mean()).square().sum();
  if (!(ss_tot > 0)) throw validation_error("cubic_r2: response is constant");
  const double r2 = 1.0 - ss_res / ss_tot;
  return 1.0 - (1.0 - r2) * double(n - 1) / double(n - 4);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

// Acklam's rational approximation refined by one Halley step.
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0))
    throw validation_error("normal_quantile: p must be in (0,1)");
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double bb[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                              -1.556989798598866e+02, 6.680131188771972e+01,
                              -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00, 2.938163982698783e+00};
  static const double dd[] = {7.784695709041462e-03, 3.224671290700398e-01,
                              2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  } else if (p <= 1.0 - plow) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) *
        q /
        (((((bb[0] * r + bb[1]) * r + bb[2]) * r + bb[3]) * r + bb[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
  }
  const double e = normal_cdf(x) - p;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

}  // namespace sdr
