#include "sdr/smoothing.hpp"

#include <cmath>

#include "sdr/error.hpp"

namespace sdr {

void SmootherSpec::validate() const {
  if (!(h > 0) || !(h_x > 0) || !(h_y > 0) || !(b > 0))
    throw validation_error("smoother: bandwidths must be strictly positive");
  if (!(trim > 0) || !(density_floor > 0))
    throw validation_error("smoother: trim and density_floor must be positive");
}

SmootherSpec default_bandwidths(int n, int d, VecRef scale) {
  if (n < 2) throw validation_error("default_bandwidths: need n >= 2");
  if (d < 1) throw validation_error("default_bandwidths: need d >= 1");
  if (scale.size() != d)
    throw validation_error("default_bandwidths: scale must have length d");
  if ((scale.array() <= 0).any())
    throw validation_error("default_bandwidths: scale entries must be positive");

  const double s = std::exp(scale.array().log().mean());
  const double nn = double(n);
  SmootherSpec spec;
  spec.h = std::pow(nn, -1.0 / (d + 4)) * s;
  spec.h_x = spec.h;
  spec.h_y = std::pow(nn, -1.0 / (d + 5)) * s;
  spec.b = std::pow(nn, -1.0 / (d + 6)) * s;
  return spec;
}

NwEstimator::NwEstimator(Matrix targets, Matrix u, double h, Kernel kernel,
                         double trim)
    : targets_(std::move(targets)),
      u_(std::move(u)),
      h_(h),
      trim_(trim),
      kernel_(kernel) {
  if (u_.rows() == 0) throw validation_error("nw: empty sample");
  if (targets_.rows() != u_.rows())
    throw validation_error("nw: targets and projections disagree on n");
  if (!(h_ > 0)) throw validation_error("nw: bandwidth must be positive");
}

NwEstimator::Eval NwEstimator::operator()(VecRef u0) const {
  if (u0.size() != u_.cols())
    throw validation_error("nw: query dimension mismatch");
  const Index n = u_.rows();
  Vector num = Vector::Zero(targets_.cols());
  double den = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = product_kernel(kernel_, u_.row(i).transpose(), u0, h_);
    if (w == 0.0) continue;
    den += w;
    num += w * targets_.row(i).transpose();
  }
  den /= double(n);
  num /= double(n);
  const bool trimmed = den < trim_;
  return {num / std::max(den, trim_), den, trimmed};
}

Vector nw_regress(MatRef targets, MatRef u, VecRef u0, double h, Kernel kernel,
                  double trim, bool* trimmed) {
  NwEstimator nw{Matrix(targets), Matrix(u), h, kernel, trim};
  auto eval = nw(u0);
  if (trimmed) *trimmed = eval.trimmed;
  return eval.value;
}

ConditionalDensityFit::ConditionalDensityFit(Vector y, Matrix u,
                                             SmootherSpec spec)
    : y_(std::move(y)), u_(std::move(u)), spec_(spec) {
  spec_.validate();
  if (y_.size() != u_.rows())
    throw validation_error("density fit: response and projections disagree on n");
  if (y_.size() <= u_.cols() + 1)
    throw validation_error("density fit: need n > d + 1");
}

ConditionalDensityFit::Eval ConditionalDensityFit::operator()(
    double y0, VecRef u0) const {
  const Index n = y_.size(), d = u_.cols();
  if (u0.size() != d) throw validation_error("density fit: query dim mismatch");

  // Weighted normal equations for K_b(Y_i - y0) ~ a + c'(U_i - u0) with
  // weights K_hy(U_i - u0), accumulated over the kernel window only.
  Matrix s = Matrix::Zero(d + 1, d + 1);
  Vector r = Vector::Zero(d + 1);
  Vector c(d + 1);
  double wsum = 0.0;
  for (Index i = 0; i < n; ++i) {
    const double w = product_kernel(spec_.kernel, u_.row(i).transpose(), u0,
                                    spec_.h_y);
    if (w == 0.0) continue;
    wsum += w;
    const double t = scaled_kernel(spec_.kernel, y_(i) - y0, spec_.b);
    c(0) = 1.0;
    c.tail(d) = u_.row(i).transpose() - u0;
    s.noalias() += w * c * c.transpose();
    r.noalias() += (w * t) * c;
  }
  const double den = wsum / double(n);
  const bool trimmed = den < spec_.trim;

  Eval out;
  out.trimmed = trimmed;
  out.fallback = false;
  if (wsum <= 0.0) {
    out.raw_density = 0.0;
    out.gradient = Vector::Zero(d);
    out.fallback = true;
  } else {
    Eigen::LDLT<Matrix> ldlt(s);
    Vector sol = ldlt.solve(r);
    const bool bad = ldlt.info() != Eigen::Success || !sol.allFinite() ||
                     (s * sol - r).norm() > 1e-8 * (r.norm() + 1.0);
    if (bad) {
      out.raw_density = r(0) / wsum;  // local constant
      out.gradient = Vector::Zero(d);
      out.fallback = true;
    } else {
      out.raw_density = sol(0);
      out.gradient = sol.tail(d);
    }
  }
  out.floored = out.raw_density < spec_.density_floor;
  out.density = std::max(out.raw_density, spec_.density_floor);
  if (out.fallback && trimmed) out.gradient.setZero();
  return out;
}

ConditionalDensityFit fit_conditional_density(VecRef y, MatRef u,
                                              const SmootherSpec& spec) {
  return ConditionalDensityFit{Vector(y), Matrix(u), spec};
}

Vector log_density_gradient(const ConditionalDensityFit& fit, double y,
                            VecRef u) {
  auto eval = fit(y, u);
  return eval.gradient / eval.density;
}

}  // namespace sdr
