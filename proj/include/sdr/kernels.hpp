#pragma once

#include <cmath>

#include "sdr/error.hpp"
#include "sdr/types.hpp"

namespace sdr {

enum class Kernel { quartic, epanechnikov };

// Quartic (biweight) kernel, (15/16)(1-u^2)^2 on [-1,1]: unit mass, symmetric,
// compact support, bounded derivative. Epanechnikov 0.75(1-u^2) is offered as
// an option; its edge derivative is discontinuous.
inline double kernel_value(Kernel k, double u) {
  const double t = 1.0 - u * u;
  if (t <= 0.0) return 0.0;
  switch (k) {
    case Kernel::quartic: return 0.9375 * t * t;
    case Kernel::epanechnikov: return 0.75 * t;
  }
  return 0.0;
}

// Scaled kernel K(u/h)/h.
inline double scaled_kernel(Kernel k, double u, double h) {
  return kernel_value(k, u / h) / h;
}

// Product kernel over coordinates: prod_j K((a_j - b_j)/h)/h.
template <typename D1, typename D2>
double product_kernel(Kernel k, const Eigen::MatrixBase<D1>& a,
                      const Eigen::MatrixBase<D2>& b, double h) {
  double w = 1.0;
  for (Index j = 0; j < a.size(); ++j) {
    w *= scaled_kernel(k, a(j) - b(j), h);
    if (w == 0.0) return 0.0;
  }
  return w;
}

inline Kernel parse_kernel(const std::string& name) {
  if (name == "quartic" || name == "biweight") return Kernel::quartic;
  if (name == "epanechnikov") return Kernel::epanechnikov;
  throw validation_error("unknown kernel: " + name);
}

inline const char* kernel_name(Kernel k) {
  return k == Kernel::quartic ? "quartic" : "epanechnikov";
}

}  // namespace sdr
