#pragma once

#include <Eigen/Dense>

namespace sdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Eigen::Index;

typedef const Eigen::Ref<const Matrix>& MatRef;
typedef const Eigen::Ref<const Vector>& VecRef;

}  // namespace sdr
