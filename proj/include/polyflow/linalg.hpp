#pragma once

#include <Eigen/Dense>

namespace polyflow {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace polyflow
