#pragma once

#include <Eigen/Dense>

namespace plsim {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

}  // namespace plsim
