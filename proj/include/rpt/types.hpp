#pragma once

#include <Eigen/Dense>

namespace rpt {

// All numerics are dense, double precision, rank <= 2. Vectors are column
// vectors; matrices are (rows x cols) in Eigen's default layout.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace rpt
