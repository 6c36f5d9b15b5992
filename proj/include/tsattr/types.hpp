#pragma once

#include <Eigen/Dense>

namespace tsattr {

// A fixed-length multivariate time-series window. Row r (0-based) holds time
// step t = r + 1, column c holds variable d = c + 1; serialized formats and
// public index arguments are 1-based throughout.
using Window = Eigen::MatrixXd;

}  // namespace tsattr
