#pragma once

#include <Eigen/Dense>

namespace ggmac {

// n x d, one sample per row.
using SampleMatrix = Eigen::MatrixXd;

// n x d with entries exactly +1 or -1.
using SignMatrix = Eigen::MatrixXd;

// (n/2) x 2d, one de-stacked channel output block per row.
using ReceivedMatrix = Eigen::MatrixXd;

}  // namespace ggmac
