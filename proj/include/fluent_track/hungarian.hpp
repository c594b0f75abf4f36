#pragma once

#include <Eigen/Dense>
#include <vector>

namespace fluent_track {

/// Minimum-cost assignment on a rectangular matrix; result[row] is the chosen column or -1.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

}  // namespace fluent_track
