#pragma once

#include <Eigen/Dense>

namespace mlif {

using Mat2 = Eigen::Matrix2d;
using Vec2 = Eigen::Vector2d;

// Counterclockwise rotation by angle s.
inline Mat2 rotation(double s) {
    Mat2 r;
    r << std::cos(s), -std::sin(s), std::sin(s), std::cos(s);
    return r;
}

}  // namespace mlif
