#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "waypointrl/geometry.hpp"

namespace waypointrl::reward {

// One calibration sample: a workspace point and its observed pixel
// coordinates in a single camera view (2D for top-down, 1D for side).
struct CalibrationPair {
  Eigen::Vector3d world;
  Eigen::VectorXd pixel;
};

// Robust affine map workspace -> pixels for one camera view,
// pixel = coefficients * world + intercept.
class CameraRegressor {
 public:
  CameraRegressor() = default;

  bool fitted() const { return fitted_; }
  int output_dim() const { return static_cast<int>(coefficients_.rows()); }

  Eigen::VectorXd predict(const Eigen::Vector3d& world) const;

  const Eigen::MatrixXd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& intercept() const { return intercept_; }
  double inlier_threshold() const { return inlier_threshold_; }
  const std::vector<int>& inlier_indices() const { return inlier_indices_; }

 private:
  Eigen::MatrixXd coefficients_;  // output_dim x 3
  Eigen::VectorXd intercept_;
  double inlier_threshold_ = 0.0;
  std::vector<int> inlier_indices_;
  bool fitted_ = false;

  friend CameraRegressor fit_ransac(const std::vector<CalibrationPair>&, double, int,
                                    std::uint64_t);
};

// Standard RANSAC: sample minimal sets of 4 pairs, fit the affine map by
// least squares, count inliers within `inlier_threshold` (pixel residual
// norm), then refit on the best consensus set. Deterministic per seed.
CameraRegressor fit_ransac(const std::vector<CalibrationPair>& pairs, double inlier_threshold,
                           int iterations, std::uint64_t seed);

// Combines the two fitted views into a 3D pixel point: (u, v) from the
// top-down regressor, w from the side regressor.
geom::PixelPoint3 robot_pixel(const CameraRegressor& topdown, const CameraRegressor& side,
                              const Eigen::Vector3d& effector);

}  // namespace waypointrl::reward
