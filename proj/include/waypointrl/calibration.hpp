#pragma once

#include <cstdint>
#include <vector>

#include "waypointrl/ransac.hpp"
#include "waypointrl/sim.hpp"

namespace waypointrl::reward {

struct CalibrationSet {
  std::vector<CalibrationPair> topdown;
  std::vector<CalibrationPair> side;
};

// Random effector poses observed through the (noisy) camera projection,
// with a fraction of gross outliers mixed in, as robust-fitting input.
CalibrationSet make_calibration_pairs(const sim::Projection& proj, const sim::SimParams& params,
                                      int n, double outlier_fraction, std::uint64_t seed);

struct ViewRegressors {
  CameraRegressor topdown;
  CameraRegressor side;
};

ViewRegressors fit_view_regressors(const CalibrationSet& calibration, double inlier_threshold,
                                   int iterations, std::uint64_t seed);

}  // namespace waypointrl::reward
