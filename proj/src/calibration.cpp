#include "waypointrl/calibration.hpp"

#include <stdexcept>

namespace waypointrl::reward {

CalibrationSet make_calibration_pairs(const sim::Projection& proj, const sim::SimParams& params,
                                      int n, double outlier_fraction, std::uint64_t seed) {
  if (n < 4) throw std::invalid_argument("make_calibration_pairs: need at least 4 samples");
  Rng rng(seed);
  CalibrationSet set;
  set.topdown.reserve(static_cast<std::size_t>(n));
  set.side.reserve(static_cast<std::size_t>(n));
  const Eigen::Vector3d lo = params.workspace_min;
  const Eigen::Vector3d hi = params.workspace_max;
  for (int i = 0; i < n; ++i) {
    const Eigen::Vector3d world(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                                rng.uniform(lo.z(), hi.z()));
    geom::PixelPoint3 px = proj.project_point(world, &rng);
    const bool outlier = rng.uniform() < outlier_fraction;
    if (outlier) {
      // Gross mislocalization: offset by a large random displacement.
      px.u += rng.uniform(60.0, 160.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      px.v += rng.uniform(60.0, 160.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      px.w += rng.uniform(60.0, 160.0) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
    }
    Eigen::VectorXd top(2);
    top << px.u, px.v;
    Eigen::VectorXd side(1);
    side << px.w;
    set.topdown.push_back({world, top});
    set.side.push_back({world, side});
  }
  return set;
}

ViewRegressors fit_view_regressors(const CalibrationSet& calibration, double inlier_threshold,
                                   int iterations, std::uint64_t seed) {
  ViewRegressors out;
  out.topdown = fit_ransac(calibration.topdown, inlier_threshold, iterations, split_seed(seed, 1));
  out.side = fit_ransac(calibration.side, inlier_threshold, iterations, split_seed(seed, 2));
  return out;
}

}  // namespace waypointrl::reward
