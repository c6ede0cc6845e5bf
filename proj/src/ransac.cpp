#include "waypointrl/ransac.hpp"

#include <Eigen/QR>
#include <stdexcept>

#include "waypointrl/rng.hpp"

namespace waypointrl::reward {

namespace {

constexpr int kMinimalPairs = 4;  // a 3D affine map has 4 dof per output row

struct AffineFit {
  Eigen::MatrixXd coefficients;
  Eigen::VectorXd intercept;
  bool ok = false;
};

AffineFit least_squares(const std::vector<CalibrationPair>& pairs, const std::vector<int>& index) {
  const int n = static_cast<int>(index.size());
  const int m = static_cast<int>(pairs[0].pixel.size());
  Eigen::MatrixXd design(n, 4);
  Eigen::MatrixXd target(n, m);
  for (int i = 0; i < n; ++i) {
    const CalibrationPair& p = pairs[static_cast<std::size_t>(index[i])];
    design.row(i) << p.world.x(), p.world.y(), p.world.z(), 1.0;
    target.row(i) = p.pixel.transpose();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  AffineFit fit;
  if (qr.rank() < 4) return fit;  // degenerate sample (coplanar points)
  const Eigen::MatrixXd theta = qr.solve(target);  // 4 x m
  fit.coefficients = theta.topRows(3).transpose();
  fit.intercept = theta.row(3).transpose();
  fit.ok = true;
  return fit;
}

double residual(const AffineFit& fit, const CalibrationPair& p) {
  return (fit.coefficients * p.world + fit.intercept - p.pixel).norm();
}

std::vector<int> inliers_of(const AffineFit& fit, const std::vector<CalibrationPair>& pairs,
                            double threshold) {
  std::vector<int> inliers;
  for (std::size_t i = 0; i < pairs.size(); ++i)
    if (residual(fit, pairs[i]) <= threshold) inliers.push_back(static_cast<int>(i));
  return inliers;
}

}  // namespace

Eigen::VectorXd CameraRegressor::predict(const Eigen::Vector3d& world) const {
  if (!fitted_) throw std::logic_error("CameraRegressor: predict called before fitting");
  return coefficients_ * world + intercept_;
}

CameraRegressor fit_ransac(const std::vector<CalibrationPair>& pairs, double inlier_threshold,
                           int iterations, std::uint64_t seed) {
  if (static_cast<int>(pairs.size()) < kMinimalPairs)
    throw std::invalid_argument("fit_ransac: need at least 4 pairs, got " +
                                std::to_string(pairs.size()));
  if (inlier_threshold <= 0.0) throw std::invalid_argument("fit_ransac: threshold must be > 0");
  if (iterations < 1) throw std::invalid_argument("fit_ransac: iterations must be >= 1");
  const int m = static_cast<int>(pairs[0].pixel.size());
  if (m < 1) throw std::invalid_argument("fit_ransac: empty pixel observations");
  for (const auto& p : pairs)
    if (p.pixel.size() != m)
      throw std::invalid_argument("fit_ransac: inconsistent pixel dimensions");

  const int n = static_cast<int>(pairs.size());
  Rng rng(seed);
  std::vector<int> index(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) index[static_cast<std::size_t>(i)] = i;

  std::vector<int> best_inliers;
  for (int iter = 0; iter < iterations; ++iter) {
    for (int j = 0; j < kMinimalPairs; ++j) {
      const int k = rng.uniform_int(j, n - 1);
      std::swap(index[static_cast<std::size_t>(j)], index[static_cast<std::size_t>(k)]);
    }
    const std::vector<int> sample(index.begin(), index.begin() + kMinimalPairs);
    const AffineFit fit = least_squares(pairs, sample);
    if (!fit.ok) continue;
    std::vector<int> inliers = inliers_of(fit, pairs, inlier_threshold);
    if (inliers.size() > best_inliers.size()) best_inliers = std::move(inliers);
  }

  if (static_cast<int>(best_inliers.size()) < kMinimalPairs)
    throw std::runtime_error("fit_ransac: consensus set below minimal size");

  AffineFit refit = least_squares(pairs, best_inliers);
  if (!refit.ok) throw std::runtime_error("fit_ransac: consensus set is degenerate");

  CameraRegressor reg;
  reg.coefficients_ = refit.coefficients;
  reg.intercept_ = refit.intercept;
  reg.inlier_threshold_ = inlier_threshold;
  reg.inlier_indices_ = inliers_of(refit, pairs, inlier_threshold);
  reg.fitted_ = true;
  return reg;
}

geom::PixelPoint3 robot_pixel(const CameraRegressor& topdown, const CameraRegressor& side,
                              const Eigen::Vector3d& effector) {
  if (!topdown.fitted() || !side.fitted())
    throw std::logic_error("robot_pixel: both regressors must be fitted");
  if (topdown.output_dim() != 2 || side.output_dim() != 1)
    throw std::logic_error("robot_pixel: expected a 2D top-down and a 1D side regressor");
  const Eigen::VectorXd uv = topdown.predict(effector);
  const Eigen::VectorXd w = side.predict(effector);
  return {uv(0), uv(1), w(0)};
}

}  // namespace waypointrl::reward
