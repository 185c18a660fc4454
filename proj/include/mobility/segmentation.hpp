#ifndef MOBILITY_SEGMENTATION_HPP
#define MOBILITY_SEGMENTATION_HPP

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include <Eigen/Core>

#include "mobility/camera.hpp"

namespace mobility {

/// Plane n.p + d = 0 with unit normal, oriented so that the camera origin has
/// positive signed distance (d >= 0).
struct PlaneModel {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitY();
  double offset = 0.0;
  std::size_t inlier_count = 0;

  double signed_distance(const Eigen::Vector3d& p) const { return normal.dot(p) + offset; }
};

/// Connected component of the cloud. Members are indices into the clustered
/// cloud, in ascending order.
struct Segment {
  std::vector<std::uint32_t> members;
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();

  std::size_t size() const { return members.size(); }
};

struct SegmentationConfig {
  int cloud_stride = 2;  ///< pixel decimation before segmentation
  int ransac_iterations = 200;
  double plane_inlier_dist = 0.03;  ///< meters, also the removal band
  double min_inlier_ratio = 0.10;
  std::uint64_t ransac_seed = 0;
  double link_dist = 0.15;  ///< meters
  std::size_t min_cluster_size = 200;
  std::size_t max_cluster_size = std::numeric_limits<std::size_t>::max();

  void validate() const;
};

/// RANSAC over `iterations` minimal samples; the plane with the most inliers
/// wins (first found on ties). Bit-reproducible for a fixed seed.
PlaneModel fit_ground_plane(const Cloud& points, int iterations, double inlier_dist, std::uint64_t seed,
                            double min_inlier_ratio = 0.10);

/// Keeps the points whose unsigned distance to the plane exceeds dist_m.
Cloud remove_plane(const Cloud& points, const PlaneModel& plane, double dist_m);

/// Connected components of the graph linking points at distance <= link_dist.
/// Components outside [min_size, max_size] are dropped. Ordered by descending
/// size, then by smallest member index.
std::vector<Segment> euclidean_cluster(const Cloud& points, double link_dist, std::size_t min_size,
                                       std::size_t max_size = std::numeric_limits<std::size_t>::max());

}  // namespace mobility

#endif  // MOBILITY_SEGMENTATION_HPP
