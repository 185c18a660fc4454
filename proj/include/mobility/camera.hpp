#ifndef MOBILITY_CAMERA_HPP
#define MOBILITY_CAMERA_HPP

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace mobility {

// Axis conventions
//
// Camera frame: x right, y down, z along the optical axis (meters).
// World frame: gravity aligned with y pointing down, origin at the height of
// the camera. The ground plane is spanned by world x and z, so a ground
// position (x, y) is the world point's (x, z). With an identity camera pose a
// camera point (x_c, y_c, z_c) therefore lands on the ground at (x_c, z_c).

using Cloud = std::vector<Eigen::Vector3f>;
using Pose = Eigen::Isometry3d;  ///< camera -> world
using GroundPoint = Eigen::Vector2d;

/// Pinhole intrinsics plus the valid depth range of the sensor.
struct CameraModel {
  double fx = 540.0;
  double fy = 540.0;
  double cx = 480.0;
  double cy = 270.0;
  int width = 960;
  int height = 540;
  double min_depth = 0.5;  ///< meters
  double max_depth = 8.0;  ///< meters

  /// Throws Error(Configuration) when an invariant is violated.
  void validate() const;

  Eigen::Vector2d project(const Eigen::Vector3d& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }
  Eigen::Vector3d back_project(double u, double v, double z) const {
    return {(u - cx) * z / fx, (v - cy) * z / fy, z};
  }
  bool depth_in_range(double z) const { return z >= min_depth && z <= max_depth; }
};

/// Ground-robot pose: camera at ground position (x, z) looking along heading
/// `yaw` (radians, 0 = world +z, positive turns toward world +x).
Pose make_pose(double x, double z, double yaw);

/// Ground-plane coordinates of a world point.
inline GroundPoint to_ground(const Eigen::Vector3d& world) { return {world.x(), world.z()}; }

/// Single depth image. Depth is stored in millimeters, 0 marks an invalid pixel.
struct DepthFrame {
  int frame_id = 0;
  double timestamp = 0.0;  ///< seconds
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> depth;  ///< row-major, width * height
  Pose camera_pose = Pose::Identity();

  DepthFrame() = default;
  DepthFrame(int id, double t, int w, int h, const Pose& pose = Pose::Identity())
    : frame_id(id), timestamp(t), width(w), height(h),
      depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0), camera_pose(pose) {}

  std::uint16_t at(int u, int v) const { return depth[static_cast<std::size_t>(v) * width + u]; }
  std::uint16_t& at(int u, int v) { return depth[static_cast<std::size_t>(v) * width + u]; }
};

/// Axis-aligned rectangle in continuous pixel coordinates; area is
/// (u_max - u_min) * (v_max - v_min).
struct PixelBox {
  double u_min = 0.0;
  double v_min = 0.0;
  double u_max = 0.0;
  double v_max = 0.0;

  double width() const { return u_max - u_min; }
  double height() const { return v_max - v_min; }
  double area() const { return width() > 0.0 && height() > 0.0 ? width() * height() : 0.0; }
  Eigen::Vector2d center() const { return {0.5 * (u_min + u_max), 0.5 * (v_min + v_max)}; }

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

double intersection_area(const PixelBox& a, const PixelBox& b);

/// Intersection over union in [0, 1]; 0 when both boxes are empty.
double iou(const PixelBox& a, const PixelBox& b);

/// Clamps to [0, width] x [0, height]; nullopt when nothing of the box remains.
std::optional<PixelBox> clamp_to_image(const PixelBox& box, const CameraModel& cam);

/// Converts valid pixels to camera-frame points in row-major order. `stride`
/// keeps every stride-th pixel in both directions (1 = every pixel).
Cloud depth_to_cloud(const DepthFrame& frame, const CameraModel& cam, int stride = 1);

/// Pixel rectangle of a metric width x height extent centered on `center`
/// (camera frame), before clamping.
PixelBox metric_box_unclamped(const Eigen::Vector3d& center, double width_m, double height_m,
                              const CameraModel& cam);

/// Same as metric_box_unclamped, clamped to the image. Throws
/// Error(DegenerateProjection) for z below min_depth and Error(NothingVisible)
/// when the box misses the image entirely.
PixelBox project_metric_box(const Eigen::Vector3d& center, double width_m, double height_m,
                            const CameraModel& cam);

}  // namespace mobility

#endif  // MOBILITY_CAMERA_HPP
