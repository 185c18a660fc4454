#include "mobility/camera.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mobility/error.hpp"

namespace mobility {

void CameraModel::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) throw Error(ErrorCode::Configuration, "camera: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorCode::Configuration, "camera: image size must be positive");
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height))
    throw Error(ErrorCode::Configuration, "camera: principal point outside the image");
  if (!(min_depth > 0.0 && min_depth < max_depth))
    throw Error(ErrorCode::Configuration, "camera: need 0 < min_depth < max_depth");
}

Pose make_pose(double x, double z, double yaw) {
  Pose pose = Pose::Identity();
  pose.linear() = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitY()).toRotationMatrix();
  pose.translation() = Eigen::Vector3d(x, 0.0, z);
  return pose;
}

double intersection_area(const PixelBox& a, const PixelBox& b) {
  const double w = std::min(a.u_max, b.u_max) - std::max(a.u_min, b.u_min);
  const double h = std::min(a.v_max, b.v_max) - std::max(a.v_min, b.v_min);
  return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

double iou(const PixelBox& a, const PixelBox& b) {
  const double inter = intersection_area(a, b);
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::optional<PixelBox> clamp_to_image(const PixelBox& box, const CameraModel& cam) {
  PixelBox c{std::clamp(box.u_min, 0.0, double(cam.width)), std::clamp(box.v_min, 0.0, double(cam.height)),
             std::clamp(box.u_max, 0.0, double(cam.width)), std::clamp(box.v_max, 0.0, double(cam.height))};
  if (!(c.u_min < c.u_max && c.v_min < c.v_max)) return std::nullopt;
  return c;
}

Cloud depth_to_cloud(const DepthFrame& frame, const CameraModel& cam, int stride) {
  if (frame.width != cam.width || frame.height != cam.height ||
      frame.depth.size() != static_cast<std::size_t>(frame.width) * frame.height) {
    throw Error(ErrorCode::Configuration,
                "depth_to_cloud: frame is " + std::to_string(frame.width) + "x" + std::to_string(frame.height) +
                    ", camera expects " + std::to_string(cam.width) + "x" + std::to_string(cam.height));
  }
  if (stride < 1) throw Error(ErrorCode::Configuration, "depth_to_cloud: stride must be >= 1");

  const auto min_mm = static_cast<std::uint32_t>(std::ceil(cam.min_depth * 1000.0));
  const auto max_mm = static_cast<std::uint32_t>(std::floor(cam.max_depth * 1000.0));
  const float inv_fx = static_cast<float>(1.0 / cam.fx);
  const float inv_fy = static_cast<float>(1.0 / cam.fy);
  const float cx = static_cast<float>(cam.cx);
  const float cy = static_cast<float>(cam.cy);

  Cloud cloud;
  cloud.reserve(frame.depth.size() / (static_cast<std::size_t>(stride) * stride) + 1);
  for (int v = 0; v < frame.height; v += stride) {
    const float ry = (static_cast<float>(v) - cy) * inv_fy;
    const std::uint16_t* row = frame.depth.data() + static_cast<std::size_t>(v) * frame.width;
    for (int u = 0; u < frame.width; u += stride) {
      const std::uint32_t d = row[u];
      if (d == 0 || d < min_mm || d > max_mm) continue;
      const float z = static_cast<float>(d) * 0.001f;
      cloud.emplace_back((static_cast<float>(u) - cx) * inv_fx * z, ry * z, z);
    }
  }
  return cloud;
}

PixelBox metric_box_unclamped(const Eigen::Vector3d& center, double width_m, double height_m,
                              const CameraModel& cam) {
  const Eigen::Vector2d c = cam.project(center);
  const double hw = 0.5 * width_m * cam.fx / center.z();
  const double hh = 0.5 * height_m * cam.fy / center.z();
  return {c.x() - hw, c.y() - hh, c.x() + hw, c.y() + hh};
}

PixelBox project_metric_box(const Eigen::Vector3d& center, double width_m, double height_m,
                            const CameraModel& cam) {
  if (!(center.z() >= cam.min_depth))
    throw Error(ErrorCode::DegenerateProjection, "project_metric_box: center closer than min_depth");
  const auto clamped = clamp_to_image(metric_box_unclamped(center, width_m, height_m, cam), cam);
  if (!clamped) throw Error(ErrorCode::NothingVisible, "project_metric_box: box outside the image");
  return *clamped;
}

}  // namespace mobility
