#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "mobility/camera.hpp"
#include "mobility/error.hpp"

using namespace mobility;

TEST(Camera, ValidateRejectsBadIntrinsics) {
  CameraModel cam;
  EXPECT_NO_THROW(cam.validate());
  cam.fx = 0.0;
  EXPECT_THROW(cam.validate(), Error);
  cam = CameraModel{};
  cam.min_depth = 9.0;
  EXPECT_THROW(cam.validate(), Error);
}

TEST(Camera, ProjectBackProjectRoundTrip) {
  CameraModel cam;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 960), v(0, 540), z(0.5, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const double uu = u(rng), vv = v(rng), zz = z(rng);
    const Eigen::Vector2d back = cam.project(cam.back_project(uu, vv, zz));
    EXPECT_NEAR(back.x(), uu, 1e-9);
    EXPECT_NEAR(back.y(), vv, 1e-9);
  }
}

TEST(Camera, IouUnitCases) {
  const PixelBox a{0, 0, 2, 2};
  EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
  EXPECT_DOUBLE_EQ(iou(a, {5, 5, 6, 6}), 0.0);
  EXPECT_DOUBLE_EQ(iou(a, {1, 1, 3, 3}), 1.0 / 7.0);
  EXPECT_DOUBLE_EQ(iou({0, 0, 0, 0}, {0, 0, 0, 0}), 0.0);
}

TEST(Camera, IouIsSymmetricAndBounded) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(0, 100), s(0.5, 40);
  for (int i = 0; i < 500; ++i) {
    const double x0 = c(rng), y0 = c(rng), x1 = c(rng), y1 = c(rng);
    const PixelBox a{x0, y0, x0 + s(rng), y0 + s(rng)};
    const PixelBox b{x1, y1, x1 + s(rng), y1 + s(rng)};
    const double r = iou(a, b);
    EXPECT_GE(r, 0.0);
    EXPECT_LE(r, 1.0);
    EXPECT_DOUBLE_EQ(r, iou(b, a));
  }
}

TEST(Camera, DepthToCloudDropsInvalidAndOutOfRange) {
  CameraModel cam;
  cam.width = 4;
  cam.height = 2;
  cam.cx = 2;
  cam.cy = 1;
  DepthFrame f(0, 0.0, 4, 2);
  f.at(0, 0) = 1000;   // valid
  f.at(1, 0) = 0;      // invalid
  f.at(2, 0) = 300;    // closer than min depth
  f.at(3, 1) = 9000;   // beyond max depth
  f.at(1, 1) = 2500;   // valid
  const Cloud c = depth_to_cloud(f, cam);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_FLOAT_EQ(c[0].z(), 1.0f);
  EXPECT_FLOAT_EQ(c[0].x(), static_cast<float>((0 - 2) * 1.0 / 540.0));
  EXPECT_FLOAT_EQ(c[1].z(), 2.5f);
}

TEST(Camera, DepthToCloudStrideAndMismatch) {
  CameraModel cam;
  DepthFrame f(0, 0.0, cam.width, cam.height);
  std::fill(f.depth.begin(), f.depth.end(), 2000);
  EXPECT_EQ(depth_to_cloud(f, cam).size(), 960u * 540u);
  EXPECT_EQ(depth_to_cloud(f, cam, 2).size(), 480u * 270u);
  DepthFrame bad(0, 0.0, 10, 10);
  try {
    depth_to_cloud(bad, cam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Configuration);
  }
}

TEST(Camera, MetricBoxProjection) {
  CameraModel cam;
  const PixelBox b = project_metric_box({0.0, 0.0, 3.0}, 0.4, 1.75, cam);
  EXPECT_NEAR(b.width(), 0.4 * 540 / 3.0, 1e-9);
  EXPECT_NEAR(b.height(), 1.75 * 540 / 3.0, 1e-9);
  EXPECT_NEAR(b.center().x(), 480.0, 1e-9);

  try {
    project_metric_box({0.0, 0.0, 0.3}, 0.4, 1.75, cam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateProjection);
  }
  try {
    project_metric_box({50.0, 0.0, 3.0}, 0.4, 1.75, cam);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NothingVisible);
  }
  const PixelBox edge = project_metric_box({-2.7, 0.0, 3.0}, 0.4, 1.75, cam);
  EXPECT_DOUBLE_EQ(edge.u_min, 0.0);
}

TEST(Camera, PoseConvention) {
  const Pose p = make_pose(1.0, 2.0, std::numbers::pi / 2);
  const Eigen::Vector3d forward = p * Eigen::Vector3d(0, 0, 1);
  EXPECT_NEAR(forward.x(), 2.0, 1e-12);
  EXPECT_NEAR(forward.z(), 2.0, 1e-12);
  EXPECT_NEAR(forward.y(), 0.0, 1e-12);
  const GroundPoint g = to_ground(Pose::Identity() * Eigen::Vector3d(0.5, 0.3, 4.0));
  EXPECT_DOUBLE_EQ(g.x(), 0.5);
  EXPECT_DOUBLE_EQ(g.y(), 4.0);
}
