#ifndef MOBILITY_SIMULATION_HPP
#define MOBILITY_SIMULATION_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mobility/camera.hpp"
#include "mobility/classes.hpp"
#include "mobility/ground_truth.hpp"

namespace mobility {

struct Waypoint {
  double t = 0.0;
  GroundPoint position = GroundPoint::Zero();
};

struct ClassChange {
  double t = 0.0;
  ClassId cls = ClassId::Pedestrian;
};

/// A person moving on the ground plane along a piecewise-linear path. Before
/// the first and after the last waypoint the actor stands still.
struct Actor {
  int person_id = 0;
  ClassId cls = ClassId::Pedestrian;
  std::vector<Waypoint> trajectory;
  std::vector<ClassChange> class_changes;  ///< sorted by time
  /// Fixed facing direction (radians, 0 = world +z). Without it the actor
  /// faces its direction of motion, or the camera origin while standing.
  std::optional<double> heading;

  ClassId class_at(double t) const;
  GroundPoint position_at(double t) const;
  double heading_at(double t) const;
};

/// Upright box standing on the floor.
struct Obstacle {
  GroundPoint center = GroundPoint::Zero();
  double yaw = 0.0;
  double width = 1.0;   ///< lateral, meters
  double depth = 1.0;   ///< along the facing direction
  double height = 1.0;
};

struct CameraWaypoint {
  double t = 0.0;
  double x = 0.0;
  double z = 0.0;
  double yaw = 0.0;
};

struct Scenario {
  std::string name;
  std::string description;
  std::vector<Actor> actors;
  std::vector<Obstacle> obstacles;
  std::vector<CameraWaypoint> camera_path;  ///< empty: camera fixed at the origin
  double duration = 10.0;    ///< seconds
  double frame_rate = 15.0;  ///< Hz
  double camera_height = 1.0;
  double noise_sigma_mm = 5.0;
  std::uint64_t seed = 0;

  void validate() const;
  int frame_count() const;
  double frame_time(int frame) const { return frame / frame_rate; }
  Pose camera_pose(double t) const;
};

struct RenderedFrame {
  DepthFrame depth;
  GroundTruthFrame truth;
};

/// Ray-cast z-buffer rendering of floor, obstacles and actors (primitive
/// bodies per class). Ground-truth boxes are the full pixel extent of each
/// actor, including occluded parts; an actor is flagged occluded when more
/// than half of its pixels are hidden. Bit-deterministic for a scenario.
RenderedFrame render_frame(const Scenario& scenario, int frame, const CameraModel& cam);

/// Named scenarios with documented expected outcomes.
struct NamedScenario {
  Scenario scenario;
  std::string expected;
};

/// single-walker, five-class-lineup, crossing-with-occlusion,
/// class-transition, out-of-fov-reentry.
std::vector<NamedScenario> standard_scenarios(double coast_survival_s = 1.4);

/// The scenario with the given name from standard_scenarios; throws
/// Error(Configuration) for an unknown name.
Scenario standard_scenario(const std::string& name, double coast_survival_s = 1.4);

/// One person of `cls` walks up to the robot and waits in front of it.
/// `variant` shifts the approach lane and walking speed.
Scenario guidance_scenario(ClassId cls, int variant);

}  // namespace mobility

#endif  // MOBILITY_SIMULATION_HPP
