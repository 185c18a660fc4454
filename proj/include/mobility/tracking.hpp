#ifndef MOBILITY_TRACKING_HPP
#define MOBILITY_TRACKING_HPP

#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mobility/class_belief.hpp"
#include "mobility/detection.hpp"

namespace mobility {

/// Constant-velocity state on the ground plane: (x, y, vx, vy).
struct KalmanState {
  Eigen::Vector4d mean = Eigen::Vector4d::Zero();
  Eigen::Matrix4d cov = Eigen::Matrix4d::Identity();

  GroundPoint position() const { return mean.head<2>(); }
  Eigen::Vector2d velocity() const { return mean.tail<2>(); }
};

struct NoiseConfig {
  double q = 0.5;  ///< white-acceleration spectral density, m^2/s^3
  Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * 0.04;  ///< observation noise, m^2

  void validate() const;
};

using ObservationMatrix = Eigen::Matrix<double, 2, 4>;

/// Selects the position components.
ObservationMatrix position_observation();

Eigen::Matrix4d constant_velocity_transition(double dt);

/// Discretized white-acceleration noise: per axis q [[dt^3/3, dt^2/2], [dt^2/2, dt]].
Eigen::Matrix4d white_acceleration_noise(double dt, double q);

/// x <- F x, P <- F P F^T + Q(dt). Requires dt > 0.
KalmanState predict(const KalmanState& state, double dt, double q);

/// Kalman correction with a position measurement (Joseph form). Throws
/// Error(Numeric) when the innovation covariance is not positive definite.
KalmanState update(const KalmanState& state, const GroundPoint& z, const Eigen::Matrix2d& r);

/// Squared Mahalanobis distance v^T S^-1 v, v = z - H x, S = H P H^T + R.
double mahalanobis(const KalmanState& state, const GroundPoint& z, const ObservationMatrix& h,
                   const Eigen::Matrix2d& r);
double mahalanobis(const KalmanState& state, const GroundPoint& z, const Eigen::Matrix2d& r);

/// Square root of the largest eigenvalue of the position covariance.
double position_sigma(const KalmanState& state);

struct AssociationResult {
  std::vector<std::pair<int, int>> pairs;  ///< (track index, observation index)
  std::vector<int> unmatched_tracks;
  std::vector<int> unmatched_observations;
};

/// Minimum total d^2 assignment over the pairwise Mahalanobis matrix; any
/// assigned pair above gate_d2 is dissolved into unmatched on both sides.
AssociationResult associate(const std::vector<KalmanState>& tracks, const std::vector<GroundPoint>& observations,
                            const Eigen::Matrix2d& r, double gate_d2);

struct TrackerConfig {
  NoiseConfig noise;
  double initial_position_var = 0.25;  ///< m^2
  double initial_velocity_var = 1.0;   ///< (m/s)^2
  double gate_d2 = 9.21;               ///< chi-square, 2 dof, 99 %
  double max_position_sigma = 1.0;     ///< m
  double max_background_probability = 0.9;
  HmmModel model = default_tracking_model();

  void validate() const;
};

struct Track {
  int id = 0;
  KalmanState state;
  Belief belief;
  int frames_since_observation = 0;
  int created_frame = 0;
  int age = 0;         ///< steps since creation
  bool in_fov = true;  ///< field-of-view status used in the latest step
  bool observed = false;  ///< matched in the latest step
};

using FovTest = std::function<bool(const GroundPoint&)>;

/// Multi-target tracker: one Kalman filter and one class HMM per person.
/// Single-owner mutable state; call step() from one thread at a time.
class Tracker {
public:
  explicit Tracker(TrackerConfig cfg = {});

  /// predict -> associate -> update matched -> HMM events for every track
  /// (observation, in-view miss, or out-of-view) -> spawn tracks for unmatched
  /// detections -> delete tracks that are too uncertain or likely clutter.
  void step(const std::vector<Detection>& detections, double dt, const FovTest& in_fov, int frame = 0);

  const std::vector<Track>& tracks() const { return tracks_; }
  /// Ids removed during the latest step.
  const std::vector<int>& last_deleted() const { return last_deleted_; }
  const TrackerConfig& config() const { return cfg_; }
  int next_id() const { return next_id_; }

private:
  Track spawn(const Detection& det, int frame);

  TrackerConfig cfg_;
  std::vector<Track> tracks_;
  std::vector<int> last_deleted_;
  int next_id_ = 1;
};

/// How long a converged, stationary track can coast before its position
/// sigma crosses the deletion threshold, in seconds.
double coast_survival_time(const TrackerConfig& cfg, double dt);

}  // namespace mobility

#endif  // MOBILITY_TRACKING_HPP
