#include "mobility/tracking.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mobility/assignment.hpp"
#include "mobility/error.hpp"

namespace mobility {

void NoiseConfig::validate() const {
  if (!(q > 0.0)) throw Error(ErrorCode::Configuration, "noise: q must be positive");
  if (std::abs(r(0, 1) - r(1, 0)) > 1e-12 || r.llt().info() != Eigen::Success || !(r.determinant() > 0.0))
    throw Error(ErrorCode::Configuration, "noise: R must be symmetric positive definite");
}

ObservationMatrix position_observation() {
  ObservationMatrix h = ObservationMatrix::Zero();
  h(0, 0) = 1.0;
  h(1, 1) = 1.0;
  return h;
}

Eigen::Matrix4d constant_velocity_transition(double dt) {
  Eigen::Matrix4d f = Eigen::Matrix4d::Identity();
  f(0, 2) = dt;
  f(1, 3) = dt;
  return f;
}

Eigen::Matrix4d white_acceleration_noise(double dt, double q) {
  const double dt2 = dt * dt;
  Eigen::Matrix4d qm = Eigen::Matrix4d::Zero();
  for (int axis = 0; axis < 2; ++axis) {
    qm(axis, axis) = q * dt2 * dt / 3.0;
    qm(axis, axis + 2) = q * dt2 / 2.0;
    qm(axis + 2, axis) = q * dt2 / 2.0;
    qm(axis + 2, axis + 2) = q * dt;
  }
  return qm;
}

KalmanState predict(const KalmanState& state, double dt, double q) {
  if (!(dt > 0.0)) throw Error(ErrorCode::Configuration, "predict: dt must be positive");
  const Eigen::Matrix4d f = constant_velocity_transition(dt);
  KalmanState out;
  out.mean = f * state.mean;
  out.cov = f * state.cov * f.transpose() + white_acceleration_noise(dt, q);
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

KalmanState update(const KalmanState& state, const GroundPoint& z, const Eigen::Matrix2d& r) {
  const ObservationMatrix h = position_observation();
  const Eigen::Matrix2d s = h * state.cov * h.transpose() + r;
  const Eigen::LLT<Eigen::Matrix2d> llt(s);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::Numeric, "update: innovation covariance not invertible");

  const Eigen::Matrix<double, 4, 2> k = llt.solve(h * state.cov).transpose();
  const Eigen::Matrix4d ikh = Eigen::Matrix4d::Identity() - k * h;
  KalmanState out;
  out.mean = state.mean + k * (z - h * state.mean);
  out.cov = ikh * state.cov * ikh.transpose() + k * r * k.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose());
  return out;
}

double mahalanobis(const KalmanState& state, const GroundPoint& z, const ObservationMatrix& h,
                   const Eigen::Matrix2d& r) {
  const Eigen::Matrix2d s = h * state.cov * h.transpose() + r;
  const Eigen::LLT<Eigen::Matrix2d> llt(s);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::Numeric, "mahalanobis: singular innovation covariance");
  const Eigen::Vector2d v = z - h * state.mean;
  return std::max(0.0, v.dot(llt.solve(v)));
}

double mahalanobis(const KalmanState& state, const GroundPoint& z, const Eigen::Matrix2d& r) {
  return mahalanobis(state, z, position_observation(), r);
}

double position_sigma(const KalmanState& state) {
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(state.cov.topLeftCorner<2, 2>(), Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

AssociationResult associate(const std::vector<KalmanState>& tracks, const std::vector<GroundPoint>& observations,
                            const Eigen::Matrix2d& r, double gate_d2) {
  AssociationResult result;
  const auto nt = static_cast<Eigen::Index>(tracks.size());
  const auto no = static_cast<Eigen::Index>(observations.size());
  Eigen::MatrixXd cost(nt, no);
  for (Eigen::Index i = 0; i < nt; ++i)
    for (Eigen::Index j = 0; j < no; ++j) cost(i, j) = mahalanobis(tracks[i], observations[j], r);

  const Assignment assignment = solve_assignment(cost);
  std::vector<char> obs_used(static_cast<std::size_t>(no), 0);
  for (Eigen::Index i = 0; i < nt; ++i) {
    const int j = assignment.row_to_col[i];
    if (j >= 0 && cost(i, j) <= gate_d2) {
      result.pairs.emplace_back(static_cast<int>(i), j);
      obs_used[j] = 1;
    } else {
      result.unmatched_tracks.push_back(static_cast<int>(i));
    }
  }
  for (Eigen::Index j = 0; j < no; ++j)
    if (!obs_used[j]) result.unmatched_observations.push_back(static_cast<int>(j));
  return result;
}

void TrackerConfig::validate() const {
  noise.validate();
  if (!(initial_position_var > 0.0 && initial_velocity_var > 0.0))
    throw Error(ErrorCode::Configuration, "tracker: initial variances must be positive");
  if (!(gate_d2 > 0.0)) throw Error(ErrorCode::Configuration, "tracker: gate must be positive");
  if (!(max_position_sigma > 0.0)) throw Error(ErrorCode::Configuration, "tracker: max_position_sigma must be positive");
  model.validate();
  if (model.num_states() != static_cast<Eigen::Index>(kNumCategories) ||
      model.num_observations() != static_cast<Eigen::Index>(kNumCategories))
    throw Error(ErrorCode::Configuration, "tracker: class model must have 6 states and 6 observation symbols");
}

Tracker::Tracker(TrackerConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

Track Tracker::spawn(const Detection& det, int frame) {
  Track t;
  t.id = next_id_++;
  t.state.mean << det.position_world.x(), det.position_world.y(), 0.0, 0.0;
  t.state.cov = Eigen::Matrix4d::Zero();
  t.state.cov(0, 0) = t.state.cov(1, 1) = cfg_.initial_position_var;
  t.state.cov(2, 2) = t.state.cov(3, 3) = cfg_.initial_velocity_var;
  t.belief = initial_belief(static_cast<int>(index_of(det.cls)), cfg_.model);
  t.created_frame = frame;
  t.in_fov = true;
  t.observed = true;
  return t;
}

void Tracker::step(const std::vector<Detection>& detections, double dt, const FovTest& in_fov, int frame) {
  if (!(dt > 0.0)) throw Error(ErrorCode::Configuration, "tracker step: dt must be positive");
  last_deleted_.clear();

  std::vector<KalmanState> predicted;
  predicted.reserve(tracks_.size());
  for (auto& t : tracks_) {
    t.state = predict(t.state, dt, cfg_.noise.q);
    predicted.push_back(t.state);
  }

  std::vector<GroundPoint> observations;
  observations.reserve(detections.size());
  for (const auto& d : detections) observations.push_back(d.position_world);

  const AssociationResult assoc = associate(predicted, observations, cfg_.noise.r, cfg_.gate_d2);

  for (const auto& [ti, oi] : assoc.pairs) {
    Track& t = tracks_[static_cast<std::size_t>(ti)];
    const Detection& d = detections[static_cast<std::size_t>(oi)];
    t.state = update(t.state, d.position_world, cfg_.noise.r);
    t.belief = forward_update(t.belief, static_cast<int>(index_of(d.cls)), true, cfg_.model);
    t.frames_since_observation = 0;
    t.in_fov = true;
    t.observed = true;
    ++t.age;
  }
  for (int ti : assoc.unmatched_tracks) {
    Track& t = tracks_[static_cast<std::size_t>(ti)];
    t.in_fov = in_fov ? in_fov(t.state.position()) : true;
    t.belief = forward_update(t.belief, std::nullopt, t.in_fov, cfg_.model);
    ++t.frames_since_observation;
    t.observed = false;
    ++t.age;
  }

  std::vector<Track> next;
  next.reserve(tracks_.size() + assoc.unmatched_observations.size());
  for (auto& t : tracks_) {
    if (position_sigma(t.state) > cfg_.max_position_sigma ||
        background_probability(t.belief) > cfg_.max_background_probability) {
      last_deleted_.push_back(t.id);
      continue;
    }
    next.push_back(std::move(t));
  }
  for (int oi : assoc.unmatched_observations) next.push_back(spawn(detections[static_cast<std::size_t>(oi)], frame));
  tracks_ = std::move(next);
}

double coast_survival_time(const TrackerConfig& cfg, double dt) {
  KalmanState s;
  s.cov = Eigen::Matrix4d::Zero();
  s.cov(0, 0) = s.cov(1, 1) = cfg.initial_position_var;
  s.cov(2, 2) = s.cov(3, 3) = cfg.initial_velocity_var;
  for (int i = 0; i < 500; ++i) s = update(predict(s, dt, cfg.noise.q), s.position(), cfg.noise.r);
  int steps = 0;
  while (position_sigma(s) <= cfg.max_position_sigma && steps < 1000000) {
    s = predict(s, dt, cfg.noise.q);
    ++steps;
  }
  // The step that crosses the threshold deletes the track.
  return (steps - 1) * dt;
}

}  // namespace mobility
