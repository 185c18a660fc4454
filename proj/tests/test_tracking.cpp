#include <cmath>
#include <random>
#include <set>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "mobility/error.hpp"
#include "mobility/evaluation.hpp"
#include "mobility/tracking.hpp"

using namespace mobility;

namespace {

// Textbook filter written out with explicit inverses.
struct ReferenceKf {
  Eigen::Vector4d x;
  Eigen::Matrix4d p;

  void predict(double dt, double q) {
    Eigen::Matrix4d f;
    f << 1, 0, dt, 0,
         0, 1, 0, dt,
         0, 0, 1, 0,
         0, 0, 0, 1;
    const double a = q * dt * dt * dt / 3.0, b = q * dt * dt / 2.0, c = q * dt;
    Eigen::Matrix4d qm;
    qm << a, 0, b, 0,
          0, a, 0, b,
          b, 0, c, 0,
          0, b, 0, c;
    x = f * x;
    p = f * p * f.transpose() + qm;
  }
  void update(const Eigen::Vector2d& z, const Eigen::Matrix2d& r) {
    Eigen::Matrix<double, 2, 4> h;
    h << 1, 0, 0, 0,
         0, 1, 0, 0;
    const Eigen::Matrix2d s = h * p * h.transpose() + r;
    const Eigen::Matrix<double, 4, 2> k = p * h.transpose() * s.inverse();
    x = x + k * (z - h * x);
    p = (Eigen::Matrix4d::Identity() - k * h) * p;
  }
};

Detection det_at(double x, double y, ClassId cls = ClassId::Pedestrian) {
  Detection d;
  d.position_world = {x, y};
  d.cls = cls;
  d.scores.fill(0.0);
  d.scores[index_of(cls)] = 1.0;
  return d;
}

const FovTest kAlwaysVisible = [](const GroundPoint&) { return true; };
const FovTest kNeverVisible = [](const GroundPoint&) { return false; };

}  // namespace

TEST(Kalman, PredictAdvancesAtConstantVelocity) {
  KalmanState s;
  s.mean << 0, 0, 1, 0;
  const KalmanState p = predict(s, 1.0 / 15.0, 0.5);
  EXPECT_NEAR(p.mean(0), 1.0 / 15.0, 1e-15);
  EXPECT_DOUBLE_EQ(p.mean(1), 0.0);
  EXPECT_GT(p.cov.trace(), s.cov.trace());
  s.mean << 2, 3, 0, 0;
  EXPECT_EQ(predict(s, 0.1, 0.5).position(), GroundPoint(2, 3));
  EXPECT_THROW(predict(s, 0.0, 0.5), Error);
}

TEST(Kalman, ExactMeasurementLimit) {
  KalmanState s;
  s.mean << 1, 1, 0, 0;
  const KalmanState u = update(s, {4, -2}, Eigen::Matrix2d::Identity() * 1e-14);
  EXPECT_NEAR(u.mean(0), 4.0, 1e-9);
  EXPECT_NEAR(u.mean(1), -2.0, 1e-9);
}

TEST(Kalman, StationaryUpdatesShrinkPositionVariance) {
  KalmanState s;
  s.cov = Eigen::Matrix4d::Identity() * 2.0;
  double last = s.cov(0, 0);
  for (int i = 0; i < 50; ++i) {
    s = update(s, {0, 0}, Eigen::Matrix2d::Identity() * 0.04);
    EXPECT_LE(s.cov(0, 0), last + 1e-15);
    last = s.cov(0, 0);
  }
}

TEST(Kalman, MatchesTextbookFilterOver100Steps) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> noise(0.0, 0.2);
  const double dt = 1.0 / 15.0, q = 0.5;
  Eigen::Matrix2d r;
  r << 0.04, 0.01, 0.01, 0.05;
  KalmanState s;
  s.mean << 0.5, 2.0, 0.0, 0.0;
  s.cov = Eigen::Matrix4d::Identity();
  ReferenceKf ref{s.mean, s.cov};
  for (int t = 0; t < 100; ++t) {
    const Eigen::Vector2d truth(0.5 + 0.8 * t * dt, 2.0 - 0.3 * t * dt);
    const Eigen::Vector2d z = truth + Eigen::Vector2d(noise(rng), noise(rng));
    s = update(predict(s, dt, q), z, r);
    ref.predict(dt, q);
    ref.update(z, r);
    ASSERT_LT((s.mean - ref.x).cwiseAbs().maxCoeff(), 1e-9) << "step " << t;
    ASSERT_LT((s.cov - ref.p).cwiseAbs().maxCoeff(), 1e-9) << "step " << t;
  }
}

TEST(Kalman, CovarianceStaysSymmetricPsd) {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> dt(0.01, 0.5), z(-5, 5), q(0.01, 3.0), rv(0.001, 1.0);
  KalmanState s;
  for (int i = 0; i < 10000; ++i) {
    s = predict(s, dt(rng), q(rng));
    if (i % 3 != 0) s = update(s, {z(rng), z(rng)}, Eigen::Matrix2d::Identity() * rv(rng));
    ASSERT_LT((s.cov - s.cov.transpose()).cwiseAbs().maxCoeff(), 1e-12);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(s.cov);
    ASSERT_GE(es.eigenvalues().minCoeff(), -1e-12) << "cycle " << i;
  }
}

TEST(Mahalanobis, HandComputedCases) {
  KalmanState s;
  s.cov = Eigen::Matrix4d::Zero();
  s.mean << 1, 1, 0, 0;
  Eigen::Matrix2d r = Eigen::Vector2d(1, 4).asDiagonal();
  EXPECT_DOUBLE_EQ(mahalanobis(s, {2, 3}, r), 2.0);
  EXPECT_DOUBLE_EQ(mahalanobis(s, {1, 1}, r), 0.0);
  EXPECT_DOUBLE_EQ(mahalanobis(s, {4, 5}, Eigen::Matrix2d::Identity()), 25.0);
  EXPECT_THROW(mahalanobis(s, {0, 0}, Eigen::Matrix2d::Zero()), Error);
}

TEST(Associate, GateDissolvesPairs) {
  KalmanState a;
  a.cov = Eigen::Matrix4d::Zero();
  const Eigen::Matrix2d r = Eigen::Matrix2d::Identity();
  auto res = associate({a}, {{0.5, 0.0}}, r, 9.21);
  ASSERT_EQ(res.pairs.size(), 1u);

  const double eps = 1e-6;
  res = associate({a}, {{std::sqrt(9.21 + eps), 0.0}}, r, 9.21);
  EXPECT_TRUE(res.pairs.empty());
  EXPECT_EQ(res.unmatched_tracks, std::vector<int>{0});
  EXPECT_EQ(res.unmatched_observations, std::vector<int>{0});
}

TEST(Associate, PicksMinimumTotalCost) {
  KalmanState a, b;
  a.cov = b.cov = Eigen::Matrix4d::Zero();
  a.mean << 0, 0, 0, 0;
  b.mean << 1, 0, 0, 0;
  // Greedy would pair track a with the observation at 0.6.
  const auto res = associate({a, b}, {{0.6, 0.0}, {-0.5, 0.0}}, Eigen::Matrix2d::Identity(), 9.21);
  ASSERT_EQ(res.pairs.size(), 2u);
  EXPECT_EQ(res.pairs[0], std::make_pair(0, 1));
  EXPECT_EQ(res.pairs[1], std::make_pair(1, 0));
}

TEST(Tracker, BirthUsesConfiguredCovariance) {
  Tracker tr;
  tr.step({det_at(1.0, 3.0)}, 1.0 / 15.0, kAlwaysVisible, 0);
  ASSERT_EQ(tr.tracks().size(), 1u);
  const Track& t = tr.tracks()[0];
  EXPECT_EQ(t.id, 1);
  EXPECT_EQ(t.state.position(), GroundPoint(1.0, 3.0));
  EXPECT_EQ(t.state.velocity(), Eigen::Vector2d::Zero());
  EXPECT_DOUBLE_EQ(t.state.cov(0, 0), 0.25);
  EXPECT_DOUBLE_EQ(t.state.cov(2, 2), 1.0);
  EXPECT_LT(background_probability(t.belief), 0.9);
}

TEST(Tracker, DeletionStepFollowsClosedFormVariance) {
  // Without updates the position variance after time T is
  // p0 + v0 T^2 + q T^3 / 3.
  TrackerConfig cfg;
  const double dt = 1.0 / 15.0;
  auto var = [&](int n) {
    const double t = n * dt;
    return cfg.initial_position_var + cfg.initial_velocity_var * t * t + cfg.noise.q * t * t * t / 3.0;
  };
  int expected = 1;
  while (std::sqrt(var(expected)) <= cfg.max_position_sigma) ++expected;

  Tracker tr(cfg);
  tr.step({det_at(0.0, 3.0)}, dt, kNeverVisible, 0);
  for (int n = 1; n < expected; ++n) {
    tr.step({}, dt, kNeverVisible, n);
    ASSERT_EQ(tr.tracks().size(), 1u) << "deleted early at step " << n;
    EXPECT_NEAR(tr.tracks()[0].state.cov(0, 0), var(n), 1e-12);
  }
  tr.step({}, dt, kNeverVisible, expected);
  EXPECT_TRUE(tr.tracks().empty());
  EXPECT_EQ(tr.last_deleted(), std::vector<int>{1});
}

TEST(Tracker, InViewMissesDeleteTheTrack) {
  Tracker tr;
  tr.step({det_at(0.0, 3.0)}, 1.0 / 15.0, kAlwaysVisible, 0);
  int steps = 0;
  while (!tr.tracks().empty() && steps < 100) tr.step({}, 1.0 / 15.0, kAlwaysVisible, ++steps);
  EXPECT_TRUE(tr.tracks().empty());
  EXPECT_LE(steps, 20);
  EXPECT_GT(steps, 2);
}

TEST(Tracker, IdsAreNeverReused) {
  Tracker tr;
  std::set<int> seen;
  for (int f = 0; f < 200; ++f) {
    std::vector<Detection> dets;
    if (f % 20 < 5) dets.push_back(det_at(0.0, 3.0));
    tr.step(dets, 1.0 / 15.0, kAlwaysVisible, f);
    for (const auto& t : tr.tracks()) {
      if (t.age == 0) {
        EXPECT_TRUE(seen.insert(t.id).second);
      }
    }
  }
  EXPECT_GE(seen.size(), 10u);
}

TEST(Tracker, CrossingTargetsKeepIdentities) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.03);
  Tracker tr;
  std::vector<TrackRecord> records;
  std::vector<GroundTruthFrame> truth;
  const double dt = 1.0 / 15.0;
  for (int f = 0; f < 30; ++f) {
    const double t = f * dt;
    const GroundPoint a(-1.0 + 1.0 * t, 3.0), b(1.0 - 1.0 * t, 5.0);
    tr.step({det_at(a.x() + n(rng), a.y() + n(rng)), det_at(b.x() + n(rng), b.y() + n(rng))}, dt, kAlwaysVisible, f);
    GroundTruthFrame g;
    g.frame_id = f;
    g.objects.push_back({{}, ClassId::Pedestrian, a, 1, false});
    g.objects.push_back({{}, ClassId::Pedestrian, b, 2, false});
    truth.push_back(g);
    for (const auto& trk : tr.tracks()) {
      TrackRecord r;
      r.frame = f;
      r.track_id = trk.id;
      r.position = trk.state.position();
      records.push_back(r);
    }
  }
  const MotResult mot = clear_mot(records, truth);
  EXPECT_EQ(mot.mismatches, 0u);
  EXPECT_EQ(mot.misses, 0u);
  EXPECT_EQ(tr.next_id(), 3);
}

TEST(Tracker, StepIsDeterministic) {
  auto run = [] {
    Tracker tr;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int f = 0; f < 60; ++f) {
      std::vector<Detection> dets;
      for (int k = 0; k < 3; ++k) dets.push_back(det_at(u(rng), 3 + u(rng), class_at(rng() % 5)));
      tr.step(dets, 1.0 / 15.0, kAlwaysVisible, f);
    }
    return tr.tracks();
  };
  const auto a = run(), b = run();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].id, b[i].id);
    EXPECT_EQ(a[i].state.mean, b[i].state.mean);
    EXPECT_EQ(a[i].belief, b[i].belief);
  }
}

TEST(Tracker, CoastSurvivalOfDefaults) {
  const double s = coast_survival_time(TrackerConfig{}, 1.0 / 15.0);
  EXPECT_NEAR(s, 1.4, 1e-9);
}
