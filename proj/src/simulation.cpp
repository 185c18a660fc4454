#include "mobility/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <random>

#include "mobility/error.hpp"

namespace mobility {

// --- actors -----------------------------------------------------------------

ClassId Actor::class_at(double t) const {
  ClassId c = cls;
  for (const auto& change : class_changes) {
    if (change.t <= t) c = change.cls;
  }
  return c;
}

GroundPoint Actor::position_at(double t) const {
  if (trajectory.empty()) return GroundPoint::Zero();
  if (t <= trajectory.front().t) return trajectory.front().position;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i - 1];
    const auto& b = trajectory[i];
    if (t <= b.t) {
      const double s = (t - a.t) / (b.t - a.t);
      return a.position + s * (b.position - a.position);
    }
  }
  return trajectory.back().position;
}

double Actor::heading_at(double t) const {
  if (heading) return *heading;
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i - 1];
    const auto& b = trajectory[i];
    const GroundPoint d = b.position - a.position;
    if (t <= b.t && d.norm() > 1e-9) return std::atan2(d.x(), d.y());
  }
  const GroundPoint p = position_at(t);
  return std::atan2(-p.x(), -p.y());
}

// --- scenario ---------------------------------------------------------------

void Scenario::validate() const {
  if (!(frame_rate > 0.0)) throw Error(ErrorCode::Configuration, "scenario: frame rate must be positive");
  if (!(duration >= 0.0)) throw Error(ErrorCode::Configuration, "scenario: negative duration");
  if (!(camera_height > 0.0)) throw Error(ErrorCode::Configuration, "scenario: camera height must be positive");
  if (noise_sigma_mm < 0.0) throw Error(ErrorCode::Configuration, "scenario: negative noise");
  for (const auto& a : actors) {
    if (!is_foreground(a.cls)) throw Error(ErrorCode::Configuration, "scenario: actor class must be a person class");
    for (const auto& c : a.class_changes)
      if (!is_foreground(c.cls)) throw Error(ErrorCode::Configuration, "scenario: actor class must be a person class");
    for (std::size_t i = 1; i < a.trajectory.size(); ++i)
      if (!(a.trajectory[i].t > a.trajectory[i - 1].t))
        throw Error(ErrorCode::Configuration, "scenario: trajectory timestamps must increase strictly");
    for (std::size_t i = 1; i < a.class_changes.size(); ++i)
      if (a.class_changes[i].t < a.class_changes[i - 1].t)
        throw Error(ErrorCode::Configuration, "scenario: class changes must be sorted by time");
  }
  for (std::size_t i = 0; i < actors.size(); ++i)
    for (std::size_t j = i + 1; j < actors.size(); ++j)
      if (actors[i].person_id == actors[j].person_id)
        throw Error(ErrorCode::Configuration, "scenario: duplicate person id");
  for (std::size_t i = 1; i < camera_path.size(); ++i)
    if (!(camera_path[i].t > camera_path[i - 1].t))
      throw Error(ErrorCode::Configuration, "scenario: camera path timestamps must increase strictly");
}

int Scenario::frame_count() const { return static_cast<int>(std::floor(duration * frame_rate + 1e-9)); }

Pose Scenario::camera_pose(double t) const {
  if (camera_path.empty()) return Pose::Identity();
  auto at = [](const CameraWaypoint& w) { return make_pose(w.x, w.z, w.yaw); };
  if (t <= camera_path.front().t) return at(camera_path.front());
  for (std::size_t i = 1; i < camera_path.size(); ++i) {
    const auto& a = camera_path[i - 1];
    const auto& b = camera_path[i];
    if (t <= b.t) {
      const double s = (t - a.t) / (b.t - a.t);
      return make_pose(a.x + s * (b.x - a.x), a.z + s * (b.z - a.z), a.yaw + s * (b.yaw - a.yaw));
    }
  }
  return at(camera_path.back());
}

// --- body shapes ------------------------------------------------------------

namespace {

/// Solid in the actor's local frame: `lateral` to the right, `forward` along
/// the facing direction, heights above the floor.
struct Part {
  enum class Kind { EllipticCylinder, Box } kind;
  double lateral = 0.0;
  double forward = 0.0;
  double half_lateral = 0.0;
  double half_forward = 0.0;
  double bottom = 0.0;
  double top = 0.0;
};

Part ellipse(double lat, double fwd, double a, double b, double bottom, double top) {
  return {Part::Kind::EllipticCylinder, lat, fwd, a, b, bottom, top};
}
Part box(double lat, double fwd, double a, double b, double bottom, double top) {
  return {Part::Kind::Box, lat, fwd, a, b, bottom, top};
}

// Bodies follow the template sizes: 0.4 x 1.75 m standing, about 0.65 m wide
// with crutches, a walker or a wheelchair, 1.31 m tall when seated. Parts of
// one body touch or nearly touch so the visible surface stays connected.
void add_wheelchair(std::vector<Part>& parts, double fwd) {
  constexpr double kSeated = 1.3125;
  parts.push_back(ellipse(0, fwd, 0.19, 0.13, 0.55, kSeated));          // upper body
  parts.push_back(box(0, fwd + 0.115, 0.17, 0.135, 0.0, 0.6));         // lap and legs
  parts.push_back(box(-0.27, fwd - 0.025, 0.03, 0.275, 0.0, 0.65));    // wheels
  parts.push_back(box(0.27, fwd - 0.025, 0.03, 0.275, 0.0, 0.65));
  parts.push_back(box(0, fwd - 0.17, 0.24, 0.02, 0.45, 0.95));         // backrest
}

std::vector<Part> body_parts(ClassId cls) {
  constexpr double kTorsoA = 0.2, kTorsoB = 0.15, kHeight = 1.75;
  std::vector<Part> parts;
  switch (cls) {
    case ClassId::Pedestrian:
      parts.push_back(ellipse(0, 0, kTorsoA, kTorsoB, 0, kHeight));
      break;
    case ClassId::Crutches:
      parts.push_back(ellipse(0, 0, kTorsoA, kTorsoB, 0, kHeight));
      parts.push_back(box(-0.3, 0.08, 0.02, 0.02, 0, 1.25));
      parts.push_back(box(0.3, 0.08, 0.02, 0.02, 0, 1.25));
      break;
    case ClassId::Walker:
      // Footprint centered on the actor position.
      parts.push_back(ellipse(0, -0.1, kTorsoA, kTorsoB, 0, kHeight));
      parts.push_back(box(-0.3, 0.05, 0.025, 0.2, 0, 0.9));   // side frames
      parts.push_back(box(0.3, 0.05, 0.025, 0.2, 0, 0.9));
      parts.push_back(box(0, 0.235, 0.325, 0.015, 0.75, 0.9));  // front bar
      break;
    case ClassId::Wheelchair:
      add_wheelchair(parts, 0.0);
      break;
    case ClassId::PushWheelchair:
      add_wheelchair(parts, 0.25);
      parts.push_back(ellipse(0, -0.27, 0.22, kTorsoB, 0, kHeight));  // helper
      parts.push_back(box(-0.2, 0.0, 0.04, 0.15, 0.9, 1.0));          // arms
      parts.push_back(box(0.2, 0.0, 0.04, 0.15, 0.9, 1.0));
      break;
    case ClassId::Background:
      break;
  }
  return parts;
}

struct Ray {
  Eigen::Vector3d origin;
  Eigen::Vector3d dir;  // camera-frame z component is 1, so t is the depth
};

/// Part placed in the world: center on the ground plane and local axes.
struct PlacedPart {
  Part part;
  Eigen::Vector2d center;   // world (x, z)
  Eigen::Vector2d right;    // world (x, z) of local lateral axis
  Eigen::Vector2d forward;  // world (x, z) of local forward axis
};

PlacedPart place(const Part& part, const GroundPoint& pos, double heading) {
  const Eigen::Vector2d fwd(std::sin(heading), std::cos(heading));
  const Eigen::Vector2d right(std::cos(heading), -std::sin(heading));
  return {part, pos + part.lateral * right + part.forward * fwd, right, fwd};
}

/// Nearest positive hit distance, or +inf.
double intersect(const PlacedPart& pp, const Ray& ray, double camera_height) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const Part& p = pp.part;
  const Eigen::Vector2d o(ray.origin.x() - pp.center.x(), ray.origin.z() - pp.center.y());
  const Eigen::Vector2d d(ray.dir.x(), ray.dir.z());
  const double ol = o.dot(pp.right), of = o.dot(pp.forward);
  const double dl = d.dot(pp.right), df = d.dot(pp.forward);
  // Height above the floor along the ray; world y points down.
  const double h0 = camera_height - ray.origin.y();
  const double dh = -ray.dir.y();
  auto height_ok = [&](double t) {
    const double h = h0 + t * dh;
    return h >= p.bottom && h <= p.top;
  };

  if (p.kind == Part::Kind::Box) {
    double tmin = 0.0, tmax = kInf;
    const double orig[3] = {ol, of, h0};
    const double dir[3] = {dl, df, dh};
    const double lo[3] = {-p.half_lateral, -p.half_forward, p.bottom};
    const double hi[3] = {p.half_lateral, p.half_forward, p.top};
    for (int k = 0; k < 3; ++k) {
      if (std::abs(dir[k]) < 1e-12) {
        if (orig[k] < lo[k] || orig[k] > hi[k]) return kInf;
        continue;
      }
      double t1 = (lo[k] - orig[k]) / dir[k];
      double t2 = (hi[k] - orig[k]) / dir[k];
      if (t1 > t2) std::swap(t1, t2);
      tmin = std::max(tmin, t1);
      tmax = std::min(tmax, t2);
      if (tmin > tmax) return kInf;
    }
    return tmin > 0.0 ? tmin : kInf;
  }

  // Elliptic cylinder: scale to the unit circle.
  const double a = p.half_lateral, b = p.half_forward;
  const double ul = ol / a, uf = of / b, vl = dl / a, vf = df / b;
  const double qa = vl * vl + vf * vf;
  const double qb = 2.0 * (ul * vl + uf * vf);
  const double qc = ul * ul + uf * uf - 1.0;
  double best = kInf;
  if (qa > 1e-15) {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      const double t1 = (-qb - s) / (2.0 * qa);
      if (t1 > 0.0 && height_ok(t1)) best = t1;
    }
  }
  // Top cap.
  if (std::abs(dh) > 1e-12) {
    const double t = (p.top - h0) / dh;
    if (t > 0.0 && t < best) {
      const double l = ul + t * vl, f = uf + t * vf;
      if (l * l + f * f <= 1.0) best = t;
    }
  }
  return best;
}

/// Screen rectangle [u0, u1) x [v0, v1) that contains every projection of the
/// parts; the full image when some part reaches behind the camera.
struct ScreenRect {
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
  bool empty() const { return u0 >= u1 || v0 >= v1; }
};

ScreenRect screen_bounds(const std::vector<PlacedPart>& parts, const Pose& world_to_cam, double camera_height,
                         const CameraModel& cam) {
  double umin = std::numeric_limits<double>::infinity(), vmin = umin;
  double umax = -umin, vmax = -umin;
  bool behind = false, any_front = false;
  for (const auto& pp : parts) {
    for (int sl : {-1, 1})
      for (int sf : {-1, 1})
        for (double h : {pp.part.bottom, pp.part.top}) {
          const Eigen::Vector2d g =
              pp.center + sl * pp.part.half_lateral * pp.right + sf * pp.part.half_forward * pp.forward;
          const Eigen::Vector3d c = world_to_cam * Eigen::Vector3d(g.x(), camera_height - h, g.y());
          if (c.z() <= 0.05) {
            behind = true;
            continue;
          }
          any_front = true;
          const Eigen::Vector2d uv = cam.project(c);
          umin = std::min(umin, uv.x());
          umax = std::max(umax, uv.x());
          vmin = std::min(vmin, uv.y());
          vmax = std::max(vmax, uv.y());
        }
  }
  if (!any_front) return {};
  if (behind) return {0, 0, cam.width, cam.height};
  ScreenRect r;
  r.u0 = std::clamp(static_cast<int>(std::floor(umin)) - 1, 0, cam.width);
  r.u1 = std::clamp(static_cast<int>(std::ceil(umax)) + 2, 0, cam.width);
  r.v0 = std::clamp(static_cast<int>(std::floor(vmin)) - 1, 0, cam.height);
  r.v1 = std::clamp(static_cast<int>(std::ceil(vmax)) + 2, 0, cam.height);
  return r;
}

std::uint64_t frame_seed(std::uint64_t seed, int frame) {
  std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(frame + 1));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace

RenderedFrame render_frame(const Scenario& scenario, int frame, const CameraModel& cam) {
  scenario.validate();
  cam.validate();
  const double t = scenario.frame_time(frame);
  const Pose pose = scenario.camera_pose(t);
  const Pose world_to_cam = pose.inverse();
  const double hc = scenario.camera_height;
  const int w = cam.width, h = cam.height;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);

  RenderedFrame out;
  out.depth = DepthFrame(frame, t, w, h, pose);
  out.truth.frame_id = frame;
  out.truth.timestamp = t;

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> zbuf(n, kInf);
  std::vector<int> owner(n, -1);  // -1 floor/none, -2 obstacle, >= 0 actor index

  const Eigen::Matrix3d rot = pose.linear();
  auto ray_at = [&](int u, int v) {
    const Eigen::Vector3d dc((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
    return Ray{pose.translation(), rot * dc};
  };

  // Floor, the plane world y = camera height.
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const Ray r = ray_at(u, v);
      if (r.dir.y() <= 1e-12) continue;
      const double tf = (hc - r.origin.y()) / r.dir.y();
      if (tf > 0.0) zbuf[static_cast<std::size_t>(v) * w + u] = tf;
    }
  }

  auto raster = [&](const std::vector<PlacedPart>& parts, auto&& on_hit) {
    const ScreenRect rect = screen_bounds(parts, world_to_cam, hc, cam);
    if (rect.empty()) return;
    for (int v = rect.v0; v < rect.v1; ++v) {
      for (int u = rect.u0; u < rect.u1; ++u) {
        const Ray r = ray_at(u, v);
        double best = kInf;
        for (const auto& pp : parts) best = std::min(best, intersect(pp, r, hc));
        if (best < kInf) on_hit(u, v, best);
      }
    }
  };

  for (const auto& ob : scenario.obstacles) {
    const Part part = box(0, 0, 0.5 * ob.width, 0.5 * ob.depth, 0.0, ob.height);
    raster({place(part, ob.center, ob.yaw)}, [&](int u, int v, double z) {
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      if (z < zbuf[i]) {
        zbuf[i] = z;
        owner[i] = -2;
      }
    });
  }

  struct Extent {
    int umin = std::numeric_limits<int>::max(), vmin = std::numeric_limits<int>::max();
    int umax = -1, vmax = -1;
    std::size_t pixels = 0;
  };
  std::vector<Extent> extents(scenario.actors.size());
  for (std::size_t a = 0; a < scenario.actors.size(); ++a) {
    const Actor& actor = scenario.actors[a];
    const GroundPoint pos = actor.position_at(t);
    const double heading = actor.heading_at(t);
    std::vector<PlacedPart> parts;
    for (const Part& p : body_parts(actor.class_at(t))) parts.push_back(place(p, pos, heading));
    Extent& ext = extents[a];
    raster(parts, [&](int u, int v, double z) {
      if (!cam.depth_in_range(z)) return;
      ext.umin = std::min(ext.umin, u);
      ext.umax = std::max(ext.umax, u);
      ext.vmin = std::min(ext.vmin, v);
      ext.vmax = std::max(ext.vmax, v);
      ++ext.pixels;
      const std::size_t i = static_cast<std::size_t>(v) * w + u;
      if (z < zbuf[i]) {
        zbuf[i] = z;
        owner[i] = static_cast<int>(a);
      }
    });
  }

  std::vector<std::size_t> visible(scenario.actors.size(), 0);
  std::mt19937_64 rng(frame_seed(scenario.seed, frame));
  std::normal_distribution<double> noise(0.0, scenario.noise_sigma_mm > 0.0 ? scenario.noise_sigma_mm : 1.0);
  const bool noisy = scenario.noise_sigma_mm > 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double z = zbuf[i];
    if (!cam.depth_in_range(z)) continue;
    if (owner[i] >= 0) ++visible[static_cast<std::size_t>(owner[i])];
    double mm = z * 1000.0;
    if (noisy) mm += noise(rng);
    const double q = std::round(mm);
    if (q >= 1.0 && q <= 65535.0 && cam.depth_in_range(q * 0.001)) out.depth.depth[i] = static_cast<std::uint16_t>(q);
  }

  for (std::size_t a = 0; a < scenario.actors.size(); ++a) {
    const Extent& ext = extents[a];
    if (ext.pixels == 0) continue;
    const Actor& actor = scenario.actors[a];
    GroundTruthObject obj;
    obj.box = {double(ext.umin), double(ext.vmin), double(ext.umax + 1), double(ext.vmax + 1)};
    obj.cls = actor.class_at(t);
    obj.position = actor.position_at(t);
    obj.person_id = actor.person_id;
    obj.occluded = 2 * visible[a] < ext.pixels;
    out.truth.objects.push_back(obj);
  }
  return out;
}

// --- standard scenarios -----------------------------------------------------

namespace {

Actor make_actor(int id, ClassId cls, std::vector<Waypoint> path, std::optional<double> heading = std::nullopt) {
  Actor a;
  a.person_id = id;
  a.cls = cls;
  a.trajectory = std::move(path);
  a.heading = heading;
  return a;
}

constexpr double kFacingCamera = std::numbers::pi;

}  // namespace

std::vector<NamedScenario> standard_scenarios(double coast_survival_s) {
  std::vector<NamedScenario> out;

  {
    Scenario s;
    s.name = "single-walker";
    s.description = "One person with a walking frame crosses the view at about 3.5-4 m.";
    s.duration = 10.0;
    s.seed = 11;
    s.actors.push_back(make_actor(1, ClassId::Walker, {{0.0, {-1.5, 4.0}}, {10.0, {1.5, 3.5}}}));
    out.push_back({s, "one track for the whole sequence; final belief argmax is walker"});
  }
  {
    Scenario s;
    s.name = "five-class-lineup";
    s.description = "One standing person per class, 1.3 m apart at 4.5 m, facing the camera.";
    s.duration = 2.0;
    s.seed = 12;
    const ClassId order[] = {ClassId::Pedestrian, ClassId::Wheelchair, ClassId::PushWheelchair, ClassId::Crutches,
                             ClassId::Walker};
    for (int i = 0; i < 5; ++i) {
      const double x = -2.6 + 1.3 * i;
      s.actors.push_back(make_actor(i + 1, order[i], {{0.0, {x, 4.5}}}, kFacingCamera));
    }
    out.push_back({s, "five detections per frame, one per class; the pusher's upper body is a sixth segment; ~150 proposals"});
  }
  {
    Scenario s;
    s.name = "crossing-with-occlusion";
    s.description =
        "A person with crutches walks left to right at 5 m while a pedestrian sidesteps right to left at 2 m; "
        "their lines of sight cross at t = 5 s and the far person is hidden from the detector for more than "
        "10 frames.";
    s.duration = 10.0;
    s.seed = 13;
    s.actors.push_back(make_actor(1, ClassId::Crutches, {{0.0, {-2.0, 5.0}}, {10.0, {2.0, 5.0}}}, kFacingCamera));
    s.actors.push_back(make_actor(2, ClassId::Pedestrian, {{0.0, {0.6, 2.0}}, {10.0, {-0.6, 2.0}}}, kFacingCamera));
    out.push_back({s, "two tracks, no identity switch; the occluded track coasts through the occlusion and its "
                      "belief returns to crutches after reacquisition"});
  }
  {
    Scenario s;
    s.name = "class-transition";
    s.description = "One person changes mobility aid: crutches, then pedestrian (t = 4 s), then wheelchair (t = 8 s).";
    s.duration = 14.0;
    s.seed = 14;
    Actor a = make_actor(1, ClassId::Crutches, {{0.0, {-1.5, 3.5}}, {14.0, {1.5, 3.5}}}, kFacingCamera);
    a.class_changes = {{4.0, ClassId::Pedestrian}, {8.0, ClassId::Wheelchair}};
    s.actors.push_back(a);
    out.push_back({s, "one track; belief argmax follows crutches -> pedestrian -> wheelchair with a lag"});
  }
  {
    // The robot turns away from a standing person and back. The time spent
    // turned away is half of the coasting survival time of a converged track.
    Scenario s;
    s.name = "out-of-fov-reentry";
    const double away = 0.5 * coast_survival_s;
    const double turn = 0.25;
    const double yaw = 1.3;
    char away_text[32];
    std::snprintf(away_text, sizeof away_text, "%.1f", away);
    s.description = std::string("A pedestrian stands at 3.5 m; the robot turns away for about ") + away_text +
                    " s and back.";
    s.seed = 15;
    s.camera_path = {{0.0, 0, 0, 0}, {3.0, 0, 0, 0}, {3.0 + turn, 0, 0, yaw}, {3.0 + turn + away, 0, 0, yaw},
                     {3.0 + 2 * turn + away, 0, 0, 0}};
    s.duration = 3.0 + 2 * turn + away + 3.0;
    s.actors.push_back(make_actor(1, ClassId::Pedestrian, {{0.0, {0.0, 3.5}}}, kFacingCamera));
    out.push_back({s, "the track survives while out of view and keeps its id after re-entry"});
  }
  return out;
}

Scenario standard_scenario(const std::string& name, double coast_survival_s) {
  for (auto& ns : standard_scenarios(coast_survival_s)) {
    if (ns.scenario.name == name) return ns.scenario;
  }
  throw Error(ErrorCode::Configuration, "unknown scenario '" + name + "'");
}

Scenario guidance_scenario(ClassId cls, int variant) {
  if (!is_foreground(cls)) throw Error(ErrorCode::Configuration, "guidance scenario needs a person class");
  Scenario s;
  s.name = "guidance-" + std::string(class_name(cls)) + "-" + std::to_string(variant);
  s.description = "A person approaches the waiting robot and stops about 2.3 m in front of it.";
  s.seed = 100 + static_cast<std::uint64_t>(index_of(cls)) * 10 + static_cast<std::uint64_t>(variant);
  const double lane = 0.25 * ((variant % 3) - 1);
  const double speed = 0.7 + 0.1 * (variant % 2);
  const double start = 6.0, stop = 2.3;
  const double arrive = (start - stop) / speed;
  s.duration = arrive + 6.5;
  s.actors.push_back(make_actor(1, cls, {{0.0, {lane, start}}, {arrive, {lane, stop}}}, kFacingCamera));
  return s;
}

}  // namespace mobility
