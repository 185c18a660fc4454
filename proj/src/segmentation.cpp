#include "mobility/segmentation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>

#include "mobility/error.hpp"

namespace mobility {

void SegmentationConfig::validate() const {
  if (cloud_stride < 1) throw Error(ErrorCode::Configuration, "segmentation: cloud_stride must be >= 1");
  if (ransac_iterations < 1) throw Error(ErrorCode::Configuration, "segmentation: ransac_iterations must be >= 1");
  if (!(plane_inlier_dist > 0.0)) throw Error(ErrorCode::Configuration, "segmentation: plane_inlier_dist must be > 0");
  if (!(link_dist > 0.0)) throw Error(ErrorCode::Configuration, "segmentation: link_dist must be > 0");
  if (min_cluster_size > max_cluster_size)
    throw Error(ErrorCode::Configuration, "segmentation: min_cluster_size > max_cluster_size");
}

namespace {

std::size_t count_inliers(const Cloud& points, const Eigen::Vector3d& n, double d, double dist) {
  const float nx = static_cast<float>(n.x()), ny = static_cast<float>(n.y()), nz = static_cast<float>(n.z());
  const float df = static_cast<float>(d), tol = static_cast<float>(dist);
  std::size_t count = 0;
  for (const auto& p : points) {
    const float s = nx * p.x() + ny * p.y() + nz * p.z() + df;
    count += (std::abs(s) <= tol) ? 1u : 0u;
  }
  return count;
}

}  // namespace

PlaneModel fit_ground_plane(const Cloud& points, int iterations, double inlier_dist, std::uint64_t seed,
                            double min_inlier_ratio) {
  if (points.size() < 3) throw Error(ErrorCode::InsufficientData, "fit_ground_plane: need at least 3 points");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);

  PlaneModel best;
  bool found = false;
  for (int it = 0; it < iterations; ++it) {
    const std::size_t i = pick(rng);
    std::size_t j = pick(rng);
    std::size_t k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const Eigen::Vector3d a = points[i].cast<double>();
    const Eigen::Vector3d b = points[j].cast<double>();
    const Eigen::Vector3d c = points[k].cast<double>();
    Eigen::Vector3d n = (b - a).cross(c - a);
    const double norm = n.norm();
    if (norm < 1e-9) continue;
    n /= norm;
    double d = -n.dot(a);
    if (d < 0.0) {
      n = -n;
      d = -d;
    }
    const std::size_t inliers = count_inliers(points, n, d, inlier_dist);
    if (!found || inliers > best.inlier_count) {
      best.normal = n;
      best.offset = d;
      best.inlier_count = inliers;
      found = true;
    }
  }

  if (!found || best.inlier_count < 3 ||
      static_cast<double>(best.inlier_count) < min_inlier_ratio * static_cast<double>(points.size())) {
    throw Error(ErrorCode::NoPlaneFound, "fit_ground_plane: best inlier ratio below threshold");
  }
  return best;
}

Cloud remove_plane(const Cloud& points, const PlaneModel& plane, double dist_m) {
  Cloud out;
  out.reserve(points.size());
  for (const auto& p : points) {
    if (std::abs(plane.signed_distance(p.cast<double>())) > dist_m) out.push_back(p);
  }
  return out;
}

namespace {

struct DisjointSet {
  std::vector<std::uint32_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0u); }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[a] = b;
  }
};

std::uint64_t cell_key(std::int64_t x, std::int64_t y, std::int64_t z) {
  constexpr std::int64_t kBias = 1 << 20;
  return (static_cast<std::uint64_t>(x + kBias) << 42) | (static_cast<std::uint64_t>(y + kBias) << 21) |
         static_cast<std::uint64_t>(z + kBias);
}

}  // namespace

std::vector<Segment> euclidean_cluster(const Cloud& points, double link_dist, std::size_t min_size,
                                       std::size_t max_size) {
  if (points.empty()) return {};

  // Cells are small enough that any two points sharing one are linked, so the
  // union-find runs over cells and only neighboring cells need point tests.
  const double side = link_dist / std::sqrt(3.0) * (1.0 - 1e-6);
  const double link2 = link_dist * link_dist;

  std::vector<std::array<std::int64_t, 3>> coords(points.size());
  std::unordered_map<std::uint64_t, std::uint32_t> cell_of_key;
  cell_of_key.reserve(points.size() / 4 + 16);
  std::vector<std::uint32_t> point_cell(points.size());
  std::vector<std::vector<std::uint32_t>> cell_points;
  std::vector<std::array<std::int64_t, 3>> cell_coord;

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const std::array<std::int64_t, 3> c = {static_cast<std::int64_t>(std::floor(p.x() / side)),
                                           static_cast<std::int64_t>(std::floor(p.y() / side)),
                                           static_cast<std::int64_t>(std::floor(p.z() / side))};
    const auto [it, inserted] =
        cell_of_key.try_emplace(cell_key(c[0], c[1], c[2]), static_cast<std::uint32_t>(cell_points.size()));
    if (inserted) {
      cell_points.emplace_back();
      cell_coord.push_back(c);
    }
    cell_points[it->second].push_back(static_cast<std::uint32_t>(i));
    point_cell[i] = it->second;
  }

  auto linked = [&](const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    for (std::uint32_t i : a) {
      const Eigen::Vector3d pi = points[i].cast<double>();
      for (std::uint32_t j : b) {
        if ((points[j].cast<double>() - pi).squaredNorm() <= link2) return true;
      }
    }
    return false;
  };

  // Forward half of the 5x5x5 neighborhood, nearest offsets first so most
  // far pairs are already merged by the time they are visited.
  std::vector<std::array<int, 3>> offsets;
  for (int dx = -2; dx <= 2; ++dx)
    for (int dy = -2; dy <= 2; ++dy)
      for (int dz = -2; dz <= 2; ++dz) {
        const std::array<int, 3> o = {dx, dy, dz};
        if (o > std::array<int, 3>{0, 0, 0}) offsets.push_back(o);
      }
  std::stable_sort(offsets.begin(), offsets.end(), [](const auto& a, const auto& b) {
    return a[0] * a[0] + a[1] * a[1] + a[2] * a[2] < b[0] * b[0] + b[1] * b[1] + b[2] * b[2];
  });

  DisjointSet cells(cell_points.size());
  for (const auto& o : offsets) {
    for (std::uint32_t c = 0; c < cell_points.size(); ++c) {
      const auto& cc = cell_coord[c];
      const auto it = cell_of_key.find(cell_key(cc[0] + o[0], cc[1] + o[1], cc[2] + o[2]));
      if (it == cell_of_key.end()) continue;
      if (cells.find(c) == cells.find(it->second)) continue;
      if (linked(cell_points[c], cell_points[it->second])) cells.unite(c, it->second);
    }
  }

  std::unordered_map<std::uint32_t, std::size_t> component_of_root;
  std::vector<Segment> components;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const std::uint32_t root = cells.find(point_cell[i]);
    const auto [it, inserted] = component_of_root.try_emplace(root, components.size());
    if (inserted) components.emplace_back();
    components[it->second].members.push_back(static_cast<std::uint32_t>(i));
  }

  std::vector<Segment> segments;
  for (auto& comp : components) {
    if (comp.size() < min_size || comp.size() > max_size) continue;
    Eigen::Vector3d sum = Eigen::Vector3d::Zero();
    for (std::uint32_t i : comp.members) sum += points[i].cast<double>();
    comp.centroid = sum / static_cast<double>(comp.size());
    segments.push_back(std::move(comp));
  }
  std::sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
    if (a.size() != b.size()) return a.size() > b.size();
    return a.members.front() < b.members.front();
  });
  return segments;
}

}  // namespace mobility
