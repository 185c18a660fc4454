#include "mobility/proposals.hpp"

#include <cmath>

#include "mobility/error.hpp"

namespace mobility {

TemplateSet TemplateSet::from_person(double w, double h) {
  TemplateSet set;
  set.templates = {Template{w, h}, Template{w * 5.0 / 3.0, h}, Template{w * 7.0 / 3.0, h},
                   Template{w, h * 0.75}, Template{w * 5.0 / 3.0, h * 0.75}};
  return set;
}

void TemplateSet::validate() const {
  for (const auto& t : templates) {
    if (!(t.width_m > 0.0 && t.height_m > 0.0))
      throw Error(ErrorCode::Configuration, "templates: sizes must be positive");
  }
  const auto& T = templates;
  if (!(T[1].width_m > T[0].width_m && T[2].width_m > T[1].width_m))
    throw Error(ErrorCode::Configuration, "templates: T1 < T2 < T3 in width required");
  if (!(T[3].height_m < T[0].height_m && T[4].height_m < T[1].height_m))
    throw Error(ErrorCode::Configuration, "templates: T4/T5 must be shorter than T1/T2");
}

void ProposalConfig::validate() const {
  if (slide_positions < 1 || slide_positions % 2 == 0)
    throw Error(ErrorCode::Configuration, "proposals: slide_positions must be odd and >= 1");
  if (!(stride_px >= 1.0)) throw Error(ErrorCode::Configuration, "proposals: stride_px must be >= 1");
  templates.validate();
  segmentation.validate();
}

std::vector<Proposal> segment_proposals(const Segment& segment, int segment_id, const CameraModel& cam,
                                        const ProposalConfig& cfg) {
  if (!(segment.centroid.z() >= cam.min_depth))
    throw Error(ErrorCode::DegenerateProjection, "segment_proposals: centroid closer than min_depth");

  const int half = (cfg.slide_positions - 1) / 2;
  std::vector<Proposal> out;
  out.reserve(cfg.templates.size() * static_cast<std::size_t>(cfg.slide_positions));
  for (std::size_t t = 0; t < cfg.templates.size(); ++t) {
    const PixelBox base =
        metric_box_unclamped(segment.centroid, cfg.templates[t].width_m, cfg.templates[t].height_m, cam);
    for (int k = -half; k <= half; ++k) {
      const double du = k * cfg.stride_px;
      const auto box = clamp_to_image({base.u_min + du, base.v_min, base.u_max + du, base.v_max}, cam);
      if (!box) continue;
      out.push_back({*box, segment_id, static_cast<int>(t), k});
    }
  }
  return out;
}

std::vector<PixelBox> dense_proposals(const CameraModel& cam, const TemplateSet& templates,
                                      const DenseProposalConfig& cfg) {
  if (cfg.scales.empty()) throw Error(ErrorCode::Configuration, "dense_proposals: no scales");
  if (!(cfg.stride_px > 0.0) || !(cfg.reference_depth > 0.0))
    throw Error(ErrorCode::Configuration, "dense_proposals: stride and reference depth must be positive");

  std::vector<PixelBox> boxes;
  for (double scale : cfg.scales) {
    for (std::size_t t = 0; t < templates.size(); ++t) {
      const double w = templates[t].width_m * cam.fx / cfg.reference_depth * scale;
      const double h = templates[t].height_m * cam.fy / cfg.reference_depth * scale;
      if (w > cam.width || h > cam.height) continue;
      const auto nx = static_cast<long>(std::floor((cam.width - w) / cfg.stride_px + 1.0));
      const auto ny = static_cast<long>(std::floor((cam.height - h) / cfg.stride_px + 1.0));
      for (long j = 0; j < ny; ++j) {
        for (long i = 0; i < nx; ++i) {
          const double u = static_cast<double>(i) * cfg.stride_px;
          const double v = static_cast<double>(j) * cfg.stride_px;
          boxes.push_back({u, v, u + w, v + h});
        }
      }
    }
  }
  return boxes;
}

FrameProposals frame_proposals(const DepthFrame& frame, const CameraModel& cam, const ProposalConfig& cfg) {
  const auto& seg = cfg.segmentation;
  FrameProposals out;
  Cloud cloud = depth_to_cloud(frame, cam, seg.cloud_stride);
  out.stats.cloud_points = cloud.size();
  if (cloud.empty()) return out;

  try {
    out.plane = fit_ground_plane(cloud, seg.ransac_iterations, seg.plane_inlier_dist, seg.ransac_seed,
                                 seg.min_inlier_ratio);
    out.stats.plane_found = true;
    out.cloud = remove_plane(cloud, out.plane, seg.plane_inlier_dist);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoPlaneFound && e.code() != ErrorCode::InsufficientData) throw;
    out.cloud = std::move(cloud);
  }
  out.stats.clustered_points = out.cloud.size();

  out.segments = euclidean_cluster(out.cloud, seg.link_dist, seg.min_cluster_size, seg.max_cluster_size);
  out.stats.segments = out.segments.size();
  for (std::size_t s = 0; s < out.segments.size(); ++s) {
    try {
      auto boxes = segment_proposals(out.segments[s], static_cast<int>(s), cam, cfg);
      out.proposals.insert(out.proposals.end(), boxes.begin(), boxes.end());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateProjection) throw;
      ++out.stats.skipped_segments;
    }
  }
  out.stats.proposals = out.proposals.size();
  return out;
}

}  // namespace mobility
