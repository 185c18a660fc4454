#ifndef MOBILITY_PROPOSALS_HPP
#define MOBILITY_PROPOSALS_HPP

#include <array>
#include <vector>

#include "mobility/camera.hpp"
#include "mobility/segmentation.hpp"

namespace mobility {

struct Template {
  double width_m = 0.0;
  double height_m = 0.0;
};

/// The five metric body templates. T1 is an average standing person; T2 and
/// T3 widen it by 1/3 and 2/3 to each side; T4 and T5 are T1 and T2 with a
/// quarter of the height removed.
struct TemplateSet {
  std::array<Template, 5> templates;

  static TemplateSet from_person(double person_width_m = 0.4, double person_height_m = 1.75);

  const Template& operator[](std::size_t i) const { return templates[i]; }
  std::size_t size() const { return templates.size(); }
  void validate() const;
};

struct ProposalConfig {
  int slide_positions = 5;  ///< l: horizontal positions per template, odd
  double stride_px = 20.0;  ///< n_s
  TemplateSet templates = TemplateSet::from_person();
  SegmentationConfig segmentation;

  void validate() const;
};

struct Proposal {
  PixelBox box;
  int segment = -1;      ///< index into the frame's segment list
  int template_id = 0;   ///< 0..4 for T1..T5
  int slide = 0;         ///< horizontal offset index, 0 is centered
};

/// 5*l boxes around the segment centroid: every template projected at the
/// centroid and shifted horizontally by {-(l-1)/2 .. (l-1)/2} * stride.
/// Boxes clamped fully out of the image are dropped. Throws
/// Error(DegenerateProjection) when the centroid is closer than min_depth.
std::vector<Proposal> segment_proposals(const Segment& segment, int segment_id, const CameraModel& cam,
                                        const ProposalConfig& cfg);

struct DenseProposalConfig {
  std::vector<double> scales = {0.6, 0.8, 1.0, 1.3, 1.7};
  double reference_depth = 4.0;  ///< meters; scale 1.0 is a template seen at this depth
  double stride_px = 16.0;
};

/// Dense multi-scale sliding window baseline. Order: scale, template, row, column.
std::vector<PixelBox> dense_proposals(const CameraModel& cam, const TemplateSet& templates,
                                      const DenseProposalConfig& cfg);

struct ProposalStats {
  std::size_t cloud_points = 0;
  std::size_t clustered_points = 0;
  bool plane_found = false;
  std::size_t segments = 0;
  std::size_t skipped_segments = 0;
  std::size_t proposals = 0;
};

struct FrameProposals {
  Cloud cloud;                    ///< cloud after ground removal; segment members index it
  std::vector<Segment> segments;
  std::vector<Proposal> proposals;
  PlaneModel plane;
  ProposalStats stats;
};

/// depth_to_cloud -> fit_ground_plane -> remove_plane -> euclidean_cluster ->
/// segment_proposals. Without a ground plane the cloud is clustered as is.
FrameProposals frame_proposals(const DepthFrame& frame, const CameraModel& cam, const ProposalConfig& cfg);

}  // namespace mobility

#endif  // MOBILITY_PROPOSALS_HPP
