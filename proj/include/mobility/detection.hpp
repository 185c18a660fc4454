#ifndef MOBILITY_DETECTION_HPP
#define MOBILITY_DETECTION_HPP

#include <span>
#include <vector>

#include <Eigen/Core>

#include "mobility/camera.hpp"
#include "mobility/classes.hpp"
#include "mobility/proposals.hpp"

namespace mobility {

struct Detection {
  int frame = 0;
  PixelBox box;
  ClassId cls = ClassId::Pedestrian;
  ScoreVector scores{};
  Eigen::Vector3d position_cam = Eigen::Vector3d::Zero();
  GroundPoint position_world = GroundPoint::Zero();

  /// Score of the voted class; NMS and AP rank by it.
  double score() const { return scores[index_of(cls)]; }
};

/// Per-ROI classifier. One call scores every box of a frame; the output has
/// one valid ScoreVector per input box. Not required to be thread-safe.
class Scorer {
public:
  virtual ~Scorer() = default;
  virtual std::vector<ScoreVector> score(const DepthFrame& frame, std::span<const PixelBox> boxes) = 0;
};

struct Vote {
  ClassId cls = ClassId::Background;
  ScoreVector mean_scores{};  ///< mean over the proposals that voted for cls
  std::size_t votes = 0;
};

/// Each proposal votes for its argmax category; the segment takes the most
/// frequent vote. Ties go to the higher mean winning-class score, then to the
/// lower class index. With `background_abstains`, background votes only win
/// when no proposal voted for a person class.
Vote vote_segment_class(std::span<const ScoreVector> proposal_scores, bool background_abstains = true);

/// Greedy class-agnostic suppression: keep the best remaining detection and
/// drop every other one overlapping it with IoU > iou_threshold. The result is
/// independent of input order and sorted by descending score.
std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold);

struct SegmentLocation {
  Eigen::Vector3d camera = Eigen::Vector3d::Zero();
  GroundPoint world = GroundPoint::Zero();
};

/// Median member depth, box center back-projected at that depth, then mapped
/// through the frame's camera pose onto the ground plane.
SegmentLocation locate_segment(const Segment& segment, const Cloud& cloud, const PixelBox& box,
                               const DepthFrame& frame, const CameraModel& cam);

struct DetectionConfig {
  ProposalConfig proposals;
  double nms_iou = 0.3;
  bool background_abstains = true;

  void validate() const;
};

struct FrameDetections {
  std::vector<Detection> detections;
  ProposalStats proposal_stats;
  std::size_t background_segments = 0;
  double proposal_ms = 0.0;
  double scoring_ms = 0.0;
};

/// frame_proposals -> scorer -> per-segment vote -> drop background ->
/// locate -> NMS. A scorer failure surfaces as Error(Scorer).
FrameDetections detect_frame(const DepthFrame& frame, const CameraModel& cam, const DetectionConfig& cfg,
                             Scorer& scorer);

}  // namespace mobility

#endif  // MOBILITY_DETECTION_HPP
