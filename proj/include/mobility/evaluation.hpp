#ifndef MOBILITY_EVALUATION_HPP
#define MOBILITY_EVALUATION_HPP

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mobility/class_belief.hpp"
#include "mobility/detection.hpp"
#include "mobility/ground_truth.hpp"

namespace mobility {

struct PrPoint {
  double score = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct ApResult {
  std::array<std::optional<double>, kNumForeground> ap{};  ///< nullopt: class absent from ground truth
  std::optional<double> map;                              ///< mean over defined classes
  std::array<std::size_t, kNumForeground> gt_count{};
  std::array<std::size_t, kNumForeground> true_positives{};
  std::array<std::vector<PrPoint>, kNumForeground> curves;
  double recall = 0.0;  ///< true positives over all ground truth objects
};

struct MatchOptions {
  double iou_threshold = 0.5;
  bool include_occluded = true;  ///< when false, occluded objects are "don't care"
};

/// Score-descending sweep per class. A detection is a true positive when it
/// claims the best-overlapping unclaimed same-class object with IoU at or
/// above the threshold; AP is the area under the all-points interpolated
/// precision/recall curve.
ApResult average_precision(const std::vector<Detection>& detections, const std::vector<GroundTruthFrame>& truth,
                           const MatchOptions& opts = {});

/// AP of one ranked list given the TP flags in rank order and the number of
/// positives (all-points interpolation).
double interpolated_ap(const std::vector<char>& true_positive_by_rank, std::size_t positives);

/// Rows: true class. Columns: predicted class, then "missed". Detections are
/// matched to objects by IoU (Hungarian, class ignored).
struct ConfusionCounts {
  Eigen::Matrix<double, 5, 6> counts = Eigen::Matrix<double, 5, 6>::Zero();
  std::size_t unmatched_detections = 0;

  Eigen::Matrix<double, 5, 6> row_normalized() const;
};

ConfusionCounts confusion_matrix(const std::vector<Detection>& detections, const std::vector<GroundTruthFrame>& truth,
                                 const MatchOptions& opts = {});

/// One row of the track log.
struct TrackRecord {
  int frame = 0;
  int track_id = 0;
  GroundPoint position = GroundPoint::Zero();
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();
  double sigma_pos = 0.0;
  std::array<double, kNumCategories> belief{};
  bool in_fov = true;
};

struct MotOptions {
  double match_dist = 0.5;  ///< meters on the ground plane
  bool ignore_out_of_fov = true;
  bool include_occluded = true;
};

struct MotResult {
  double motp = 0.0;  ///< mean ground distance over matches, meters
  double mota = 1.0;
  std::size_t gt_objects = 0;
  std::size_t matches = 0;
  std::size_t misses = 0;
  std::size_t false_positives = 0;
  std::size_t mismatches = 0;
};

/// CLEAR MOT: per frame keep last frame's correspondences that are still
/// within match_dist, Hungarian-match the rest, count an identity mismatch
/// whenever an object is matched to a different hypothesis than before.
MotResult clear_mot(const std::vector<TrackRecord>& tracks, const std::vector<GroundTruthFrame>& truth,
                    const MotOptions& opts = {});

struct MetricReport {
  std::optional<ApResult> detection;
  std::optional<ConfusionCounts> confusion;
  std::optional<MotResult> tracking;
};

void write_report_text(std::ostream& os, const MetricReport& report);
std::string report_json(const MetricReport& report);
/// Columns: class,score,precision,recall.
void write_pr_csv(std::ostream& os, const ApResult& ap);

}  // namespace mobility

#endif  // MOBILITY_EVALUATION_HPP
