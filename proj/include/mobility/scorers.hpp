#ifndef MOBILITY_SCORERS_HPP
#define MOBILITY_SCORERS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <tuple>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "mobility/detection.hpp"
#include "mobility/ground_truth.hpp"

namespace mobility {

/// Rows: true category (five classes, then background). Columns: observed
/// category. Every row is a probability vector.
using ConfusionMatrix = Eigen::Matrix<double, 6, 6>;

/// Person rows keep `diagonal` on the true class and spread the rest evenly
/// over the other four classes; the background row is the identity.
ConfusionMatrix diagonal_confusion(double diagonal);

void validate_confusion(const ConfusionMatrix& m);

/// Replays scores from a lookup keyed by (frame id, box).
class MockScorer : public Scorer {
public:
  void add(int frame_id, const PixelBox& box, const ScoreVector& scores);
  /// Used for unknown boxes; without it an unknown box is a scorer error.
  void set_fallback(const ScoreVector& scores) { fallback_ = scores; }

  std::vector<ScoreVector> score(const DepthFrame& frame, std::span<const PixelBox> boxes) override;

private:
  using Key = std::tuple<int, double, double, double, double>;
  std::map<Key, ScoreVector> table_;
  std::optional<ScoreVector> fallback_;
};

/// Labels each ROI against ground truth the way training samples are labeled:
/// IoU > 0.6 with a person box takes that person's class, anything lower is
/// background. The label is then passed through a confusion matrix, either by
/// sampling (seeded per frame and box, so independent of call order) or by
/// returning the label's expected observation distribution.
class OracleScorer : public Scorer {
public:
  enum class Mode { Sample, Expected };

  struct Config {
    ConfusionMatrix confusion = diagonal_confusion(1.0);
    Mode mode = Mode::Sample;
    std::uint64_t seed = 0;
    double positive_iou = 0.6;
    double negative_iou = 0.4;
  };

  OracleScorer(const std::vector<GroundTruthFrame>& ground_truth, Config cfg);

  std::vector<ScoreVector> score(const DepthFrame& frame, std::span<const PixelBox> boxes) override;

  /// Training-style label of one box: the class of the best-overlapping person
  /// when IoU > positive_iou, background otherwise (including the ambiguous band).
  ClassId label(int frame_id, const PixelBox& box) const;

private:
  std::unordered_map<int, std::vector<GroundTruthObject>> truth_;
  Config cfg_;
};

}  // namespace mobility

#endif  // MOBILITY_SCORERS_HPP
