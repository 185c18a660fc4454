#ifndef MOBILITY_PIPELINE_HPP
#define MOBILITY_PIPELINE_HPP

#include <array>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobility/camera.hpp"
#include "mobility/detection.hpp"
#include "mobility/evaluation.hpp"
#include "mobility/scorers.hpp"
#include "mobility/tracking.hpp"

namespace mobility {

/// Wedge in front of the robot on the ground plane: range in (0, max_range],
/// bearing within +-half_angle of the heading.
struct Wedge {
  double max_range = 8.0;  ///< meters
  double half_angle = 0.0; ///< radians

  bool contains(const Pose& camera_pose, const GroundPoint& p) const;
};

/// Horizontal field of view of a camera, limited to its maximum depth.
Wedge camera_fov(const CameraModel& cam);

struct ScorerConfig {
  enum class Kind { Oracle, Replay };
  Kind kind = Kind::Oracle;
  OracleScorer::Mode mode = OracleScorer::Mode::Sample;
  ConfusionMatrix confusion = diagonal_confusion(1.0);
  double positive_iou = 0.6;
  std::string replay_file;  ///< {frame, box, scores} JSON lines for Kind::Replay
};

enum class GuidanceAction { Wait, Stairs, Elevator };
std::string_view action_name(GuidanceAction a);

struct GuidanceConfig {
  Wedge area{3.0, 20.0 * 3.14159265358979323846 / 180.0};
  double dwell_s = 4.0;
  double confidence = 0.9;
  /// Optional speed per perceived class; no defaults.
  std::array<std::optional<double>, kNumForeground> speed_table{};
};

struct GuidanceDecision {
  GuidanceAction action = GuidanceAction::Wait;
  std::optional<ClassId> cls;  ///< triggering class
  int track_id = 0;
  double dwell_s = 0.0;
  std::optional<double> speed;  ///< from the speed table, when configured

  friend bool operator==(const GuidanceDecision&, const GuidanceDecision&) = default;
};

/// Per-track samples of area membership and class belief.
struct TrackSample {
  double t = 0.0;
  bool in_area = false;
  std::array<double, kNumCategories> belief{};
};
using TrackHistory = std::map<int, std::vector<TrackSample>>;

/// Wait unless a track present at `now` has been inside the area without
/// interruption for at least dwell_s and its best class belief is at least
/// `confidence`; then stairs for a pedestrian and the elevator for every
/// mobility aid. Among several qualifying tracks the longest dwell wins,
/// then the lower track id.
GuidanceDecision guidance_decision(const TrackHistory& history, double now, const GuidanceConfig& cfg);

struct PipelineConfig {
  CameraModel camera;
  DetectionConfig detection;
  TrackerConfig tracker;
  ScorerConfig scorer;
  Wedge fov = camera_fov(CameraModel{});
  GuidanceConfig guidance;
  double frame_rate = 15.0;  ///< used for the first frame's time step
  bool pipelined = true;     ///< overlap detection of frame t+1 with tracking of frame t
  double max_skipped_fraction = 0.1;

  void validate() const;
};

/// Reads a declarative config. Unknown keys are rejected; seeds are not part
/// of the file.
PipelineConfig config_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json config_to_json(const PipelineConfig& cfg);

/// Applies "a.b.c=value" overrides to a config document; the value is parsed
/// as JSON, falling back to a string.
void apply_override(nlohmann::ordered_json& doc, const std::string& assignment);

/// Source of time-ordered frames; streaming and offline runs share run().
class FrameSource {
public:
  virtual ~FrameSource() = default;
  virtual std::optional<DepthFrame> next() = 0;
};

class VectorFrameSource : public FrameSource {
public:
  explicit VectorFrameSource(const std::vector<DepthFrame>& frames) : frames_(frames) {}
  std::optional<DepthFrame> next() override;

private:
  const std::vector<DepthFrame>& frames_;
  std::size_t pos_ = 0;
};

class DirectoryFrameSource : public FrameSource {
public:
  explicit DirectoryFrameSource(const std::string& dir);
  std::optional<DepthFrame> next() override;
  std::size_t size() const { return files_.size(); }

private:
  std::vector<std::string> files_;
  std::size_t pos_ = 0;
};

struct FrameStats {
  int frame = 0;
  double timestamp = 0.0;
  bool skipped = false;
  std::string error;
  ProposalStats proposals;
  std::size_t detections = 0;
  std::size_t tracks = 0;
  double proposal_ms = 0.0;
  double scoring_ms = 0.0;
  double detection_ms = 0.0;
  double tracking_ms = 0.0;
};

struct RunStats {
  std::vector<FrameStats> frames;
  std::size_t skipped = 0;
  double total_ms = 0.0;

  double median_proposal_ms() const;
  double mean_proposals() const;
};

struct RunResult {
  std::vector<Detection> detections;
  std::vector<TrackRecord> tracks;
  std::vector<GuidanceDecision> guidance;  ///< one per processed frame
  RunStats stats;
};

/// Per frame: detect_frame -> Tracker::step with field-of-view flags -> logs
/// -> guidance. A frame whose detection fails is logged and skipped; more
/// than max_skipped_fraction skipped frames fails the run with
/// Error(InsufficientData).
RunResult run(FrameSource& frames, const PipelineConfig& cfg, Scorer& scorer);
RunResult run(const std::vector<DepthFrame>& frames, const PipelineConfig& cfg, Scorer& scorer);

/// Frame metadata the tracker needs when replaying a detection log.
struct FrameMeta {
  int frame = 0;
  double timestamp = 0.0;
  Pose camera_pose = Pose::Identity();
};

/// Tracks a detection log. Without metadata every frame id between the first
/// and last detection is stepped at 1 / frame_rate with an identity pose.
std::vector<TrackRecord> track_detections(const std::vector<Detection>& detections,
                                          const std::vector<FrameMeta>& frames, const PipelineConfig& cfg);

/// Builds the configured scorer; the oracle needs ground truth.
std::unique_ptr<Scorer> make_scorer(const ScorerConfig& cfg, const std::vector<GroundTruthFrame>& truth,
                                    std::uint64_t seed);

/// Training sequences for estimate_model from a detection log: one sequence
/// per person (matched detection class or background per frame, matched by
/// IoU) and one single-step clutter sequence per unmatched detection.
std::vector<LabeledSequence> labeled_sequences(const std::vector<Detection>& detections,
                                               const std::vector<GroundTruthFrame>& truth,
                                               double iou_threshold = 0.5);

void write_stats(std::ostream& os, const RunStats& stats);

}  // namespace mobility

#endif  // MOBILITY_PIPELINE_HPP
