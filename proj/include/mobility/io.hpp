#ifndef MOBILITY_IO_HPP
#define MOBILITY_IO_HPP

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "mobility/camera.hpp"
#include "mobility/class_belief.hpp"
#include "mobility/detection.hpp"
#include "mobility/evaluation.hpp"
#include "mobility/ground_truth.hpp"
#include "mobility/proposals.hpp"
#include "mobility/simulation.hpp"

namespace mobility {

// Frame files
//
// A frame directory holds camera.json and, per frame, frame_NNNNNN.pgm plus
// frame_NNNNNN.json. The image is a binary PGM (P5) with maxval 65535, so
// every pixel is a big-endian uint16 depth in millimeters, 0 = invalid. The
// sidecar is {"frame", "timestamp", "camera", "pose": {"rotation",
// "translation"}} with a row-major 3x3 camera-to-world rotation and the
// camera position in world coordinates; "camera" names the intrinsics file
// relative to the sidecar.

nlohmann::ordered_json camera_to_json(const CameraModel& cam);
CameraModel camera_from_json(const nlohmann::ordered_json& j);
void write_camera(const std::filesystem::path& file, const CameraModel& cam);
CameraModel read_camera(const std::filesystem::path& file);

void write_pgm16(const std::filesystem::path& file, int width, int height, const std::vector<std::uint16_t>& pixels);
/// Throws Error(Io) for anything but a 16-bit binary PGM.
std::vector<std::uint16_t> read_pgm16(const std::filesystem::path& file, int& width, int& height);

std::string frame_stem(int frame_id);
/// Writes <dir>/frame_NNNNNN.pgm and its sidecar.
void write_depth_frame(const std::filesystem::path& dir, const DepthFrame& frame,
                       const std::string& camera_ref = "camera.json");
/// Reads a frame from its .pgm or .json path.
DepthFrame read_depth_frame(const std::filesystem::path& file);
/// Sidecar paths of a frame directory in frame order.
std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir);

nlohmann::ordered_json pose_to_json(const Pose& pose);
Pose pose_from_json(const nlohmann::ordered_json& j);

// Scenario files
nlohmann::ordered_json scenario_to_json(const Scenario& scenario);
/// The seed is not part of the file; it is passed separately.
Scenario scenario_from_json(const nlohmann::ordered_json& j);

// JSON-lines logs. Boxes are [u_min, v_min, u_max, v_max]; classes are names.
nlohmann::ordered_json box_to_json(const PixelBox& box);
PixelBox box_from_json(const nlohmann::ordered_json& j);

nlohmann::ordered_json detection_to_json(const Detection& det);
Detection detection_from_json(const nlohmann::ordered_json& j);
void write_detections(std::ostream& os, const std::vector<Detection>& dets);
std::vector<Detection> read_detections(std::istream& is);

nlohmann::ordered_json track_to_json(const TrackRecord& rec);
TrackRecord track_from_json(const nlohmann::ordered_json& j);
void write_tracks(std::ostream& os, const std::vector<TrackRecord>& recs);
std::vector<TrackRecord> read_tracks(std::istream& is);

/// One line per object; a frame without objects is written as a line with
/// "frame" and "timestamp" only so that empty frames survive a round trip.
void write_ground_truth(std::ostream& os, const std::vector<GroundTruthFrame>& frames);
std::vector<GroundTruthFrame> read_ground_truth(std::istream& is);

void write_proposals(std::ostream& os, int frame_id, const std::vector<Proposal>& proposals);

/// {frame, box, scores[6]} records, the input of the replay scorer.
struct ScoredBox {
  int frame = 0;
  PixelBox box;
  ScoreVector scores{};
};
std::vector<ScoredBox> read_scored_boxes(std::istream& is);

/// {sequence, true, observed} records; true is a class name or "clutter",
/// observed a class name or "background".
void write_labeled_sequences(std::ostream& os, const std::vector<LabeledSequence>& seqs);
std::vector<LabeledSequence> read_labeled_sequences(std::istream& is);

/// Reads every non-empty line as JSON; errors carry the line number.
std::vector<nlohmann::ordered_json> read_json_lines(std::istream& is);
nlohmann::ordered_json read_json_file(const std::filesystem::path& file);

}  // namespace mobility

#endif  // MOBILITY_IO_HPP
