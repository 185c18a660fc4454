#include "mobility/detection.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <string>
#include <tuple>

#include "mobility/error.hpp"

namespace mobility {

Vote vote_segment_class(std::span<const ScoreVector> proposal_scores, bool background_abstains) {
  Vote vote;
  if (proposal_scores.empty()) return vote;

  std::array<std::size_t, kNumCategories> counts{};
  std::array<double, kNumCategories> winning_sum{};
  for (const auto& s : proposal_scores) {
    const std::size_t c = argmax(s);
    ++counts[c];
    winning_sum[c] += s[c];
  }

  std::size_t candidates = kNumCategories;
  if (background_abstains) {
    bool any_foreground = false;
    for (std::size_t c = 0; c < kNumForeground; ++c) any_foreground |= counts[c] > 0;
    if (any_foreground) candidates = kNumForeground;
  }

  std::size_t best = kNumCategories;
  for (std::size_t c = 0; c < candidates; ++c) {
    if (counts[c] == 0) continue;
    if (best == kNumCategories || counts[c] > counts[best]) {
      best = c;
      continue;
    }
    if (counts[c] == counts[best] &&
        winning_sum[c] / static_cast<double>(counts[c]) > winning_sum[best] / static_cast<double>(counts[best])) {
      best = c;
    }
  }

  vote.cls = class_at(best);
  vote.votes = counts[best];
  for (const auto& s : proposal_scores) {
    if (argmax(s) != best) continue;
    for (std::size_t k = 0; k < kNumCategories; ++k) vote.mean_scores[k] += s[k];
  }
  for (double& v : vote.mean_scores) v /= static_cast<double>(vote.votes);
  return vote;
}

std::vector<Detection> nms(std::vector<Detection> detections, double iou_threshold) {
  auto key = [](const Detection& d) {
    return std::make_tuple(-d.score(), d.box.u_min, d.box.v_min, d.box.u_max, d.box.v_max, index_of(d.cls),
                           d.frame);
  };
  std::sort(detections.begin(), detections.end(),
            [&](const Detection& a, const Detection& b) { return key(a) < key(b); });

  std::vector<Detection> kept;
  std::vector<char> removed(detections.size(), 0);
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (removed[i]) continue;
    kept.push_back(detections[i]);
    for (std::size_t j = i + 1; j < detections.size(); ++j) {
      if (!removed[j] && iou(detections[i].box, detections[j].box) > iou_threshold) removed[j] = 1;
    }
  }
  return kept;
}

SegmentLocation locate_segment(const Segment& segment, const Cloud& cloud, const PixelBox& box,
                               const DepthFrame& frame, const CameraModel& cam) {
  if (segment.members.empty()) throw Error(ErrorCode::InsufficientData, "locate_segment: empty segment");
  std::vector<float> depths;
  depths.reserve(segment.size());
  for (std::uint32_t i : segment.members) depths.push_back(cloud.at(i).z());
  const std::size_t mid = depths.size() / 2;
  std::nth_element(depths.begin(), depths.begin() + static_cast<std::ptrdiff_t>(mid), depths.end());
  double z = depths[mid];
  if (depths.size() % 2 == 0) {
    const float lower = *std::max_element(depths.begin(), depths.begin() + static_cast<std::ptrdiff_t>(mid));
    z = 0.5 * (static_cast<double>(lower) + z);
  }

  SegmentLocation loc;
  const Eigen::Vector2d c = box.center();
  loc.camera = cam.back_project(c.x(), c.y(), z);
  loc.world = to_ground(frame.camera_pose * loc.camera);
  return loc;
}

void DetectionConfig::validate() const {
  proposals.validate();
  if (!(nms_iou >= 0.0 && nms_iou <= 1.0)) throw Error(ErrorCode::Configuration, "detection: nms_iou outside [0,1]");
}

FrameDetections detect_frame(const DepthFrame& frame, const CameraModel& cam, const DetectionConfig& cfg,
                             Scorer& scorer) {
  using clock = std::chrono::steady_clock;
  FrameDetections out;

  const auto t0 = clock::now();
  const FrameProposals fp = frame_proposals(frame, cam, cfg.proposals);
  out.proposal_stats = fp.stats;
  const auto t1 = clock::now();
  out.proposal_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  if (fp.proposals.empty()) return out;

  std::vector<PixelBox> boxes;
  boxes.reserve(fp.proposals.size());
  for (const auto& p : fp.proposals) boxes.push_back(p.box);

  std::vector<ScoreVector> scores;
  try {
    scores = scorer.score(frame, boxes);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Scorer) throw;
    throw Error(ErrorCode::Scorer, std::string("scorer failed: ") + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorCode::Scorer, std::string("scorer failed: ") + e.what());
  }
  out.scoring_ms = std::chrono::duration<double, std::milli>(clock::now() - t1).count();
  if (scores.size() != boxes.size())
    throw Error(ErrorCode::Scorer, "scorer returned " + std::to_string(scores.size()) + " vectors for " +
                                       std::to_string(boxes.size()) + " boxes");
  for (const auto& s : scores) {
    if (!is_valid_score_vector(s)) throw Error(ErrorCode::Scorer, "scorer returned an invalid score vector");
  }

  // Proposals arrive grouped by segment in ascending segment order.
  std::vector<Detection> candidates;
  std::size_t begin = 0;
  while (begin < fp.proposals.size()) {
    const int seg = fp.proposals[begin].segment;
    std::size_t end = begin;
    while (end < fp.proposals.size() && fp.proposals[end].segment == seg) ++end;

    const std::span<const ScoreVector> seg_scores(scores.data() + begin, end - begin);
    const Vote vote = vote_segment_class(seg_scores, cfg.background_abstains);
    if (!is_foreground(vote.cls)) {
      ++out.background_segments;
      begin = end;
      continue;
    }

    const std::size_t winner = index_of(vote.cls);
    std::size_t best = end;
    for (std::size_t i = begin; i < end; ++i) {
      if (argmax(scores[i]) != winner) continue;
      if (best == end || scores[i][winner] > scores[best][winner]) best = i;
    }

    Detection det;
    det.frame = frame.frame_id;
    det.box = fp.proposals[best].box;
    det.cls = vote.cls;
    det.scores = vote.mean_scores;
    const SegmentLocation loc =
        locate_segment(fp.segments[static_cast<std::size_t>(seg)], fp.cloud, det.box, frame, cam);
    det.position_cam = loc.camera;
    det.position_world = loc.world;
    if (cam.depth_in_range(det.position_cam.z())) candidates.push_back(det);
    begin = end;
  }

  out.detections = nms(std::move(candidates), cfg.nms_iou);
  return out;
}

}  // namespace mobility
