#include "mobility/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "mobility/assignment.hpp"
#include "mobility/error.hpp"
#include "mobility/io.hpp"

namespace mobility {

using Json = nlohmann::ordered_json;

// --- geometry of areas ------------------------------------------------------

bool Wedge::contains(const Pose& camera_pose, const GroundPoint& p) const {
  const Eigen::Vector3d c = camera_pose.inverse() * Eigen::Vector3d(p.x(), 0.0, p.y());
  const double range = std::hypot(c.x(), c.z());
  if (!(range > 0.0) || range > max_range || c.z() <= 0.0) return false;
  return std::abs(std::atan2(c.x(), c.z())) <= half_angle;
}

Wedge camera_fov(const CameraModel& cam) {
  const double half_width = std::max(cam.cx, cam.width - cam.cx);
  return {cam.max_depth, std::atan(half_width / cam.fx)};
}

// --- guidance ---------------------------------------------------------------

std::string_view action_name(GuidanceAction a) {
  switch (a) {
    case GuidanceAction::Wait: return "wait";
    case GuidanceAction::Stairs: return "stairs";
    case GuidanceAction::Elevator: return "elevator";
  }
  return "wait";
}

GuidanceDecision guidance_decision(const TrackHistory& history, double now, const GuidanceConfig& cfg) {
  constexpr double kTimeTol = 1e-9;
  GuidanceDecision best;
  for (const auto& [id, samples] : history) {
    if (samples.empty()) continue;
    const TrackSample& last = samples.back();
    if (std::abs(last.t - now) > kTimeTol || !last.in_area) continue;
    std::size_t start = samples.size() - 1;
    while (start > 0 && samples[start - 1].in_area) --start;
    const double dwell = now - samples[start].t;
    if (dwell + kTimeTol < cfg.dwell_s) continue;
    std::size_t cls = 0;
    for (std::size_t c = 1; c < kNumForeground; ++c)
      if (last.belief[c] > last.belief[cls]) cls = c;
    if (last.belief[cls] < cfg.confidence) continue;
    if (best.action != GuidanceAction::Wait && dwell <= best.dwell_s) continue;
    best.action = class_at(cls) == ClassId::Pedestrian ? GuidanceAction::Stairs : GuidanceAction::Elevator;
    best.cls = class_at(cls);
    best.track_id = id;
    best.dwell_s = dwell;
    best.speed = cfg.speed_table[cls];
  }
  return best;
}

// --- configuration ----------------------------------------------------------

void PipelineConfig::validate() const {
  camera.validate();
  detection.validate();
  tracker.validate();
  validate_confusion(scorer.confusion);
  if (!(scorer.positive_iou > 0.0 && scorer.positive_iou <= 1.0))
    throw Error(ErrorCode::Configuration, "scorer: positive_iou must lie in (0, 1]");
  if (scorer.kind == ScorerConfig::Kind::Replay && scorer.replay_file.empty())
    throw Error(ErrorCode::Configuration, "scorer: replay needs a file");
  if (!(fov.max_range > 0.0) || !(fov.half_angle > 0.0) || fov.half_angle >= std::numbers::pi / 2)
    throw Error(ErrorCode::Configuration, "fov: range must be positive and half angle in (0, 90) degrees");
  if (!(guidance.area.max_range > 0.0) || !(guidance.area.half_angle > 0.0))
    throw Error(ErrorCode::Configuration, "guidance: area must be non-empty");
  if (!(guidance.dwell_s >= 0.0) || !(guidance.confidence > 0.0 && guidance.confidence <= 1.0))
    throw Error(ErrorCode::Configuration, "guidance: dwell must be >= 0 and confidence in (0, 1]");
  if (!(frame_rate > 0.0)) throw Error(ErrorCode::Configuration, "frame_rate must be positive");
  if (!(max_skipped_fraction >= 0.0 && max_skipped_fraction <= 1.0))
    throw Error(ErrorCode::Configuration, "max_skipped_fraction must lie in [0, 1]");
}

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void check_keys(const Json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw Error(ErrorCode::Configuration, std::string(section) + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw Error(ErrorCode::Configuration, std::string(section) + ": unknown key '" + key + "'");
  }
}

template <typename T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Configuration, std::string(key) + ": " + e.what());
  }
}

Eigen::MatrixXd matrix_from_json(const Json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    throw Error(ErrorCode::Configuration, std::string(what) + ": expected a list of rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (j[r].size() != j[0].size()) throw Error(ErrorCode::Configuration, std::string(what) + ": ragged rows");
    for (std::size_t c = 0; c < j[r].size(); ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

ConfusionMatrix confusion_from_json(const Json& sc) {
  if (sc.contains("confusion")) {
    const Eigen::MatrixXd m = matrix_from_json(sc.at("confusion"), "scorer.confusion");
    if (m.rows() != 6 || m.cols() != 6) throw Error(ErrorCode::Configuration, "scorer.confusion must be 6x6");
    return m;
  }
  double diag = 1.0;
  read(sc, "confusion_diagonal", diag);
  return diagonal_confusion(diag);
}

}  // namespace

PipelineConfig config_from_json(const Json& j) {
  PipelineConfig cfg;
  check_keys(j, "config",
             {"camera", "segmentation", "proposals", "detection", "tracking", "scorer", "fov", "guidance", "frame_rate",
              "pipelined", "max_skipped_fraction"});
  if (j.contains("camera")) cfg.camera = camera_from_json(j.at("camera"));
  cfg.fov = camera_fov(cfg.camera);

  auto& seg = cfg.detection.proposals.segmentation;
  if (j.contains("segmentation")) {
    const Json& s = j.at("segmentation");
    check_keys(s, "segmentation",
               {"cloud_stride", "ransac_iterations", "plane_inlier_dist", "min_inlier_ratio", "link_dist",
                "min_cluster_size", "max_cluster_size"});
    read(s, "cloud_stride", seg.cloud_stride);
    read(s, "ransac_iterations", seg.ransac_iterations);
    read(s, "plane_inlier_dist", seg.plane_inlier_dist);
    read(s, "min_inlier_ratio", seg.min_inlier_ratio);
    read(s, "link_dist", seg.link_dist);
    read(s, "min_cluster_size", seg.min_cluster_size);
    if (s.contains("max_cluster_size") && !s.at("max_cluster_size").is_null())
      read(s, "max_cluster_size", seg.max_cluster_size);
  }
  if (j.contains("proposals")) {
    const Json& p = j.at("proposals");
    check_keys(p, "proposals", {"slide_positions", "stride_px", "person_width", "person_height"});
    read(p, "slide_positions", cfg.detection.proposals.slide_positions);
    read(p, "stride_px", cfg.detection.proposals.stride_px);
    double w = 0.4, h = 1.75;
    read(p, "person_width", w);
    read(p, "person_height", h);
    cfg.detection.proposals.templates = TemplateSet::from_person(w, h);
  }
  if (j.contains("detection")) {
    const Json& d = j.at("detection");
    check_keys(d, "detection", {"nms_iou", "background_abstains"});
    read(d, "nms_iou", cfg.detection.nms_iou);
    read(d, "background_abstains", cfg.detection.background_abstains);
  }
  if (j.contains("tracking")) {
    const Json& t = j.at("tracking");
    check_keys(t, "tracking",
               {"q", "r", "initial_position_var", "initial_velocity_var", "gate_d2", "max_position_sigma",
                "max_background_probability", "hmm_file", "hmm", "hmm_params"});
    read(t, "q", cfg.tracker.noise.q);
    if (t.contains("r")) {
      const Json& r = t.at("r");
      if (r.is_number()) {
        cfg.tracker.noise.r = Eigen::Matrix2d::Identity() * r.get<double>();
      } else {
        const Eigen::MatrixXd m = matrix_from_json(r, "tracking.r");
        if (m.rows() != 2 || m.cols() != 2) throw Error(ErrorCode::Configuration, "tracking.r must be 2x2");
        cfg.tracker.noise.r = m;
      }
    }
    read(t, "initial_position_var", cfg.tracker.initial_position_var);
    read(t, "initial_velocity_var", cfg.tracker.initial_velocity_var);
    read(t, "gate_d2", cfg.tracker.gate_d2);
    read(t, "max_position_sigma", cfg.tracker.max_position_sigma);
    read(t, "max_background_probability", cfg.tracker.max_background_probability);
    const int sources = int(t.contains("hmm_file")) + int(t.contains("hmm")) + int(t.contains("hmm_params"));
    if (sources > 1) throw Error(ErrorCode::Configuration, "tracking: give at most one of hmm_file, hmm, hmm_params");
    if (t.contains("hmm_file")) {
      const auto path = t.at("hmm_file").get<std::string>();
      std::ifstream is(path);
      if (!is) throw Error(ErrorCode::Io, "cannot read hmm file '" + path + "'");
      cfg.tracker.model = read_hmm(is);
    } else if (t.contains("hmm")) {
      const Json& h = t.at("hmm");
      check_keys(h, "tracking.hmm", {"prior", "transition", "measurement"});
      const auto prior = h.at("prior").get<std::vector<double>>();
      cfg.tracker.model.prior = Eigen::Map<const Eigen::VectorXd>(prior.data(), static_cast<Eigen::Index>(prior.size()));
      cfg.tracker.model.transition = matrix_from_json(h.at("transition"), "tracking.hmm.transition");
      cfg.tracker.model.measurement = matrix_from_json(h.at("measurement"), "tracking.hmm.measurement");
    } else if (t.contains("hmm_params")) {
      const Json& h = t.at("hmm_params");
      check_keys(h, "tracking.hmm_params",
                 {"detector_diagonal", "clutter_prior", "class_switch", "class_to_clutter", "clutter_stay",
                  "miss_rate", "clutter_false_positive", "confusion_floor"});
      DefaultHmmParams p;
      double diag = 0.7;
      read(h, "detector_diagonal", diag);
      read(h, "clutter_prior", p.clutter_prior);
      read(h, "class_switch", p.class_switch);
      read(h, "class_to_clutter", p.class_to_clutter);
      read(h, "clutter_stay", p.clutter_stay);
      read(h, "miss_rate", p.miss_rate);
      read(h, "clutter_false_positive", p.clutter_false_positive);
      read(h, "confusion_floor", p.confusion_floor);
      cfg.tracker.model = default_tracking_model(diagonal_confusion(diag), p);
    }
  }
  if (j.contains("scorer")) {
    const Json& s = j.at("scorer");
    check_keys(s, "scorer", {"kind", "mode", "confusion_diagonal", "confusion", "positive_iou", "replay_file"});
    std::string kind = "oracle", mode = "sample";
    read(s, "kind", kind);
    read(s, "mode", mode);
    if (kind == "oracle") cfg.scorer.kind = ScorerConfig::Kind::Oracle;
    else if (kind == "replay") cfg.scorer.kind = ScorerConfig::Kind::Replay;
    else throw Error(ErrorCode::Configuration, "scorer.kind must be oracle or replay");
    if (mode == "sample") cfg.scorer.mode = OracleScorer::Mode::Sample;
    else if (mode == "expected") cfg.scorer.mode = OracleScorer::Mode::Expected;
    else throw Error(ErrorCode::Configuration, "scorer.mode must be sample or expected");
    if (s.contains("confusion") && s.contains("confusion_diagonal"))
      throw Error(ErrorCode::Configuration, "scorer: give confusion or confusion_diagonal, not both");
    cfg.scorer.confusion = confusion_from_json(s);
    read(s, "positive_iou", cfg.scorer.positive_iou);
    read(s, "replay_file", cfg.scorer.replay_file);
  }
  if (j.contains("fov")) {
    const Json& f = j.at("fov");
    check_keys(f, "fov", {"max_range", "half_angle_deg"});
    read(f, "max_range", cfg.fov.max_range);
    if (f.contains("half_angle_deg")) cfg.fov.half_angle = f.at("half_angle_deg").get<double>() * kDeg;
  }
  if (j.contains("guidance")) {
    const Json& g = j.at("guidance");
    check_keys(g, "guidance", {"range", "half_angle_deg", "dwell_s", "confidence", "speed_table"});
    read(g, "range", cfg.guidance.area.max_range);
    if (g.contains("half_angle_deg")) cfg.guidance.area.half_angle = g.at("half_angle_deg").get<double>() * kDeg;
    read(g, "dwell_s", cfg.guidance.dwell_s);
    read(g, "confidence", cfg.guidance.confidence);
    if (g.contains("speed_table")) {
      for (const auto& [name, v] : g.at("speed_table").items()) {
        const auto c = parse_class(name);
        if (!c || !is_foreground(*c)) throw Error(ErrorCode::Configuration, "guidance.speed_table: unknown class '" + name + "'");
        cfg.guidance.speed_table[index_of(*c)] = v.get<double>();
      }
    }
  }
  read(j, "frame_rate", cfg.frame_rate);
  read(j, "pipelined", cfg.pipelined);
  read(j, "max_skipped_fraction", cfg.max_skipped_fraction);
  cfg.validate();
  return cfg;
}

Json config_to_json(const PipelineConfig& cfg) {
  const auto& seg = cfg.detection.proposals.segmentation;
  const auto& tr = cfg.tracker;
  Json speed = Json::object();
  for (std::size_t c = 0; c < kNumForeground; ++c)
    if (cfg.guidance.speed_table[c]) speed[std::string(class_name(class_at(c)))] = *cfg.guidance.speed_table[c];
  Json seg_j = {{"cloud_stride", seg.cloud_stride},
                {"ransac_iterations", seg.ransac_iterations},
                {"plane_inlier_dist", seg.plane_inlier_dist},
                {"min_inlier_ratio", seg.min_inlier_ratio},
                {"link_dist", seg.link_dist},
                {"min_cluster_size", seg.min_cluster_size}};
  seg_j["max_cluster_size"] = seg.max_cluster_size == std::numeric_limits<std::size_t>::max()
                                  ? Json(nullptr)
                                  : Json(seg.max_cluster_size);
  Json scorer = {{"kind", cfg.scorer.kind == ScorerConfig::Kind::Oracle ? "oracle" : "replay"},
                 {"mode", cfg.scorer.mode == OracleScorer::Mode::Sample ? "sample" : "expected"},
                 {"confusion", matrix_to_json(cfg.scorer.confusion)},
                 {"positive_iou", cfg.scorer.positive_iou}};
  if (!cfg.scorer.replay_file.empty()) scorer["replay_file"] = cfg.scorer.replay_file;
  const Eigen::VectorXd& prior = tr.model.prior;
  return {{"camera", camera_to_json(cfg.camera)},
          {"segmentation", seg_j},
          {"proposals",
           {{"slide_positions", cfg.detection.proposals.slide_positions},
            {"stride_px", cfg.detection.proposals.stride_px},
            {"person_width", cfg.detection.proposals.templates[0].width_m},
            {"person_height", cfg.detection.proposals.templates[0].height_m}}},
          {"detection", {{"nms_iou", cfg.detection.nms_iou}, {"background_abstains", cfg.detection.background_abstains}}},
          {"tracking",
           {{"q", tr.noise.q},
            {"r", matrix_to_json(tr.noise.r)},
            {"initial_position_var", tr.initial_position_var},
            {"initial_velocity_var", tr.initial_velocity_var},
            {"gate_d2", tr.gate_d2},
            {"max_position_sigma", tr.max_position_sigma},
            {"max_background_probability", tr.max_background_probability},
            {"hmm",
             {{"prior", std::vector<double>(prior.data(), prior.data() + prior.size())},
              {"transition", matrix_to_json(tr.model.transition)},
              {"measurement", matrix_to_json(tr.model.measurement)}}}}},
          {"scorer", scorer},
          {"fov", {{"max_range", cfg.fov.max_range}, {"half_angle_deg", cfg.fov.half_angle / kDeg}}},
          {"guidance",
           {{"range", cfg.guidance.area.max_range},
            {"half_angle_deg", cfg.guidance.area.half_angle / kDeg},
            {"dwell_s", cfg.guidance.dwell_s},
            {"confidence", cfg.guidance.confidence},
            {"speed_table", speed}}},
          {"frame_rate", cfg.frame_rate},
          {"pipelined", cfg.pipelined},
          {"max_skipped_fraction", cfg.max_skipped_fraction}};
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::Configuration, "override '" + assignment + "' must look like key.path=value");
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value;
  try {
    value = Json::parse(text);
  } catch (const nlohmann::json::exception&) {
    value = text;
  }
  Json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw Error(ErrorCode::Configuration, "override '" + assignment + "': empty key segment");
    if (!node->is_object()) *node = Json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

// --- frame sources ----------------------------------------------------------

std::optional<DepthFrame> VectorFrameSource::next() {
  if (pos_ >= frames_.size()) return std::nullopt;
  return frames_[pos_++];
}

DirectoryFrameSource::DirectoryFrameSource(const std::string& dir) {
  for (const auto& p : list_frames(dir)) files_.push_back(p.string());
}

std::optional<DepthFrame> DirectoryFrameSource::next() {
  if (pos_ >= files_.size()) return std::nullopt;
  return read_depth_frame(files_[pos_++]);
}

// --- statistics -------------------------------------------------------------

double RunStats::median_proposal_ms() const {
  std::vector<double> v;
  for (const auto& f : frames)
    if (!f.skipped) v.push_back(f.proposal_ms);
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double RunStats::mean_proposals() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& f : frames) {
    if (f.skipped) continue;
    sum += static_cast<double>(f.proposals.proposals);
    ++n;
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

void write_stats(std::ostream& os, const RunStats& stats) {
  Json frames = Json::array();
  for (const auto& f : stats.frames) {
    Json jf = {{"frame", f.frame},
               {"timestamp", f.timestamp},
               {"skipped", f.skipped},
               {"cloud_points", f.proposals.cloud_points},
               {"segments", f.proposals.segments},
               {"proposals", f.proposals.proposals},
               {"detections", f.detections},
               {"tracks", f.tracks},
               {"proposal_ms", f.proposal_ms},
               {"scoring_ms", f.scoring_ms},
               {"detection_ms", f.detection_ms},
               {"tracking_ms", f.tracking_ms}};
    if (f.skipped) jf["error"] = f.error;
    frames.push_back(jf);
  }
  const Json j = {{"frames_total", stats.frames.size()},
                  {"frames_skipped", stats.skipped},
                  {"total_ms", stats.total_ms},
                  {"median_proposal_ms", stats.median_proposal_ms()},
                  {"mean_proposals", stats.mean_proposals()},
                  {"frames", frames}};
  os << j.dump(2) << '\n';
}

// --- run --------------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Tracker plus guidance bookkeeping, shared by run() and track_detections().
class TrackingStage {
public:
  explicit TrackingStage(const PipelineConfig& cfg) : cfg_(cfg), tracker_(cfg.tracker) {}

  /// Returns false when the timestamp does not advance.
  bool process(int frame, double timestamp, const Pose& pose, const std::vector<Detection>& dets,
               std::vector<TrackRecord>& log, std::vector<GuidanceDecision>* guidance) {
    double dt = 1.0 / cfg_.frame_rate;
    if (last_t_) {
      dt = timestamp - *last_t_;
      if (!(dt > 0.0)) return false;
    }
    last_t_ = timestamp;
    const Wedge fov = cfg_.fov;
    tracker_.step(dets, dt, [&](const GroundPoint& p) { return fov.contains(pose, p); }, frame);
    for (int id : tracker_.last_deleted()) history_.erase(id);
    for (const Track& t : tracker_.tracks()) {
      TrackRecord r;
      r.frame = frame;
      r.track_id = t.id;
      r.position = t.state.position();
      r.velocity = t.state.velocity();
      r.sigma_pos = position_sigma(t.state);
      for (std::size_t c = 0; c < kNumCategories; ++c) r.belief[c] = t.belief(static_cast<Eigen::Index>(c));
      r.in_fov = t.in_fov;
      log.push_back(r);
      history_[t.id].push_back({timestamp, cfg_.guidance.area.contains(pose, r.position), r.belief});
    }
    if (guidance) guidance->push_back(guidance_decision(history_, timestamp, cfg_.guidance));
    return true;
  }

  std::size_t track_count() const { return tracker_.tracks().size(); }

private:
  const PipelineConfig& cfg_;
  Tracker tracker_;
  TrackHistory history_;
  std::optional<double> last_t_;
};

struct Pending {
  DepthFrame frame;
  FrameDetections det;
  bool failed = false;
  std::string error;
  double ms = 0.0;
};

}  // namespace

RunResult run(FrameSource& frames, const PipelineConfig& cfg, Scorer& scorer) {
  cfg.validate();
  const auto t_start = Clock::now();
  RunResult out;
  TrackingStage stage(cfg);

  auto detect = [&cfg, &scorer](DepthFrame f) {
    Pending p;
    p.frame = std::move(f);
    const auto t0 = Clock::now();
    try {
      p.det = detect_frame(p.frame, cfg.camera, cfg.detection, scorer);
    } catch (const Error& e) {
      p.failed = true;
      p.error = e.what();
    }
    p.ms = ms_since(t0);
    return p;
  };
  const auto policy = cfg.pipelined ? std::launch::async : std::launch::deferred;

  std::future<Pending> pending;
  if (auto first = frames.next()) pending = std::async(policy, detect, std::move(*first));
  while (pending.valid()) {
    Pending p = pending.get();
    // Start on the next frame before tracking this one.
    if (auto nxt = frames.next()) pending = std::async(policy, detect, std::move(*nxt));

    FrameStats fs;
    fs.frame = p.frame.frame_id;
    fs.timestamp = p.frame.timestamp;
    fs.detection_ms = p.ms;
    if (!p.failed) {
      fs.proposals = p.det.proposal_stats;
      fs.detections = p.det.detections.size();
      fs.proposal_ms = p.det.proposal_ms;
      fs.scoring_ms = p.det.scoring_ms;
      const auto t0 = Clock::now();
      if (stage.process(fs.frame, fs.timestamp, p.frame.camera_pose, p.det.detections, out.tracks, &out.guidance)) {
        out.detections.insert(out.detections.end(), p.det.detections.begin(), p.det.detections.end());
      } else {
        p.failed = true;
        p.error = "timestamp does not advance";
      }
      fs.tracking_ms = ms_since(t0);
      fs.tracks = stage.track_count();
    }
    if (p.failed) {
      fs.skipped = true;
      fs.error = p.error;
      ++out.stats.skipped;
    }
    out.stats.frames.push_back(std::move(fs));
  }
  out.stats.total_ms = ms_since(t_start);

  const std::size_t total = out.stats.frames.size();
  if (total > 0 && static_cast<double>(out.stats.skipped) > cfg.max_skipped_fraction * static_cast<double>(total)) {
    throw Error(ErrorCode::InsufficientData, std::to_string(out.stats.skipped) + " of " + std::to_string(total) +
                                                 " frames failed; first error: " +
                                                 std::find_if(out.stats.frames.begin(), out.stats.frames.end(),
                                                              [](const FrameStats& f) { return f.skipped; })
                                                     ->error);
  }
  return out;
}

RunResult run(const std::vector<DepthFrame>& frames, const PipelineConfig& cfg, Scorer& scorer) {
  VectorFrameSource src(frames);
  return run(src, cfg, scorer);
}

std::vector<TrackRecord> track_detections(const std::vector<Detection>& detections,
                                          const std::vector<FrameMeta>& frames, const PipelineConfig& cfg) {
  cfg.validate();
  std::map<int, std::vector<Detection>> by_frame;
  for (const auto& d : detections) by_frame[d.frame].push_back(d);

  std::vector<FrameMeta> meta = frames;
  if (meta.empty() && !by_frame.empty()) {
    for (int f = by_frame.begin()->first; f <= by_frame.rbegin()->first; ++f)
      meta.push_back({f, f / cfg.frame_rate, Pose::Identity()});
  }
  std::sort(meta.begin(), meta.end(), [](const FrameMeta& a, const FrameMeta& b) { return a.frame < b.frame; });

  TrackingStage stage(cfg);
  std::vector<TrackRecord> log;
  static const std::vector<Detection> kNone;
  for (const auto& m : meta) {
    const auto it = by_frame.find(m.frame);
    if (!stage.process(m.frame, m.timestamp, m.camera_pose, it == by_frame.end() ? kNone : it->second, log, nullptr))
      throw Error(ErrorCode::Configuration, "frame " + std::to_string(m.frame) + ": timestamp does not advance");
  }
  return log;
}

std::unique_ptr<Scorer> make_scorer(const ScorerConfig& cfg, const std::vector<GroundTruthFrame>& truth,
                                    std::uint64_t seed) {
  if (cfg.kind == ScorerConfig::Kind::Oracle) {
    OracleScorer::Config oc;
    oc.confusion = cfg.confusion;
    oc.mode = cfg.mode;
    oc.seed = seed;
    oc.positive_iou = cfg.positive_iou;
    return std::make_unique<OracleScorer>(truth, oc);
  }
  std::ifstream is(cfg.replay_file);
  if (!is) throw Error(ErrorCode::Io, "cannot read scores '" + cfg.replay_file + "'");
  auto mock = std::make_unique<MockScorer>();
  for (const auto& s : read_scored_boxes(is)) mock->add(s.frame, s.box, s.scores);
  return mock;
}

std::vector<LabeledSequence> labeled_sequences(const std::vector<Detection>& detections,
                                               const std::vector<GroundTruthFrame>& truth, double iou_threshold) {
  std::map<int, std::vector<const Detection*>> dets_by_frame;
  for (const auto& d : detections) dets_by_frame[d.frame].push_back(&d);
  std::set<int> frames;
  for (const auto& f : truth) frames.insert(f.frame_id);
  for (const auto& [f, _] : dets_by_frame) frames.insert(f);
  std::map<int, const GroundTruthFrame*> truth_by_frame;
  for (const auto& f : truth) truth_by_frame[f.frame_id] = &f;

  std::map<int, LabeledSequence> people;
  std::vector<LabeledSequence> clutter;
  const int background = static_cast<int>(index_of(ClassId::Background));
  for (int frame : frames) {
    static const std::vector<const Detection*> kNone;
    const auto dit = dets_by_frame.find(frame);
    const auto& dets = dit == dets_by_frame.end() ? kNone : dit->second;
    const auto tit = truth_by_frame.find(frame);
    const std::vector<GroundTruthObject> objects = tit == truth_by_frame.end() ? std::vector<GroundTruthObject>{}
                                                                                : tit->second->objects;
    std::vector<int> obj_to_det(objects.size(), -1);
    std::vector<char> det_used(dets.size(), 0);
    if (!objects.empty() && !dets.empty()) {
      Eigen::MatrixXd cost(static_cast<Eigen::Index>(objects.size()), static_cast<Eigen::Index>(dets.size()));
      for (std::size_t i = 0; i < objects.size(); ++i)
        for (std::size_t k = 0; k < dets.size(); ++k)
          cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = 1.0 - iou(objects[i].box, dets[k]->box);
      const Assignment a = solve_assignment(cost);
      for (std::size_t i = 0; i < objects.size(); ++i) {
        const int k = a.row_to_col[i];
        if (k < 0 || iou(objects[i].box, dets[static_cast<std::size_t>(k)]->box) < iou_threshold) continue;
        obj_to_det[i] = k;
        det_used[static_cast<std::size_t>(k)] = 1;
      }
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const int obs = obj_to_det[i] < 0 ? background
                                        : static_cast<int>(index_of(dets[static_cast<std::size_t>(obj_to_det[i])]->cls));
      people[objects[i].person_id].push_back({static_cast<int>(index_of(objects[i].cls)), obs});
    }
    for (std::size_t k = 0; k < dets.size(); ++k)
      if (!det_used[k]) clutter.push_back({{static_cast<int>(kClutterState), static_cast<int>(index_of(dets[k]->cls))}});
  }
  std::vector<LabeledSequence> out;
  for (auto& [_, s] : people) out.push_back(std::move(s));
  for (auto& s : clutter) out.push_back(std::move(s));
  return out;
}

}  // namespace mobility
