#include "mobility/io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "mobility/error.hpp"

namespace mobility {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorCode::Io, what); }

const Json& field(const Json& j, const char* key) {
  if (!j.is_object()) fail("expected a JSON object");
  const auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return field(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("field '") + key + "': " + e.what());
  }
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return get<T>(j, key);
}

ClassId class_field(const Json& j, const char* key) {
  const auto name = get<std::string>(j, key);
  const auto cls = parse_class(name);
  if (!cls) fail("unknown class '" + name + "'");
  return *cls;
}

template <std::size_t N>
std::array<double, N> array_field(const Json& j, const char* key) {
  const auto v = get<std::vector<double>>(j, key);
  if (v.size() != N) fail(std::string("field '") + key + "' must have " + std::to_string(N) + " entries");
  std::array<double, N> out{};
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

std::ofstream open_out(const fs::path& file, bool binary = false) {
  std::ofstream os(file, binary ? std::ios::binary : std::ios::out);
  if (!os) fail("cannot write '" + file.string() + "'");
  return os;
}

void write_lines(std::ostream& os, const std::vector<Json>& lines) {
  for (const auto& l : lines) os << l.dump() << '\n';
}

}  // namespace

// --- json helpers -----------------------------------------------------------

std::vector<Json> read_json_lines(std::istream& is) {
  std::vector<Json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

Json read_json_file(const fs::path& file) {
  std::ifstream is(file);
  if (!is) fail("cannot read '" + file.string() + "'");
  try {
    return Json::parse(is, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    fail(file.string() + ": " + e.what());
  }
}

// --- camera and frames ------------------------------------------------------

Json camera_to_json(const CameraModel& cam) {
  return {{"fx", cam.fx},         {"fy", cam.fy},           {"cx", cam.cx},
          {"cy", cam.cy},         {"width", cam.width},     {"height", cam.height},
          {"min_depth", cam.min_depth}, {"max_depth", cam.max_depth}};
}

CameraModel camera_from_json(const Json& j) {
  CameraModel cam;
  cam.fx = get_or(j, "fx", cam.fx);
  cam.fy = get_or(j, "fy", cam.fy);
  cam.cx = get_or(j, "cx", cam.cx);
  cam.cy = get_or(j, "cy", cam.cy);
  cam.width = get_or(j, "width", cam.width);
  cam.height = get_or(j, "height", cam.height);
  cam.min_depth = get_or(j, "min_depth", cam.min_depth);
  cam.max_depth = get_or(j, "max_depth", cam.max_depth);
  cam.validate();
  return cam;
}

void write_camera(const fs::path& file, const CameraModel& cam) {
  auto os = open_out(file);
  os << camera_to_json(cam).dump(2) << '\n';
}

CameraModel read_camera(const fs::path& file) { return camera_from_json(read_json_file(file)); }

void write_pgm16(const fs::path& file, int width, int height, const std::vector<std::uint16_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw Error(ErrorCode::Configuration, "pgm: pixel count does not match dimensions");
  auto os = open_out(file, true);
  os << "P5\n" << width << ' ' << height << "\n65535\n";
  std::vector<unsigned char> bytes(pixels.size() * 2);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    bytes[2 * i] = static_cast<unsigned char>(pixels[i] >> 8);
    bytes[2 * i + 1] = static_cast<unsigned char>(pixels[i] & 0xff);
  }
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail("write failed for '" + file.string() + "'");
}

std::vector<std::uint16_t> read_pgm16(const fs::path& file, int& width, int& height) {
  std::ifstream is(file, std::ios::binary);
  if (!is) fail("cannot read '" + file.string() + "'");
  auto token = [&]() {
    std::string t;
    char c;
    while (is.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(is, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!t.empty()) break;
        continue;
      }
      t.push_back(c);
    }
    return t;
  };
  if (token() != "P5") fail(file.string() + ": not a binary PGM");
  try {
    width = std::stoi(token());
    height = std::stoi(token());
    if (std::stoi(token()) != 65535) fail(file.string() + ": expected maxval 65535");
  } catch (const std::logic_error&) {
    fail(file.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0) fail(file.string() + ": bad dimensions");
  const std::size_t n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<unsigned char> bytes(2 * n);
  is.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(is.gcount()) != bytes.size()) fail(file.string() + ": truncated pixel data");
  std::vector<std::uint16_t> px(n);
  for (std::size_t i = 0; i < n; ++i) px[i] = static_cast<std::uint16_t>((bytes[2 * i] << 8) | bytes[2 * i + 1]);
  return px;
}

std::string frame_stem(int frame_id) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d", frame_id);
  return buf;
}

Json pose_to_json(const Pose& pose) {
  Json rot = Json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) rot.push_back(pose.linear()(r, c));
  const Eigen::Vector3d t = pose.translation();
  return {{"rotation", rot}, {"translation", {t.x(), t.y(), t.z()}}};
}

Pose pose_from_json(const Json& j) {
  const auto r = array_field<9>(j, "rotation");
  const auto t = array_field<3>(j, "translation");
  Pose pose = Pose::Identity();
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) pose.linear()(a, b) = r[static_cast<std::size_t>(3 * a + b)];
  pose.translation() = Eigen::Vector3d(t[0], t[1], t[2]);
  return pose;
}

void write_depth_frame(const fs::path& dir, const DepthFrame& frame, const std::string& camera_ref) {
  const std::string stem = frame_stem(frame.frame_id);
  write_pgm16(dir / (stem + ".pgm"), frame.width, frame.height, frame.depth);
  const Json side = {{"frame", frame.frame_id},
                     {"timestamp", frame.timestamp},
                     {"camera", camera_ref},
                     {"image", stem + ".pgm"},
                     {"pose", pose_to_json(frame.camera_pose)}};
  auto os = open_out(dir / (stem + ".json"));
  os << side.dump(2) << '\n';
}

DepthFrame read_depth_frame(const fs::path& file) {
  fs::path sidecar = file;
  sidecar.replace_extension(".json");
  const Json side = read_json_file(sidecar);
  fs::path image = file;
  image.replace_extension(".pgm");
  if (side.contains("image")) image = sidecar.parent_path() / get<std::string>(side, "image");
  DepthFrame f;
  f.frame_id = get<int>(side, "frame");
  f.timestamp = get<double>(side, "timestamp");
  f.camera_pose = pose_from_json(field(side, "pose"));
  f.depth = read_pgm16(image, f.width, f.height);
  return f;
}

std::vector<fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail("'" + dir.string() + "' is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.rfind("frame_", 0) == 0 && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// --- scenarios --------------------------------------------------------------

Json scenario_to_json(const Scenario& s) {
  Json actors = Json::array();
  for (const auto& a : s.actors) {
    Json path = Json::array();
    for (const auto& w : a.trajectory) path.push_back({w.t, w.position.x(), w.position.y()});
    Json changes = Json::array();
    for (const auto& c : a.class_changes) changes.push_back({c.t, class_name(c.cls)});
    Json ja = {{"id", a.person_id}, {"class", class_name(a.cls)}, {"path", path}};
    if (!changes.empty()) ja["class_changes"] = changes;
    if (a.heading) ja["heading"] = *a.heading;
    actors.push_back(ja);
  }
  Json obstacles = Json::array();
  for (const auto& o : s.obstacles)
    obstacles.push_back({{"center", {o.center.x(), o.center.y()}},
                         {"yaw", o.yaw},
                         {"width", o.width},
                         {"depth", o.depth},
                         {"height", o.height}});
  Json cam = Json::array();
  for (const auto& w : s.camera_path) cam.push_back({w.t, w.x, w.z, w.yaw});
  return {{"name", s.name},
          {"description", s.description},
          {"duration", s.duration},
          {"frame_rate", s.frame_rate},
          {"camera_height", s.camera_height},
          {"noise_sigma_mm", s.noise_sigma_mm},
          {"camera_path", cam},
          {"obstacles", obstacles},
          {"actors", actors}};
}

Scenario scenario_from_json(const Json& j) {
  Scenario s;
  s.name = get_or<std::string>(j, "name", "");
  s.description = get_or<std::string>(j, "description", "");
  s.duration = get_or(j, "duration", s.duration);
  s.frame_rate = get_or(j, "frame_rate", s.frame_rate);
  s.camera_height = get_or(j, "camera_height", s.camera_height);
  s.noise_sigma_mm = get_or(j, "noise_sigma_mm", s.noise_sigma_mm);
  if (j.contains("camera_path")) {
    for (const auto& w : j.at("camera_path")) {
      if (!w.is_array() || w.size() != 4) fail("camera_path entries are [t, x, z, yaw]");
      s.camera_path.push_back({w[0].get<double>(), w[1].get<double>(), w[2].get<double>(), w[3].get<double>()});
    }
  }
  if (j.contains("obstacles")) {
    for (const auto& o : j.at("obstacles")) {
      Obstacle ob;
      const auto c = array_field<2>(o, "center");
      ob.center = GroundPoint(c[0], c[1]);
      ob.yaw = get_or(o, "yaw", 0.0);
      ob.width = get<double>(o, "width");
      ob.depth = get<double>(o, "depth");
      ob.height = get<double>(o, "height");
      s.obstacles.push_back(ob);
    }
  }
  if (j.contains("actors")) {
    for (const auto& ja : j.at("actors")) {
      Actor a;
      a.person_id = get<int>(ja, "id");
      a.cls = class_field(ja, "class");
      for (const auto& w : field(ja, "path")) {
        if (!w.is_array() || w.size() != 3) fail("path entries are [t, x, y]");
        a.trajectory.push_back({w[0].get<double>(), GroundPoint(w[1].get<double>(), w[2].get<double>())});
      }
      if (ja.contains("class_changes")) {
        for (const auto& c : ja.at("class_changes")) {
          if (!c.is_array() || c.size() != 2) fail("class_changes entries are [t, class]");
          const auto cls = parse_class(c[1].get<std::string>());
          if (!cls) fail("unknown class '" + c[1].get<std::string>() + "'");
          a.class_changes.push_back({c[0].get<double>(), *cls});
        }
      }
      if (ja.contains("heading") && !ja.at("heading").is_null()) a.heading = ja.at("heading").get<double>();
      s.actors.push_back(std::move(a));
    }
  }
  s.validate();
  return s;
}

// --- logs -------------------------------------------------------------------

Json box_to_json(const PixelBox& b) { return Json::array({b.u_min, b.v_min, b.u_max, b.v_max}); }

PixelBox box_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) fail("box must be [u_min, v_min, u_max, v_max]");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

Json detection_to_json(const Detection& d) {
  return {{"frame", d.frame},
          {"box", box_to_json(d.box)},
          {"class", class_name(d.cls)},
          {"scores", d.scores},
          {"pos_cam", {d.position_cam.x(), d.position_cam.y(), d.position_cam.z()}},
          {"pos_world", {d.position_world.x(), d.position_world.y()}}};
}

Detection detection_from_json(const Json& j) {
  Detection d;
  d.frame = get<int>(j, "frame");
  d.box = box_from_json(field(j, "box"));
  d.cls = class_field(j, "class");
  d.scores = array_field<kNumCategories>(j, "scores");
  const auto pc = array_field<3>(j, "pos_cam");
  d.position_cam = Eigen::Vector3d(pc[0], pc[1], pc[2]);
  const auto pw = array_field<2>(j, "pos_world");
  d.position_world = GroundPoint(pw[0], pw[1]);
  return d;
}

void write_detections(std::ostream& os, const std::vector<Detection>& dets) {
  for (const auto& d : dets) os << detection_to_json(d).dump() << '\n';
}

std::vector<Detection> read_detections(std::istream& is) {
  std::vector<Detection> out;
  for (const auto& j : read_json_lines(is)) out.push_back(detection_from_json(j));
  return out;
}

Json track_to_json(const TrackRecord& r) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < kNumForeground; ++c)
    if (r.belief[c] > r.belief[best]) best = c;
  return {{"frame", r.frame},
          {"track_id", r.track_id},
          {"x", r.position.x()},
          {"y", r.position.y()},
          {"vx", r.velocity.x()},
          {"vy", r.velocity.y()},
          {"sigma_pos", r.sigma_pos},
          {"belief", r.belief},
          {"class", class_name(class_at(best))},
          {"in_fov", r.in_fov}};
}

TrackRecord track_from_json(const Json& j) {
  TrackRecord r;
  r.frame = get<int>(j, "frame");
  r.track_id = get<int>(j, "track_id");
  r.position = GroundPoint(get<double>(j, "x"), get<double>(j, "y"));
  r.velocity = Eigen::Vector2d(get<double>(j, "vx"), get<double>(j, "vy"));
  r.sigma_pos = get<double>(j, "sigma_pos");
  r.belief = array_field<kNumCategories>(j, "belief");
  r.in_fov = get_or(j, "in_fov", true);
  return r;
}

void write_tracks(std::ostream& os, const std::vector<TrackRecord>& recs) {
  for (const auto& r : recs) os << track_to_json(r).dump() << '\n';
}

std::vector<TrackRecord> read_tracks(std::istream& is) {
  std::vector<TrackRecord> out;
  for (const auto& j : read_json_lines(is)) out.push_back(track_from_json(j));
  return out;
}

void write_ground_truth(std::ostream& os, const std::vector<GroundTruthFrame>& frames) {
  std::vector<Json> lines;
  for (const auto& f : frames) {
    if (f.objects.empty()) lines.push_back({{"frame", f.frame_id}, {"timestamp", f.timestamp}});
    for (const auto& o : f.objects)
      lines.push_back({{"frame", f.frame_id},
                       {"timestamp", f.timestamp},
                       {"box", box_to_json(o.box)},
                       {"class", class_name(o.cls)},
                       {"pos_world", {o.position.x(), o.position.y()}},
                       {"person_id", o.person_id},
                       {"occluded", o.occluded}});
  }
  write_lines(os, lines);
}

std::vector<GroundTruthFrame> read_ground_truth(std::istream& is) {
  std::map<int, GroundTruthFrame> frames;
  for (const auto& j : read_json_lines(is)) {
    const int id = get<int>(j, "frame");
    auto& f = frames[id];
    f.frame_id = id;
    f.timestamp = get_or(j, "timestamp", 0.0);
    if (!j.contains("class")) continue;
    GroundTruthObject o;
    o.box = box_from_json(field(j, "box"));
    o.cls = class_field(j, "class");
    const auto p = array_field<2>(j, "pos_world");
    o.position = GroundPoint(p[0], p[1]);
    o.person_id = get<int>(j, "person_id");
    o.occluded = get_or(j, "occluded", false);
    for (const auto& other : f.objects)
      if (other.person_id == o.person_id) fail("frame " + std::to_string(id) + ": duplicate person id");
    f.objects.push_back(o);
  }
  std::vector<GroundTruthFrame> out;
  for (auto& [_, f] : frames) out.push_back(std::move(f));
  return out;
}

void write_proposals(std::ostream& os, int frame_id, const std::vector<Proposal>& proposals) {
  for (const auto& p : proposals) {
    const Json j = {{"frame", frame_id},
                    {"segment", p.segment},
                    {"box", box_to_json(p.box)},
                    {"template", p.template_id},
                    {"slide", p.slide}};
    os << j.dump() << '\n';
  }
}

std::vector<ScoredBox> read_scored_boxes(std::istream& is) {
  std::vector<ScoredBox> out;
  for (const auto& j : read_json_lines(is))
    out.push_back({get<int>(j, "frame"), box_from_json(field(j, "box")), array_field<kNumCategories>(j, "scores")});
  return out;
}

namespace {

std::string state_name(int s) { return s == static_cast<int>(kClutterState) ? "clutter" : std::string(class_name(class_at(static_cast<std::size_t>(s)))); }

int parse_state(const std::string& name) {
  if (name == "clutter") return static_cast<int>(kClutterState);
  const auto c = parse_class(name);
  if (!c || !is_foreground(*c)) fail("unknown hidden state '" + name + "'");
  return static_cast<int>(index_of(*c));
}

int parse_observation(const std::string& name) {
  const auto c = parse_class(name);
  if (!c) fail("unknown observation '" + name + "'");
  return static_cast<int>(index_of(*c));
}

}  // namespace

void write_labeled_sequences(std::ostream& os, const std::vector<LabeledSequence>& seqs) {
  for (std::size_t s = 0; s < seqs.size(); ++s) {
    for (const auto& step : seqs[s]) {
      if (step.true_state < 0 || step.true_state > 5 || step.observed < 0 || step.observed > 5)
        throw Error(ErrorCode::Configuration, "labeled step outside the six-state model");
      const Json j = {{"sequence", s},
                      {"true", state_name(step.true_state)},
                      {"observed", class_name(class_at(static_cast<std::size_t>(step.observed)))}};
      os << j.dump() << '\n';
    }
  }
}

std::vector<LabeledSequence> read_labeled_sequences(std::istream& is) {
  std::map<long long, LabeledSequence> seqs;
  for (const auto& j : read_json_lines(is)) {
    seqs[get<long long>(j, "sequence")].push_back(
        {parse_state(get<std::string>(j, "true")), parse_observation(get<std::string>(j, "observed"))});
  }
  std::vector<LabeledSequence> out;
  for (auto& [_, s] : seqs) out.push_back(std::move(s));
  return out;
}

}  // namespace mobility
