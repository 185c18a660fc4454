// Command line front end: simulate, propose, detect, track, evaluate, run,
// estimate-hmm.

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mobility/class_belief.hpp"
#include "mobility/error.hpp"
#include "mobility/evaluation.hpp"
#include "mobility/io.hpp"
#include "mobility/pipeline.hpp"
#include "mobility/simulation.hpp"

namespace fs = std::filesystem;
using namespace mobility;
using Json = nlohmann::ordered_json;

namespace {

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
  cmd->add_option("--config", args.file, "Pipeline config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--set", args.overrides, "Override a config entry, e.g. --set tracking.gate_d2=12");
}

PipelineConfig load_config(const ConfigArgs& args) {
  Json doc = args.file.empty() ? Json::object() : read_json_file(args.file);
  for (const auto& o : args.overrides) apply_override(doc, o);
  return config_from_json(doc);
}

std::ofstream open_out(const std::string& path) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::Io, "cannot read '" + path + "'");
  return is;
}

std::vector<GroundTruthFrame> load_truth(const std::string& path) {
  auto is = open_in(path);
  return read_ground_truth(is);
}

/// Camera from the frame directory when present, else from the config.
CameraModel frames_camera(const std::string& dir, const PipelineConfig& cfg) {
  const fs::path cam = fs::path(dir) / "camera.json";
  return fs::exists(cam) ? read_camera(cam) : cfg.camera;
}

std::vector<FrameMeta> frame_meta(const std::string& dir) {
  std::vector<FrameMeta> out;
  for (const auto& p : list_frames(dir)) {
    const Json side = read_json_file(p);
    out.push_back({side.at("frame").get<int>(), side.at("timestamp").get<double>(), pose_from_json(side.at("pose"))});
  }
  return out;
}

void write_guidance(std::ostream& os, const std::vector<TrackRecord>& tracks, const std::vector<GuidanceDecision>& g,
                    const RunStats& stats) {
  std::size_t k = 0;
  for (const auto& f : stats.frames) {
    if (f.skipped) continue;
    const GuidanceDecision& d = g.at(k++);
    Json j = {{"frame", f.frame}, {"timestamp", f.timestamp}, {"action", action_name(d.action)}};
    if (d.cls) {
      j["class"] = class_name(*d.cls);
      j["track_id"] = d.track_id;
      j["dwell_s"] = d.dwell_s;
    }
    if (d.speed) j["speed"] = *d.speed;
    os << j.dump() << '\n';
  }
  (void)tracks;
}

Scenario pick_scenario(const std::string& name, const std::string& file, const std::string& guidance_class,
                       int variant, const PipelineConfig& cfg) {
  if (!file.empty()) return scenario_from_json(read_json_file(file));
  if (!guidance_class.empty()) {
    const auto c = parse_class(guidance_class);
    if (!c) throw Error(ErrorCode::Configuration, "unknown class '" + guidance_class + "'");
    return guidance_scenario(*c, variant);
  }
  return standard_scenario(name, coast_survival_time(cfg.tracker, 1.0 / cfg.frame_rate));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Depth-only people perception: proposals, detection, tracking, class belief, evaluation"};
  app.require_subcommand(1);

  // simulate
  ConfigArgs sim_cfg;
  std::string sim_name, sim_file, sim_out, sim_guidance;
  int sim_variant = 0;
  std::uint64_t sim_seed = 0;
  bool sim_list = false;
  auto* sim = app.add_subcommand("simulate", "Render a scenario to depth frames and ground truth");
  add_config_options(sim, sim_cfg);
  sim->add_flag("--list", sim_list, "List the standard scenarios and exit");
  sim->add_option("--scenario", sim_name, "Standard scenario name");
  sim->add_option("--scenario-file", sim_file, "Scenario file (JSON)")->check(CLI::ExistingFile);
  sim->add_option("--guidance", sim_guidance, "Guidance approach scenario for this class");
  sim->add_option("--variant", sim_variant, "Guidance scenario variant");
  sim->add_option("--seed", sim_seed, "Noise seed");
  sim->add_option("--out", sim_out, "Output directory");

  // propose
  ConfigArgs prop_cfg;
  std::string prop_frames, prop_out, prop_stats;
  std::uint64_t prop_ransac = 0;
  bool prop_dense = false;
  auto* prop = app.add_subcommand("propose", "Segment frames and write region proposals");
  add_config_options(prop, prop_cfg);
  prop->add_option("--frames", prop_frames, "Frame directory")->required()->check(CLI::ExistingDirectory);
  prop->add_option("--ransac-seed", prop_ransac, "RANSAC seed")->required();
  prop->add_option("--out", prop_out, "Proposal log (JSON lines)");
  prop->add_option("--stats", prop_stats, "Per-frame statistics (JSON)");
  prop->add_flag("--dense", prop_dense, "Also report the dense sliding-window box count");

  // detect
  ConfigArgs det_cfg;
  std::string det_frames, det_truth, det_out;
  std::uint64_t det_seed = 0, det_ransac = 0;
  auto* det = app.add_subcommand("detect", "Score proposals and write the detection log");
  add_config_options(det, det_cfg);
  det->add_option("--frames", det_frames, "Frame directory")->required()->check(CLI::ExistingDirectory);
  det->add_option("--truth", det_truth, "Ground truth for the oracle scorer")->check(CLI::ExistingFile);
  det->add_option("--seed", det_seed, "Scorer seed")->required();
  det->add_option("--ransac-seed", det_ransac, "RANSAC seed")->required();
  det->add_option("--out", det_out, "Detection log (JSON lines)")->required();

  // track
  ConfigArgs trk_cfg;
  std::string trk_dets, trk_frames, trk_out;
  auto* trk = app.add_subcommand("track", "Track a detection log");
  add_config_options(trk, trk_cfg);
  trk->add_option("--detections", trk_dets, "Detection log")->required()->check(CLI::ExistingFile);
  trk->add_option("--frames", trk_frames, "Frame directory for timestamps and poses")->check(CLI::ExistingDirectory);
  trk->add_option("--out", trk_out, "Track log (JSON lines)")->required();

  // evaluate
  std::string ev_dets, ev_tracks, ev_truth, ev_json, ev_text, ev_csv;
  double ev_iou = 0.5, ev_dist = 0.5;
  bool ev_no_occluded = false, ev_keep_out_of_fov = false;
  auto* ev = app.add_subcommand("evaluate", "Compute detection and tracking metrics");
  ev->add_option("--truth", ev_truth, "Ground truth (JSON lines)")->required()->check(CLI::ExistingFile);
  ev->add_option("--detections", ev_dets, "Detection log")->check(CLI::ExistingFile);
  ev->add_option("--tracks", ev_tracks, "Track log")->check(CLI::ExistingFile);
  ev->add_option("--iou", ev_iou, "IoU threshold for AP and the confusion matrix");
  ev->add_option("--match-dist", ev_dist, "CLEAR MOT match distance in meters");
  ev->add_flag("--exclude-occluded", ev_no_occluded, "Treat occluded ground truth as don't-care");
  ev->add_flag("--keep-out-of-fov", ev_keep_out_of_fov, "Also score hypotheses outside the field of view");
  ev->add_option("--json", ev_json, "Report as JSON");
  ev->add_option("--text", ev_text, "Report as text (default: stdout)");
  ev->add_option("--pr-csv", ev_csv, "Precision/recall curves as CSV");

  // run
  ConfigArgs run_cfg;
  std::string run_frames, run_truth, run_out, run_scenario;
  std::uint64_t run_seed = 0, run_ransac = 0;
  auto* rn = app.add_subcommand("run", "End-to-end pipeline: frames to detection, track and guidance logs");
  add_config_options(rn, run_cfg);
  rn->add_option("--frames", run_frames, "Frame directory")->check(CLI::ExistingDirectory);
  rn->add_option("--scenario", run_scenario, "Render this standard scenario in memory instead of reading frames");
  rn->add_option("--truth", run_truth, "Ground truth for the oracle scorer")->check(CLI::ExistingFile);
  rn->add_option("--seed", run_seed, "Scorer seed (and render seed with --scenario)")->required();
  rn->add_option("--ransac-seed", run_ransac, "RANSAC seed")->required();
  rn->add_option("--out", run_out, "Output directory")->required();

  // estimate-hmm
  std::string hmm_labeled, hmm_dets, hmm_truth, hmm_out;
  double hmm_alpha = 1.0;
  auto* hmm = app.add_subcommand("estimate-hmm", "Estimate the class HMM from labeled sequences");
  hmm->add_option("--labeled", hmm_labeled, "Labeled steps (JSON lines)")->check(CLI::ExistingFile);
  hmm->add_option("--detections", hmm_dets, "Detection log to label against --truth")->check(CLI::ExistingFile);
  hmm->add_option("--truth", hmm_truth, "Ground truth")->check(CLI::ExistingFile);
  hmm->add_option("--alpha", hmm_alpha, "Dirichlet pseudo-count");
  hmm->add_option("--out", hmm_out, "Model file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const PipelineConfig cfg = load_config(sim_cfg);
      if (sim_list) {
        for (const auto& ns : standard_scenarios(coast_survival_time(cfg.tracker, 1.0 / cfg.frame_rate)))
          std::cout << ns.scenario.name << "\n  " << ns.scenario.description << "\n  expected: " << ns.expected
                    << "\n";
        return 0;
      }
      if (sim_out.empty() || sim->count("--seed") == 0)
        throw CLI::ValidationError("simulate", "--out and --seed are required");
      if (int(!sim_name.empty()) + int(!sim_file.empty()) + int(!sim_guidance.empty()) != 1)
        throw CLI::ValidationError("simulate", "give exactly one of --scenario, --scenario-file, --guidance");
      Scenario s = pick_scenario(sim_name, sim_file, sim_guidance, sim_variant, cfg);
      s.seed = sim_seed;
      fs::create_directories(sim_out);
      write_camera(fs::path(sim_out) / "camera.json", cfg.camera);
      {
        auto os = open_out((fs::path(sim_out) / "scenario.json").string());
        os << scenario_to_json(s).dump(2) << '\n';
      }
      std::vector<GroundTruthFrame> truth;
      for (int f = 0; f < s.frame_count(); ++f) {
        RenderedFrame r = render_frame(s, f, cfg.camera);
        write_depth_frame(sim_out, r.depth);
        truth.push_back(std::move(r.truth));
      }
      auto os = open_out((fs::path(sim_out) / "ground_truth.jsonl").string());
      write_ground_truth(os, truth);
      std::cerr << "wrote " << truth.size() << " frames of '" << s.name << "' to " << sim_out << "\n";
      return 0;
    }

    if (prop->parsed()) {
      PipelineConfig cfg = load_config(prop_cfg);
      cfg.camera = frames_camera(prop_frames, cfg);
      cfg.detection.proposals.segmentation.ransac_seed = prop_ransac;
      std::optional<std::ofstream> out;
      if (!prop_out.empty()) out = open_out(prop_out);
      Json frames = Json::array();
      std::vector<double> ms;
      double total = 0.0;
      for (const auto& p : list_frames(prop_frames)) {
        const DepthFrame f = read_depth_frame(p);
        const auto t0 = std::chrono::steady_clock::now();
        const FrameProposals fp = frame_proposals(f, cfg.camera, cfg.detection.proposals);
        const double t = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        ms.push_back(t);
        total += static_cast<double>(fp.stats.proposals);
        if (out) write_proposals(*out, f.frame_id, fp.proposals);
        frames.push_back({{"frame", f.frame_id},
                          {"cloud_points", fp.stats.cloud_points},
                          {"plane_found", fp.stats.plane_found},
                          {"segments", fp.stats.segments},
                          {"proposals", fp.stats.proposals},
                          {"ms", t}});
      }
      std::vector<double> sorted = ms;
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted.empty() ? 0.0
                            : sorted.size() % 2 ? sorted[sorted.size() / 2]
                                                : 0.5 * (sorted[sorted.size() / 2 - 1] + sorted[sorted.size() / 2]);
      Json summary = {{"frames", ms.size()},
                      {"mean_proposals", ms.empty() ? 0.0 : total / static_cast<double>(ms.size())},
                      {"median_ms", median}};
      if (prop_dense)
        summary["dense_boxes"] = dense_proposals(cfg.camera, cfg.detection.proposals.templates, {}).size();
      std::cout << summary.dump(2) << '\n';
      if (!prop_stats.empty()) {
        summary["per_frame"] = frames;
        auto os = open_out(prop_stats);
        os << summary.dump(2) << '\n';
      }
      return 0;
    }

    if (det->parsed()) {
      PipelineConfig cfg = load_config(det_cfg);
      cfg.camera = frames_camera(det_frames, cfg);
      cfg.detection.proposals.segmentation.ransac_seed = det_ransac;
      if (cfg.scorer.kind == ScorerConfig::Kind::Oracle && det_truth.empty())
        throw CLI::ValidationError("detect", "the oracle scorer needs --truth");
      const auto truth = det_truth.empty() ? std::vector<GroundTruthFrame>{} : load_truth(det_truth);
      auto scorer = make_scorer(cfg.scorer, truth, det_seed);
      auto os = open_out(det_out);
      std::size_t skipped = 0, n = 0;
      for (const auto& p : list_frames(det_frames)) {
        const DepthFrame f = read_depth_frame(p);
        ++n;
        try {
          write_detections(os, detect_frame(f, cfg.camera, cfg.detection, *scorer).detections);
        } catch (const Error& e) {
          ++skipped;
          std::cerr << "frame " << f.frame_id << " skipped: " << e.what() << "\n";
        }
      }
      if (n > 0 && static_cast<double>(skipped) > cfg.max_skipped_fraction * static_cast<double>(n))
        throw Error(ErrorCode::InsufficientData, std::to_string(skipped) + " of " + std::to_string(n) + " frames failed");
      return 0;
    }

    if (trk->parsed()) {
      const PipelineConfig cfg = load_config(trk_cfg);
      auto is = open_in(trk_dets);
      const auto dets = read_detections(is);
      const auto meta = trk_frames.empty() ? std::vector<FrameMeta>{} : frame_meta(trk_frames);
      auto os = open_out(trk_out);
      write_tracks(os, track_detections(dets, meta, cfg));
      return 0;
    }

    if (ev->parsed()) {
      if (ev_dets.empty() && ev_tracks.empty())
        throw CLI::ValidationError("evaluate", "give --detections and/or --tracks");
      const auto truth = load_truth(ev_truth);
      MetricReport report;
      const MatchOptions mo{ev_iou, !ev_no_occluded};
      if (!ev_dets.empty()) {
        auto is = open_in(ev_dets);
        const auto dets = read_detections(is);
        report.detection = average_precision(dets, truth, mo);
        report.confusion = confusion_matrix(dets, truth, mo);
      }
      if (!ev_tracks.empty()) {
        auto is = open_in(ev_tracks);
        report.tracking = clear_mot(read_tracks(is), truth, {ev_dist, !ev_keep_out_of_fov, !ev_no_occluded});
      }
      if (ev_text.empty()) {
        write_report_text(std::cout, report);
      } else {
        auto os = open_out(ev_text);
        write_report_text(os, report);
      }
      if (!ev_json.empty()) {
        auto os = open_out(ev_json);
        os << report_json(report) << '\n';
      }
      if (!ev_csv.empty() && report.detection) {
        auto os = open_out(ev_csv);
        write_pr_csv(os, *report.detection);
      }
      return 0;
    }

    if (rn->parsed()) {
      PipelineConfig cfg = load_config(run_cfg);
      cfg.detection.proposals.segmentation.ransac_seed = run_ransac;
      if (run_frames.empty() == run_scenario.empty())
        throw CLI::ValidationError("run", "give exactly one of --frames and --scenario");
      std::vector<GroundTruthFrame> truth;
      std::vector<DepthFrame> rendered;
      if (!run_scenario.empty()) {
        Scenario s = standard_scenario(run_scenario, coast_survival_time(cfg.tracker, 1.0 / cfg.frame_rate));
        s.seed = run_seed;
        for (int f = 0; f < s.frame_count(); ++f) {
          RenderedFrame r = render_frame(s, f, cfg.camera);
          rendered.push_back(std::move(r.depth));
          truth.push_back(std::move(r.truth));
        }
      } else {
        cfg.camera = frames_camera(run_frames, cfg);
        if (!run_truth.empty()) truth = load_truth(run_truth);
      }
      if (cfg.scorer.kind == ScorerConfig::Kind::Oracle && truth.empty() && run_scenario.empty())
        throw CLI::ValidationError("run", "the oracle scorer needs --truth");
      auto scorer = make_scorer(cfg.scorer, truth, run_seed);
      RunResult result;
      if (!rendered.empty() || !run_scenario.empty()) {
        result = run(rendered, cfg, *scorer);
      } else {
        DirectoryFrameSource src(run_frames);
        result = run(src, cfg, *scorer);
      }
      const fs::path out(run_out);
      fs::create_directories(out);
      {
        auto os = open_out((out / "detections.jsonl").string());
        write_detections(os, result.detections);
      }
      {
        auto os = open_out((out / "tracks.jsonl").string());
        write_tracks(os, result.tracks);
      }
      {
        auto os = open_out((out / "guidance.jsonl").string());
        write_guidance(os, result.tracks, result.guidance, result.stats);
      }
      {
        auto os = open_out((out / "stats.json").string());
        write_stats(os, result.stats);
      }
      if (!run_scenario.empty()) {
        auto os = open_out((out / "ground_truth.jsonl").string());
        write_ground_truth(os, truth);
      }
      std::cerr << result.stats.frames.size() << " frames, " << result.stats.skipped << " skipped, "
                << result.detections.size() << " detections, " << result.tracks.size() << " track records\n";
      return 0;
    }

    if (hmm->parsed()) {
      std::vector<LabeledSequence> seqs;
      if (!hmm_labeled.empty()) {
        auto is = open_in(hmm_labeled);
        seqs = read_labeled_sequences(is);
      } else if (!hmm_dets.empty() && !hmm_truth.empty()) {
        auto is = open_in(hmm_dets);
        seqs = labeled_sequences(read_detections(is), load_truth(hmm_truth));
      } else {
        throw CLI::ValidationError("estimate-hmm", "give --labeled, or --detections with --truth");
      }
      const HmmModel model = estimate_model(seqs, hmm_alpha);
      auto os = open_out(hmm_out);
      write_hmm(os, model);
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
