#include "mobility/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <unordered_map>

#include <json.hpp>

#include "mobility/assignment.hpp"

namespace mobility {

namespace {

using FrameTruth = std::map<int, const GroundTruthFrame*>;

FrameTruth index_truth(const std::vector<GroundTruthFrame>& truth) {
  FrameTruth out;
  for (const auto& f : truth) out[f.frame_id] = &f;
  return out;
}

}  // namespace

double interpolated_ap(const std::vector<char>& tp, std::size_t positives) {
  if (positives == 0) return 0.0;
  const std::size_t n = tp.size();
  std::vector<double> recall(n), precision(n);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    hits += tp[i] ? 1u : 0u;
    recall[i] = static_cast<double>(hits) / static_cast<double>(positives);
    precision[i] = static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  // Monotone envelope from the right, then sum over recall increments.
  for (std::size_t i = n; i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (recall[i] > prev_recall) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

ApResult average_precision(const std::vector<Detection>& detections, const std::vector<GroundTruthFrame>& truth,
                           const MatchOptions& opts) {
  ApResult result;
  const FrameTruth by_frame = index_truth(truth);

  for (std::size_t cls = 0; cls < kNumForeground; ++cls) {
    const ClassId c = class_at(cls);
    std::size_t positives = 0;
    for (const auto& f : truth)
      for (const auto& o : f.objects)
        if (o.cls == c && (opts.include_occluded || !o.occluded)) ++positives;
    result.gt_count[cls] = positives;

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < detections.size(); ++i)
      if (detections[i].cls == c) order.push_back(i);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return detections[a].score() > detections[b].score();
    });

    std::map<std::pair<int, std::size_t>, bool> claimed;
    std::vector<char> tp_by_rank;
    std::vector<double> scores;
    for (std::size_t idx : order) {
      const Detection& d = detections[idx];
      const auto it = by_frame.find(d.frame);
      double best_care = -1.0, best_ignore = -1.0;
      std::size_t care_obj = 0;
      if (it != by_frame.end()) {
        const auto& objects = it->second->objects;
        for (std::size_t k = 0; k < objects.size(); ++k) {
          if (objects[k].cls != c || claimed.count({d.frame, k})) continue;
          const double o = iou(d.box, objects[k].box);
          if (o < opts.iou_threshold) continue;
          const bool ignored = !opts.include_occluded && objects[k].occluded;
          if (ignored) {
            best_ignore = std::max(best_ignore, o);
          } else if (o > best_care) {
            best_care = o;
            care_obj = k;
          }
        }
      }
      if (best_care >= 0.0) {
        claimed[{d.frame, care_obj}] = true;
        tp_by_rank.push_back(1);
      } else if (best_ignore >= 0.0) {
        continue;  // matches a don't-care object
      } else {
        tp_by_rank.push_back(0);
      }
      scores.push_back(d.score());
    }

    std::size_t hits = 0;
    for (std::size_t i = 0; i < tp_by_rank.size(); ++i) {
      hits += tp_by_rank[i] ? 1u : 0u;
      result.curves[cls].push_back(
          {scores[i], static_cast<double>(hits) / static_cast<double>(i + 1),
           positives ? static_cast<double>(hits) / static_cast<double>(positives) : 0.0});
    }
    result.true_positives[cls] = hits;
    if (positives > 0) result.ap[cls] = interpolated_ap(tp_by_rank, positives);
  }

  double sum = 0.0;
  std::size_t defined = 0, total_gt = 0, total_tp = 0;
  for (std::size_t cls = 0; cls < kNumForeground; ++cls) {
    total_gt += result.gt_count[cls];
    total_tp += result.true_positives[cls];
    if (result.ap[cls]) {
      sum += *result.ap[cls];
      ++defined;
    }
  }
  if (defined > 0) result.map = sum / static_cast<double>(defined);
  result.recall = total_gt ? static_cast<double>(total_tp) / static_cast<double>(total_gt) : 0.0;
  return result;
}

Eigen::Matrix<double, 5, 6> ConfusionCounts::row_normalized() const {
  Eigen::Matrix<double, 5, 6> out = counts;
  for (int r = 0; r < 5; ++r) {
    const double s = out.row(r).sum();
    if (s > 0.0) out.row(r) /= s;
  }
  return out;
}

ConfusionCounts confusion_matrix(const std::vector<Detection>& detections, const std::vector<GroundTruthFrame>& truth,
                                 const MatchOptions& opts) {
  ConfusionCounts out;
  std::map<int, std::vector<const Detection*>> dets_by_frame;
  for (const auto& d : detections) dets_by_frame[d.frame].push_back(&d);
  std::set<int> frames;
  for (const auto& f : truth) frames.insert(f.frame_id);
  for (const auto& [f, _] : dets_by_frame) frames.insert(f);
  const FrameTruth by_frame = index_truth(truth);

  for (int frame : frames) {
    std::vector<const GroundTruthObject*> objects;
    if (const auto it = by_frame.find(frame); it != by_frame.end())
      for (const auto& o : it->second->objects)
        if (opts.include_occluded || !o.occluded) objects.push_back(&o);
    const auto dit = dets_by_frame.find(frame);
    const std::vector<const Detection*> dets = dit == dets_by_frame.end() ? std::vector<const Detection*>{} : dit->second;

    Eigen::MatrixXd cost(static_cast<Eigen::Index>(objects.size()), static_cast<Eigen::Index>(dets.size()));
    for (std::size_t i = 0; i < objects.size(); ++i)
      for (std::size_t j = 0; j < dets.size(); ++j)
        cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = 1.0 - iou(objects[i]->box, dets[j]->box);
    const Assignment a = solve_assignment(cost);

    std::vector<char> det_used(dets.size(), 0);
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const int row = static_cast<int>(index_of(objects[i]->cls));
      const int j = a.row_to_col[i];
      if (j >= 0 && iou(objects[i]->box, dets[static_cast<std::size_t>(j)]->box) >= opts.iou_threshold) {
        det_used[static_cast<std::size_t>(j)] = 1;
        out.counts(row, static_cast<int>(index_of(dets[static_cast<std::size_t>(j)]->cls))) += 1.0;
      } else {
        out.counts(row, 5) += 1.0;
      }
    }
    for (char used : det_used) out.unmatched_detections += used ? 0u : 1u;
  }
  return out;
}

MotResult clear_mot(const std::vector<TrackRecord>& tracks, const std::vector<GroundTruthFrame>& truth,
                    const MotOptions& opts) {
  MotResult r;
  std::map<int, std::vector<const TrackRecord*>> hyps_by_frame;
  for (const auto& t : tracks)
    if (!opts.ignore_out_of_fov || t.in_fov) hyps_by_frame[t.frame].push_back(&t);
  std::set<int> frames;
  for (const auto& f : truth) frames.insert(f.frame_id);
  for (const auto& [f, _] : hyps_by_frame) frames.insert(f);
  const FrameTruth by_frame = index_truth(truth);

  std::unordered_map<int, int> last_match;  // person id -> track id
  double total_dist = 0.0;
  for (int frame : frames) {
    std::vector<const GroundTruthObject*> objects;
    if (const auto it = by_frame.find(frame); it != by_frame.end())
      for (const auto& o : it->second->objects)
        if (opts.include_occluded || !o.occluded) objects.push_back(&o);
    const auto hit = hyps_by_frame.find(frame);
    const std::vector<const TrackRecord*> hyps = hit == hyps_by_frame.end() ? std::vector<const TrackRecord*>{} : hit->second;
    r.gt_objects += objects.size();

    std::vector<int> obj_match(objects.size(), -1);
    std::vector<char> hyp_used(hyps.size(), 0);
    auto dist = [&](std::size_t i, std::size_t j) { return (objects[i]->position - hyps[j]->position).norm(); };

    // Keep correspondences that are still valid.
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const auto prev = last_match.find(objects[i]->person_id);
      if (prev == last_match.end()) continue;
      for (std::size_t j = 0; j < hyps.size(); ++j) {
        if (hyp_used[j] || hyps[j]->track_id != prev->second) continue;
        if (dist(i, j) <= opts.match_dist) {
          obj_match[i] = static_cast<int>(j);
          hyp_used[j] = 1;
        }
        break;
      }
    }

    std::vector<std::size_t> free_obj, free_hyp;
    for (std::size_t i = 0; i < objects.size(); ++i)
      if (obj_match[i] < 0) free_obj.push_back(i);
    for (std::size_t j = 0; j < hyps.size(); ++j)
      if (!hyp_used[j]) free_hyp.push_back(j);
    if (!free_obj.empty() && !free_hyp.empty()) {
      const double big = opts.match_dist * 1e3 + 1e3;
      Eigen::MatrixXd cost(static_cast<Eigen::Index>(free_obj.size()), static_cast<Eigen::Index>(free_hyp.size()));
      for (std::size_t a = 0; a < free_obj.size(); ++a)
        for (std::size_t b = 0; b < free_hyp.size(); ++b) {
          const double d = dist(free_obj[a], free_hyp[b]);
          cost(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = d <= opts.match_dist ? d : big;
        }
      const Assignment asg = solve_assignment(cost);
      for (std::size_t a = 0; a < free_obj.size(); ++a) {
        const int b = asg.row_to_col[a];
        if (b < 0) continue;
        const std::size_t i = free_obj[a], j = free_hyp[static_cast<std::size_t>(b)];
        if (dist(i, j) > opts.match_dist) continue;
        const auto prev = last_match.find(objects[i]->person_id);
        if (prev != last_match.end() && prev->second != hyps[j]->track_id) ++r.mismatches;
        obj_match[i] = static_cast<int>(j);
        hyp_used[j] = 1;
      }
    }

    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (obj_match[i] < 0) {
        ++r.misses;
        continue;
      }
      const auto j = static_cast<std::size_t>(obj_match[i]);
      ++r.matches;
      total_dist += dist(i, j);
      last_match[objects[i]->person_id] = hyps[j]->track_id;
    }
    for (char used : hyp_used) r.false_positives += used ? 0u : 1u;
  }

  r.motp = r.matches ? total_dist / static_cast<double>(r.matches) : 0.0;
  const double errors = static_cast<double>(r.misses + r.false_positives + r.mismatches);
  r.mota = 1.0 - errors / static_cast<double>(std::max<std::size_t>(r.gt_objects, 1));
  return r;
}

void write_report_text(std::ostream& os, const MetricReport& report) {
  const auto old = os.flags();
  os << std::fixed << std::setprecision(4);
  if (report.detection) {
    const auto& d = *report.detection;
    os << "detection (AP at IoU threshold)\n";
    for (std::size_t c = 0; c < kNumForeground; ++c) {
      os << "  " << std::left << std::setw(16) << class_name(class_at(c)) << std::right;
      if (d.ap[c]) {
        os << *d.ap[c];
      } else {
        os << "n/a";
      }
      os << "  (gt " << d.gt_count[c] << ", tp " << d.true_positives[c] << ")\n";
    }
    os << "  MAP " << (d.map ? *d.map : 0.0) << (d.map ? "" : " (undefined)") << "\n";
    os << "  recall " << d.recall << "\n";
  }
  if (report.confusion) {
    os << "confusion (rows true, columns predicted + missed)\n";
    const auto& m = report.confusion->counts;
    for (int r = 0; r < 5; ++r) {
      os << "  " << std::left << std::setw(16) << class_name(class_at(static_cast<std::size_t>(r))) << std::right;
      for (int c = 0; c < 6; ++c) os << std::setw(8) << std::setprecision(0) << m(r, c);
      os << std::setprecision(4) << "\n";
    }
    os << "  unmatched detections " << report.confusion->unmatched_detections << "\n";
  }
  if (report.tracking) {
    const auto& t = *report.tracking;
    os << "tracking (CLEAR MOT)\n"
       << "  MOTA " << t.mota << "\n"
       << "  MOTP " << t.motp << " m\n"
       << "  objects " << t.gt_objects << ", matches " << t.matches << ", misses " << t.misses
       << ", false positives " << t.false_positives << ", mismatches " << t.mismatches << "\n";
  }
  os.flags(old);
}

std::string report_json(const MetricReport& report) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  if (report.detection) {
    const auto& d = *report.detection;
    nlohmann::ordered_json ap = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < kNumForeground; ++c) {
      const std::string name(class_name(class_at(c)));
      ap[name] = d.ap[c] ? nlohmann::ordered_json(*d.ap[c]) : nlohmann::ordered_json(nullptr);
    }
    j["detection"] = {{"ap", ap},
                      {"map", d.map ? nlohmann::ordered_json(*d.map) : nlohmann::ordered_json(nullptr)},
                      {"recall", d.recall},
                      {"gt_count", d.gt_count},
                      {"true_positives", d.true_positives}};
  }
  if (report.confusion) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (int r = 0; r < 5; ++r) {
      std::vector<double> row;
      for (int c = 0; c < 6; ++c) row.push_back(report.confusion->counts(r, c));
      rows.push_back(row);
    }
    j["confusion"] = {{"rows", rows}, {"unmatched_detections", report.confusion->unmatched_detections}};
  }
  if (report.tracking) {
    const auto& t = *report.tracking;
    j["tracking"] = {{"mota", t.mota},     {"motp", t.motp},       {"gt_objects", t.gt_objects},
                     {"matches", t.matches}, {"misses", t.misses}, {"false_positives", t.false_positives},
                     {"mismatches", t.mismatches}};
  }
  return j.dump(2);
}

void write_pr_csv(std::ostream& os, const ApResult& ap) {
  const auto old = os.precision(10);
  os << "class,score,precision,recall\n";
  for (std::size_t c = 0; c < kNumForeground; ++c)
    for (const auto& p : ap.curves[c])
      os << class_name(class_at(c)) << ',' << p.score << ',' << p.precision << ',' << p.recall << '\n';
  os.precision(old);
}

}  // namespace mobility
