#include "mobility/scorers.hpp"

#include <bit>
#include <cmath>
#include <random>

#include "mobility/error.hpp"

namespace mobility {

ConfusionMatrix diagonal_confusion(double diagonal) {
  ConfusionMatrix m = ConfusionMatrix::Zero();
  const double off = (1.0 - diagonal) / static_cast<double>(kNumForeground - 1);
  for (std::size_t r = 0; r < kNumForeground; ++r) {
    for (std::size_t c = 0; c < kNumForeground; ++c) m(r, c) = (r == c) ? diagonal : off;
  }
  m(5, 5) = 1.0;
  return m;
}

void validate_confusion(const ConfusionMatrix& m) {
  for (int r = 0; r < m.rows(); ++r) {
    if ((m.row(r).array() < 0.0).any() || std::abs(m.row(r).sum() - 1.0) > 1e-9)
      throw Error(ErrorCode::Configuration, "confusion matrix rows must be probability vectors");
  }
}

void MockScorer::add(int frame_id, const PixelBox& box, const ScoreVector& scores) {
  table_[{frame_id, box.u_min, box.v_min, box.u_max, box.v_max}] = scores;
}

std::vector<ScoreVector> MockScorer::score(const DepthFrame& frame, std::span<const PixelBox> boxes) {
  std::vector<ScoreVector> out;
  out.reserve(boxes.size());
  for (const auto& b : boxes) {
    const auto it = table_.find({frame.frame_id, b.u_min, b.v_min, b.u_max, b.v_max});
    if (it != table_.end()) {
      out.push_back(it->second);
    } else if (fallback_) {
      out.push_back(*fallback_);
    } else {
      throw Error(ErrorCode::Scorer, "mock scorer: no scores for box in frame " + std::to_string(frame.frame_id));
    }
  }
  return out;
}

OracleScorer::OracleScorer(const std::vector<GroundTruthFrame>& ground_truth, Config cfg) : cfg_(cfg) {
  validate_confusion(cfg_.confusion);
  for (const auto& f : ground_truth) truth_[f.frame_id] = f.objects;
}

ClassId OracleScorer::label(int frame_id, const PixelBox& box) const {
  const auto it = truth_.find(frame_id);
  if (it == truth_.end()) return ClassId::Background;
  double best = 0.0;
  ClassId cls = ClassId::Background;
  for (const auto& obj : it->second) {
    const double o = iou(box, obj.box);
    if (o > best) {
      best = o;
      cls = obj.cls;
    }
  }
  if (best > cfg_.positive_iou) return cls;
  return ClassId::Background;
}

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t box_seed(std::uint64_t seed, int frame_id, const PixelBox& b) {
  std::uint64_t h = mix(seed ^ mix(static_cast<std::uint64_t>(static_cast<std::uint32_t>(frame_id))));
  for (double v : {b.u_min, b.v_min, b.u_max, b.v_max}) h = mix(h ^ std::bit_cast<std::uint64_t>(v));
  return h;
}

double best_iou(const std::vector<GroundTruthObject>* objects, const PixelBox& box) {
  double best = 0.0;
  if (objects) {
    for (const auto& obj : *objects) best = std::max(best, iou(box, obj.box));
  }
  return best;
}

}  // namespace

std::vector<ScoreVector> OracleScorer::score(const DepthFrame& frame, std::span<const PixelBox> boxes) {
  const auto it = truth_.find(frame.frame_id);
  const std::vector<GroundTruthObject>* objects = it == truth_.end() ? nullptr : &it->second;

  std::vector<ScoreVector> out;
  out.reserve(boxes.size());
  for (const auto& box : boxes) {
    const ClassId lbl = label(frame.frame_id, box);
    const auto row = cfg_.confusion.row(static_cast<Eigen::Index>(index_of(lbl)));
    ScoreVector s{};
    if (cfg_.mode == Mode::Expected) {
      for (std::size_t k = 0; k < kNumCategories; ++k) s[k] = row(static_cast<Eigen::Index>(k));
    } else {
      std::mt19937_64 rng(box_seed(cfg_.seed, frame.frame_id, box));
      const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      std::size_t observed = kNumCategories - 1;
      double acc = 0.0;
      for (std::size_t k = 0; k < kNumCategories; ++k) {
        acc += row(static_cast<Eigen::Index>(k));
        if (r < acc) {
          observed = k;
          break;
        }
      }
      // Peak grows with how well the box fits its label.
      const double fit = best_iou(objects, box);
      const double quality = is_foreground(lbl) ? fit : 1.0 - fit;
      const double peak = 0.55 + 0.4 * quality;
      const double rest = (1.0 - peak) / static_cast<double>(kNumCategories - 1);
      s.fill(rest);
      s[observed] = peak;
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace mobility
