#include "mobility/classes.hpp"
#include "mobility/error.hpp"

#include <algorithm>
#include <cmath>

namespace mobility {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Configuration: return "configuration";
    case ErrorCode::DegenerateProjection: return "degenerate-projection";
    case ErrorCode::NothingVisible: return "nothing-visible";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::NoPlaneFound: return "no-plane-found";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::ModelDegenerate: return "model-degenerate";
    case ErrorCode::Scorer: return "scorer";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

namespace {
constexpr std::array<std::string_view, kNumCategories> kNames = {
    "pedestrian", "wheelchair", "push_wheelchair", "crutches", "walker", "background"};
}

std::string_view class_name(ClassId c) { return kNames.at(index_of(c)); }

std::optional<ClassId> parse_class(std::string_view name) {
  for (std::size_t i = 0; i < kNames.size(); ++i) {
    if (kNames[i] == name) return class_at(i);
  }
  return std::nullopt;
}

bool is_valid_score_vector(const ScoreVector& s, double tol) {
  double sum = 0.0;
  for (double v : s) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

std::size_t argmax(const ScoreVector& s) {
  return static_cast<std::size_t>(std::max_element(s.begin(), s.end()) - s.begin());
}

}  // namespace mobility
