#ifndef MOBILITY_CLASSES_HPP
#define MOBILITY_CLASSES_HPP

#include <array>
#include <cstddef>
#include <optional>
#include <string_view>

namespace mobility {

/// People categories, in the fixed order used by every score and belief
/// vector. Background is an observation outcome, never a track class.
enum class ClassId : int {
  Pedestrian = 0,
  Wheelchair = 1,
  PushWheelchair = 2,
  Crutches = 3,
  Walker = 4,
  Background = 5,
};

inline constexpr std::size_t kNumForeground = 5;
inline constexpr std::size_t kNumCategories = 6;

inline constexpr std::size_t index_of(ClassId c) { return static_cast<std::size_t>(c); }
inline constexpr ClassId class_at(std::size_t i) { return static_cast<ClassId>(static_cast<int>(i)); }
inline constexpr bool is_foreground(ClassId c) { return c != ClassId::Background; }

std::string_view class_name(ClassId c);
std::optional<ClassId> parse_class(std::string_view name);

/// Classifier output over the six categories (five classes + background).
using ScoreVector = std::array<double, kNumCategories>;

/// True if every entry lies in [0, 1] and the entries sum to one within tol.
bool is_valid_score_vector(const ScoreVector& s, double tol = 1e-6);

/// Index of the largest entry; the lowest index wins on exact ties.
std::size_t argmax(const ScoreVector& s);

}  // namespace mobility

#endif  // MOBILITY_CLASSES_HPP
