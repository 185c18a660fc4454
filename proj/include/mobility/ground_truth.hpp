#ifndef MOBILITY_GROUND_TRUTH_HPP
#define MOBILITY_GROUND_TRUTH_HPP

#include <vector>

#include "mobility/camera.hpp"
#include "mobility/classes.hpp"

namespace mobility {

struct GroundTruthObject {
  PixelBox box;
  ClassId cls = ClassId::Pedestrian;
  GroundPoint position = GroundPoint::Zero();  ///< world ground plane
  int person_id = 0;
  bool occluded = false;
};

struct GroundTruthFrame {
  int frame_id = 0;
  double timestamp = 0.0;
  std::vector<GroundTruthObject> objects;
};

}  // namespace mobility

#endif  // MOBILITY_GROUND_TRUTH_HPP
