#pragma once

#include <optional>
#include <string>
#include <vector>

#include "egovol/kinematics.hpp"

namespace egovol {

// Hand joint-angle configuration, optionally bound to a manipulated object,
// plus the base arm pose the grasp is anchored at. Perturbation spreads
// samples around base_theta; phi stays fixed per grasp.
struct Grasp {
  int id = 0;
  std::string name;
  Eigen::VectorXd base_theta;  // kArmDof
  Eigen::VectorXd phi;         // kHandDof
  int object_id = -1;          // index into GraspLibrary::objects, -1 = none
};

class GraspLibrary {
 public:
  std::vector<Grasp> grasps;
  std::vector<ObjectModel> objects;

  const Grasp& by_id(int id) const;
  bool has_id(int id) const;
  const ObjectModel* object_for(const Grasp& g) const {
    return g.object_id >= 0 ? &objects[g.object_id] : nullptr;
  }

  std::vector<int> all_ids() const;

  // The shipped set: 20 grasps spread over the reachable workspace, about
  // half of them holding primitive objects.
  static GraspLibrary builtin(const KinematicChain& chain,
                              double cloud_spacing_scale = 1.0);

  // Versioned JSON file (see save for the schema). Angles are clamped to
  // the chain's joint limits on load.
  static GraspLibrary load(const std::string& path,
                           const KinematicChain& chain,
                           double cloud_spacing_scale = 1.0);
  void save(const std::string& path) const;
};

// Shoulder yaw/pitch and elbow flexion placing the wrist of a two-link arm
// (upper arm len1, forearm len2) at `target` in chain-root coordinates,
// bending the elbow downward. Unreachable targets are pulled to the nearest
// reachable radius.
Eigen::Vector3d reach_angles(double len1, double len2, const Vec3& target);

}  // namespace egovol
