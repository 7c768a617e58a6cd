#pragma once

#include <optional>
#include <string>
#include <vector>

#include "egovol/camera.hpp"
#include "egovol/depth_map.hpp"
#include "egovol/grasps.hpp"
#include "egovol/kinematics.hpp"
#include "egovol/rng.hpp"

namespace egovol {

struct ExemplarArm {
  int grasp_id = 0;
  Handedness handedness = Handedness::kRight;
  Eigen::Matrix<float, 3, kKeypointCount> kp3;  // camera coords, meters
  Eigen::Matrix<float, 2, kKeypointCount> kp2;  // pixels; NaN where z <= 0
};

// One labeled synthetic frame. Two-arm records keep the right arm first.
// class_label is assigned by clustering later and never serialized.
struct ExemplarRecord {
  std::vector<ExemplarArm> arms;
  std::uint64_t seed = 0;
  DepthMap depth;
  std::optional<int> class_label;

  int arm_count() const { return static_cast<int>(arms.size()); }
};

// Minimum radial distance per pixel over all cloud points projecting into
// it; points behind the camera are dropped. Pixels nobody hits stay at
// kNoMeasurement.
DepthMap raycast_depth(const CameraModel& cam, const Eigen::Matrix3Xf& cloud);

// Fraction of the 22 keypoints that are in front of the camera and project
// inside [0, width) x [0, height).
double visibility_fraction(const CameraModel& cam,
                           const Eigen::Matrix<double, 3, kKeypointCount>& kp);

constexpr double kVisibilityThreshold = 0.9;

struct SynthesisContext {
  CameraModel cam;
  const KinematicChain* chain = nullptr;
  const GraspLibrary* library = nullptr;
  RigidTransform extrinsics = default_extrinsics();
};

// Perturb, pose, check visibility, ray-cast. nullopt means the draw was
// rejected and the caller should redraw; the rng has still advanced.
std::optional<ExemplarRecord> sample_exemplar(
    const SynthesisContext& ctx, int grasp_id, double sigma, Rng& rng,
    Handedness handedness = Handedness::kRight);

// Merges two single-arm records of opposite handedness when their depth
// maps are compatible: wherever both have measurements, the gap must exceed
// delta. Occlusion resolves by per-pixel min. nullopt = incompatible.
std::optional<ExemplarRecord> pair_arms(const ExemplarRecord& a,
                                        const ExemplarRecord& b, double delta);

// Per-pixel min with missing values treated as infinitely far.
DepthMap composite_background(const DepthMap& fore, const DepthMap& back);

// Clutter behind the workspace: 1-3 tilted planes at 0.8-3 m plus 0-5 boxes
// at 0.8-2.5 m, rendered analytically. Also accepts imported depth maps.
struct BackgroundPool {
  std::vector<DepthMap> maps;

  static BackgroundPool procedural(const CameraModel& cam, int count,
                                   std::uint64_t seed);
  static BackgroundPool from_file(const std::string& path,
                                  const CameraModel& cam);

  const DepthMap& pick(Rng& rng) const {
    return maps[rng.uniform_int(maps.size())];
  }
};

struct GenerateConfig {
  std::uint64_t n = 1000;
  double sigma = 0.15;
  double pair_rate = 0.25;
  double delta = 0.02;
  std::uint64_t seed = 1;
  int background_count = 32;      // procedural pool size; 0 disables
  std::string background_file;    // EGOV file to draw backgrounds from
  double depth_noise_sigma = 0.0; // additive Gaussian depth noise, meters
  std::vector<int> grasp_ids;     // empty = every grasp in the library
  int threads = 0;
  // When non-empty, stamped into the file header instead of the hash of
  // this struct (the pipeline scopes hashes per stage).
  std::string config_hash_override;
};

// Fully determined by (config, seed) regardless of thread count.
ExemplarRecord make_record(const SynthesisContext& ctx,
                           const GenerateConfig& cfg,
                           const BackgroundPool* pool, std::uint64_t seed);

struct GenerateStats {
  std::uint64_t records = 0;
  std::uint64_t two_arm = 0;
};

// Streams records to an EGOV dataset file in index order; workers own
// per-record rng streams so generation parallelizes without changing bytes.
GenerateStats generate_dataset(const SynthesisContext& ctx,
                               const GenerateConfig& cfg,
                               const std::string& out_path);

}  // namespace egovol
