#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <vector>

#include "egovol/camera.hpp"
#include "egovol/common.hpp"
#include "egovol/rng.hpp"
#include "egovol/shapes.hpp"

namespace egovol {

using RigidTransform = Eigen::Isometry3d;

// Orthonormal rotation block (R^T R = I, det = +1) within tol.
bool is_rigid(const RigidTransform& t, double tol = 1e-9);

inline RigidTransform translate(double x, double y, double z) {
  RigidTransform t = RigidTransform::Identity();
  t.translation() = Vec3(x, y, z);
  return t;
}

enum class Handedness : std::uint8_t { kRight = 0, kLeft = 1 };

constexpr int kArmDof = 7;    // shoulder roll/yaw/pitch, elbow flex/pron, wrist flex/dev
constexpr int kHandDof = 20;  // per finger: abduction, mcp, pip, dip
constexpr int kKeypointCount = 22;
constexpr int kFingerCount = 5;

// Arm angle slots. Camera frame: x right, y down, z forward. Yaw is the
// azimuth (about y), pitch the elevation (about x, positive raises the arm).
enum ArmSlot {
  kShoulderRoll = 0,
  kShoulderYaw = 1,
  kShoulderPitch = 2,
  kElbowFlex = 3,
  kElbowPronation = 4,
  kWristFlex = 5,
  kWristDeviation = 6,
};

// Keypoint layout: elbow, wrist, then (mcp, pip, dip) per finger, then tips.
enum KeypointIndex {
  kKpElbow = 0,
  kKpWrist = 1,
  kKpMcpBase = 2,   // mcp of finger f at 2 + 3f
  kKpTipBase = 17,  // tip of finger f at 17 + f
};
inline int kp_mcp(int finger) { return kKpMcpBase + 3 * finger; }
inline int kp_pip(int finger) { return kKpMcpBase + 3 * finger + 1; }
inline int kp_dip(int finger) { return kKpMcpBase + 3 * finger + 2; }
inline int kp_tip(int finger) { return kKpTipBase + finger; }

struct ArmHandPose {
  Eigen::VectorXd theta;  // kArmDof entries, radians
  Eigen::VectorXd phi;    // kHandDof entries, radians
  int grasp_id = 0;
  int object_id = -1;  // -1: no attached object
  Handedness handedness = Handedness::kRight;
};

// One rotational degree of freedom: rotation about `axis` by the combined
// angle vector entry `slot` ([theta; phi] order), clamped to [lo, hi].
struct JointDof {
  int slot = 0;
  Vec3 axis{0, 0, 1};
  double lo = 0.0;
  double hi = 0.0;
};

// Rigid body in the chain. Its frame is parent * offset * joint rotations;
// shapes and keypoints live in the post-rotation frame.
struct Segment {
  int parent = -1;
  RigidTransform offset = RigidTransform::Identity();
  std::vector<JointDof> dofs;
  std::vector<Shape> shapes;
  std::vector<std::pair<int, Vec3>> keypoints;  // keypoint index -> local pos
  Eigen::Matrix3Xf cloud;  // surface samples, sampled once at build time
};

constexpr int kPalmSegment = 2;

// Primitive stand-in for a manipulated object; rigidly follows the palm.
struct ObjectModel {
  int id = -1;
  std::string name;
  Shape shape;
  RigidTransform attach = RigidTransform::Identity();  // palm frame -> object
  Eigen::Matrix3Xf cloud;  // samples in the object frame
};

// Articulated right arm + hand. Segments are ordered parent-before-child and
// the whole structure is immutable after build, so chains can be shared
// freely across threads.
struct KinematicChain {
  std::vector<Segment> segments;
  Eigen::VectorXd lo;  // per-slot limits, kArmDof + kHandDof entries
  Eigen::VectorXd hi;

  Eigen::Index cloud_size() const;
  Eigen::VectorXd clamp_angles(const Eigen::VectorXd& x) const;
};

struct BodyDimensions {
  double upper_arm_len = 0.28;
  double upper_arm_r = 0.045;
  double forearm_len = 0.26;
  double forearm_r = 0.037;
  Vec3 palm_half{0.045, 0.015, 0.05};
  // Per-segment sample spacings, meters. Chosen so each body part meets the
  // target density at the nearest distance it plausibly reaches; scale all
  // of them with cloud_spacing_scale for speed/quality trade-offs.
  double arm_spacing = 1.1e-3;
  double forearm_spacing = 0.9e-3;
  double hand_spacing = 0.55e-3;
  double cloud_spacing_scale = 1.0;
};

KinematicChain build_arm_chain(const BodyDimensions& dims = {});

struct FkResult {
  Eigen::Matrix<double, 3, kKeypointCount> keypoints;  // camera coords, m
  Eigen::Matrix3Xf cloud;
};

// Maps every chain-local point into camera coordinates through the composed
// joint transforms, then `extrinsics`. Left-handed poses are the x-mirrored
// image of the right-handed model (reflection about the camera's vertical
// plane), applied to the final camera-space points. An attached object's
// cloud rigidly follows the palm frame.
FkResult forward_kinematics(const KinematicChain& chain,
                            const ArmHandPose& pose,
                            const RigidTransform& extrinsics,
                            bool with_cloud = true,
                            const ObjectModel* object = nullptr);

// Gaussian noise on the arm angles only, clamped to the chain's limits; the
// grasp-defining hand angles pass through untouched.
ArmHandPose perturb_pose(const KinematicChain& chain, const ArmHandPose& pose,
                         double sigma, Rng& rng);

// Flips handedness; forward kinematics of the result is the x-negated image
// of the original. Involution.
ArmHandPose mirror_pose(const ArmHandPose& pose);

// Default chest-mount: shoulder anchor 20 cm to the right of and 15 cm
// above the camera origin (left arms come out of mirroring, not extrinsics).
inline RigidTransform default_extrinsics() { return translate(0.20, -0.15, 0.0); }

}  // namespace egovol
