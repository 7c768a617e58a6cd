#include "egovol/kinematics.hpp"

#include <cmath>

namespace egovol {

namespace {

constexpr double kDeg = 3.14159265358979323846 / 180.0;

JointDof dof(int slot, const Vec3& axis, double lo_deg, double hi_deg) {
  return {slot, axis, lo_deg * kDeg, hi_deg * kDeg};
}

int phi_slot(int finger, int j) { return kArmDof + 4 * finger + j; }

}  // namespace

bool is_rigid(const RigidTransform& t, double tol) {
  const Eigen::Matrix3d r = t.linear();
  if (((r.transpose() * r) - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() >
      tol)
    return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

Eigen::Index KinematicChain::cloud_size() const {
  Eigen::Index n = 0;
  for (const auto& s : segments) n += s.cloud.cols();
  return n;
}

Eigen::VectorXd KinematicChain::clamp_angles(const Eigen::VectorXd& x) const {
  return x.cwiseMax(lo).cwiseMin(hi);
}

KinematicChain build_arm_chain(const BodyDimensions& d) {
  KinematicChain chain;
  chain.lo.resize(kArmDof + kHandDof);
  chain.hi.resize(kArmDof + kHandDof);

  const double scale = d.cloud_spacing_scale;

  auto add_segment = [&](Segment seg, double spacing) {
    seg.cloud = sample_surface(seg.shapes, spacing * scale);
    for (const auto& j : seg.dofs) {
      chain.lo[j.slot] = j.lo;
      chain.hi[j.slot] = j.hi;
    }
    chain.segments.push_back(std::move(seg));
    return static_cast<int>(chain.segments.size()) - 1;
  };

  // Upper arm, rooted at the shoulder anchor. Intrinsic Z-Y-X shoulder.
  Segment upper;
  upper.parent = -1;
  upper.dofs = {dof(kShoulderRoll, Vec3::UnitZ(), -90, 90),
                dof(kShoulderYaw, Vec3::UnitY(), -100, 100),
                dof(kShoulderPitch, Vec3::UnitX(), -100, 100)};
  upper.shapes = {Shape::capsule({0, 0, 0}, {0, 0, d.upper_arm_len},
                                 d.upper_arm_r)};
  const int upper_idx = add_segment(std::move(upper), d.arm_spacing);

  Segment forearm;
  forearm.parent = upper_idx;
  forearm.offset = translate(0, 0, d.upper_arm_len);
  forearm.dofs = {dof(kElbowFlex, Vec3::UnitX(), 0, 150),
                  dof(kElbowPronation, Vec3::UnitZ(), -90, 90)};
  forearm.shapes = {Shape::capsule({0, 0, 0}, {0, 0, d.forearm_len},
                                   d.forearm_r)};
  forearm.keypoints = {{kKpElbow, {0, 0, 0}}};
  const int forearm_idx = add_segment(std::move(forearm), d.forearm_spacing);

  // Palm: fingers run along +z at rest, palm normal is -y, thumb on the -x
  // side (right hand).
  Segment palm;
  palm.parent = forearm_idx;
  palm.offset = translate(0, 0, d.forearm_len);
  palm.dofs = {dof(kWristFlex, Vec3::UnitX(), -80, 80),
               dof(kWristDeviation, Vec3::UnitY(), -80, 80)};
  palm.shapes = {Shape::box({0, 0, d.palm_half.z()}, d.palm_half)};
  palm.keypoints = {{kKpWrist, {0, 0, 0}}};
  add_segment(std::move(palm), d.hand_spacing);

  // Fingers: thumb, index, middle, ring, pinky. Segment lengths in meters;
  // abduction axes signed so positive angles spread away from the middle.
  struct FingerSpec {
    Vec3 mcp;
    double base_yaw;  // about y, radians
    double len[3];
    double r0, r1;
    double abd_sign;
  };
  const FingerSpec fingers[kFingerCount] = {
      {{-0.042, 0.0, 0.030}, -0.9, {0.045, 0.035, 0.030}, 0.011, 0.009, -1},
      {{-0.027, 0.0, 0.100}, 0.0, {0.045, 0.032, 0.030}, 0.010, 0.008, -1},
      {{-0.009, 0.0, 0.100}, 0.0, {0.050, 0.035, 0.030}, 0.010, 0.008, -1},
      {{0.009, 0.0, 0.100}, 0.0, {0.047, 0.033, 0.030}, 0.010, 0.008, 1},
      {{0.027, 0.0, 0.100}, 0.0, {0.038, 0.030, 0.030}, 0.009, 0.008, 1},
  };

  for (int f = 0; f < kFingerCount; ++f) {
    const FingerSpec& fs = fingers[f];

    Segment prox;
    prox.parent = kPalmSegment;
    prox.offset = translate(fs.mcp.x(), fs.mcp.y(), fs.mcp.z()) *
                  RigidTransform(Eigen::AngleAxisd(fs.base_yaw, Vec3::UnitY()));
    prox.dofs = {dof(phi_slot(f, 0), fs.abd_sign * Vec3::UnitY(), 0, 100),
                 dof(phi_slot(f, 1), Vec3::UnitX(), 0, 100)};
    prox.shapes = {Shape::capsule({0, 0, 0}, {0, 0, fs.len[0]}, fs.r0)};
    prox.keypoints = {{kp_mcp(f), {0, 0, 0}}};
    const int prox_idx = add_segment(std::move(prox), d.hand_spacing);

    Segment mid;
    mid.parent = prox_idx;
    mid.offset = translate(0, 0, fs.len[0]);
    mid.dofs = {dof(phi_slot(f, 2), Vec3::UnitX(), 0, 100)};
    mid.shapes = {Shape::capsule({0, 0, 0}, {0, 0, fs.len[1]},
                                 0.5 * (fs.r0 + fs.r1))};
    mid.keypoints = {{kp_pip(f), {0, 0, 0}}};
    const int mid_idx = add_segment(std::move(mid), d.hand_spacing);

    Segment dist;
    dist.parent = mid_idx;
    dist.offset = translate(0, 0, fs.len[1]);
    dist.dofs = {dof(phi_slot(f, 3), Vec3::UnitX(), 0, 100)};
    dist.shapes = {Shape::capsule({0, 0, 0}, {0, 0, fs.len[2]}, fs.r1)};
    dist.keypoints = {{kp_dip(f), {0, 0, 0}}, {kp_tip(f), {0, 0, fs.len[2]}}};
    add_segment(std::move(dist), d.hand_spacing);
  }

  return chain;
}

FkResult forward_kinematics(const KinematicChain& chain,
                            const ArmHandPose& pose,
                            const RigidTransform& extrinsics, bool with_cloud,
                            const ObjectModel* object) {
  if (pose.theta.size() != kArmDof || pose.phi.size() != kHandDof)
    throw StructuralError("forward_kinematics: pose dimensions do not match chain");

  Eigen::VectorXd angles(kArmDof + kHandDof);
  angles << pose.theta, pose.phi;

  std::vector<RigidTransform> world(chain.segments.size());
  for (std::size_t i = 0; i < chain.segments.size(); ++i) {
    const Segment& seg = chain.segments[i];
    RigidTransform t = seg.parent < 0 ? extrinsics * seg.offset
                                      : world[seg.parent] * seg.offset;
    for (const auto& j : seg.dofs)
      t = t * RigidTransform(Eigen::AngleAxisd(angles[j.slot], j.axis));
    world[i] = t;
  }

  FkResult out;
  for (std::size_t i = 0; i < chain.segments.size(); ++i)
    for (const auto& [idx, local] : chain.segments[i].keypoints)
      out.keypoints.col(idx) = world[i] * local;

  if (with_cloud) {
    Eigen::Index total = chain.cloud_size();
    if (object) total += object->cloud.cols();
    out.cloud.resize(3, total);
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < chain.segments.size(); ++i) {
      const auto& pts = chain.segments[i].cloud;
      if (pts.cols() == 0) continue;
      const Eigen::Matrix3f r = world[i].linear().cast<float>();
      const Eigen::Vector3f t = world[i].translation().cast<float>();
      out.cloud.middleCols(at, pts.cols()) = (r * pts).colwise() + t;
      at += pts.cols();
    }
    if (object) {
      const RigidTransform t = world[kPalmSegment] * object->attach;
      const Eigen::Matrix3f r = t.linear().cast<float>();
      const Eigen::Vector3f tr = t.translation().cast<float>();
      out.cloud.middleCols(at, object->cloud.cols()) =
          (r * object->cloud).colwise() + tr;
    }
  } else {
    out.cloud.resize(3, 0);
  }

  if (pose.handedness == Handedness::kLeft) {
    out.keypoints.row(0) = -out.keypoints.row(0);
    if (out.cloud.cols() > 0) out.cloud.row(0) = -out.cloud.row(0);
  }
  return out;
}

ArmHandPose perturb_pose(const KinematicChain& chain, const ArmHandPose& pose,
                         double sigma, Rng& rng) {
  if (pose.theta.size() != kArmDof)
    throw StructuralError("perturb_pose: arm angle count mismatch");
  ArmHandPose out = pose;
  for (int i = 0; i < kArmDof; ++i) {
    const double v = pose.theta[i] + sigma * rng.normal();
    out.theta[i] = std::min(std::max(v, chain.lo[i]), chain.hi[i]);
  }
  return out;
}

ArmHandPose mirror_pose(const ArmHandPose& pose) {
  ArmHandPose out = pose;
  out.handedness = pose.handedness == Handedness::kRight ? Handedness::kLeft
                                                         : Handedness::kRight;
  return out;
}

}  // namespace egovol
