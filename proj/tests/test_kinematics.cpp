#include <doctest.h>

#include <Eigen/Geometry>

#include "egovol/grasps.hpp"
#include "egovol/kinematics.hpp"
#include "egovol/synthesis.hpp"

using namespace egovol;

namespace {

ArmHandPose zero_pose() {
  ArmHandPose p;
  p.theta = Eigen::VectorXd::Zero(kArmDof);
  p.phi = Eigen::VectorXd::Zero(kHandDof);
  return p;
}

ArmHandPose random_pose(const KinematicChain& chain, Rng& rng) {
  ArmHandPose p = zero_pose();
  for (int i = 0; i < kArmDof; ++i)
    p.theta[i] = rng.uniform(chain.lo[i], chain.hi[i]);
  for (int i = 0; i < kHandDof; ++i)
    p.phi[i] = rng.uniform(chain.lo[kArmDof + i], chain.hi[kArmDof + i]);
  return p;
}

RigidTransform random_rigid(Rng& rng) {
  const Eigen::Vector3d axis =
      Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
  RigidTransform t(Eigen::AngleAxisd(rng.uniform(-3.0, 3.0), axis));
  t.translation() = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  return t;
}

const BodyDimensions kDims{};

}  // namespace

TEST_SUITE("kinematics") {

TEST_CASE("is_rigid accepts rotations and rejects scalings") {
  CHECK(is_rigid(RigidTransform::Identity()));
  RigidTransform r(Eigen::AngleAxisd(0.7, Vec3::UnitY()));
  r.translation() = Vec3(1, 2, 3);
  CHECK(is_rigid(r));
  RigidTransform s = RigidTransform::Identity();
  s.linear() *= 1.01;
  CHECK_FALSE(is_rigid(s));
}

TEST_CASE("zero angles reproduce the rest geometry") {
  const KinematicChain chain = build_arm_chain();
  const FkResult fk = forward_kinematics(chain, zero_pose(),
                                         RigidTransform::Identity(), false);
  const double L1 = kDims.upper_arm_len, L2 = kDims.forearm_len;
  CHECK((fk.keypoints.col(kKpElbow) - Vec3(0, 0, L1)).norm() < 1e-12);
  CHECK((fk.keypoints.col(kKpWrist) - Vec3(0, 0, L1 + L2)).norm() < 1e-12);
  // index finger chains straight along +z from its mcp
  const Vec3 mcp = fk.keypoints.col(kp_mcp(1));
  CHECK((mcp - Vec3(-0.027, 0, L1 + L2 + 0.10)).norm() < 1e-12);
  const Vec3 pip = fk.keypoints.col(kp_pip(1));
  CHECK((pip - (mcp + Vec3(0, 0, 0.045))).norm() < 1e-12);
}

TEST_CASE("keypoints on one rigid segment keep their distances") {
  const KinematicChain chain = build_arm_chain();
  const FkResult rest = forward_kinematics(chain, zero_pose(),
                                           RigidTransform::Identity(), false);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const ArmHandPose pose = random_pose(chain, rng);
    const FkResult fk =
        forward_kinematics(chain, pose, random_rigid(rng), false);
    for (int f = 0; f < kFingerCount; ++f) {
      // dip and tip share the distal segment
      const double d = (fk.keypoints.col(kp_dip(f)) - fk.keypoints.col(kp_tip(f))).norm();
      const double d0 =
          (rest.keypoints.col(kp_dip(f)) - rest.keypoints.col(kp_tip(f))).norm();
      CHECK(std::abs(d - d0) < 1e-9);
      // wrist and each mcp joint are both rigid w.r.t. the palm
      const double w = (fk.keypoints.col(kKpWrist) - fk.keypoints.col(kp_mcp(f))).norm();
      const double w0 =
          (rest.keypoints.col(kKpWrist) - rest.keypoints.col(kp_mcp(f))).norm();
      CHECK(std::abs(w - w0) < 1e-9);
    }
  }
}

TEST_CASE("shoulder azimuth rotates the wrist about the anchor") {
  const KinematicChain chain = build_arm_chain();
  const FkResult rest = forward_kinematics(chain, zero_pose(),
                                           RigidTransform::Identity(), false);
  ArmHandPose pose = zero_pose();
  pose.theta[kShoulderYaw] = M_PI / 2.0;
  const FkResult fk =
      forward_kinematics(chain, pose, RigidTransform::Identity(), false);
  // independent check: a plain rotation matrix applied to the rest wrist
  const Eigen::Matrix3d rot =
      Eigen::AngleAxisd(M_PI / 2.0, Vec3::UnitY()).toRotationMatrix();
  const Vec3 expect = rot * rest.keypoints.col(kKpWrist);
  CHECK((fk.keypoints.col(kKpWrist) - expect).norm() < 1e-9);
  const Vec3 expect_tip = rot * rest.keypoints.col(kp_tip(2));
  CHECK((fk.keypoints.col(kp_tip(2)) - expect_tip).norm() < 1e-9);
}

TEST_CASE("extrinsics compose linearly") {
  const KinematicChain chain = build_arm_chain();
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const ArmHandPose pose = random_pose(chain, rng);
    const RigidTransform c1 = random_rigid(rng);
    const RigidTransform c2 = random_rigid(rng);
    const FkResult once = forward_kinematics(chain, pose, c2 * c1, false);
    FkResult staged = forward_kinematics(chain, pose, c1, false);
    for (int k = 0; k < kKeypointCount; ++k)
      staged.keypoints.col(k) = c2 * Vec3(staged.keypoints.col(k));
    CHECK((once.keypoints - staged.keypoints).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("mirroring negates x and flips handedness") {
  const KinematicChain chain = build_arm_chain();
  Rng rng(7);
  const ArmHandPose pose = random_pose(chain, rng);
  const ArmHandPose mirrored = mirror_pose(pose);
  CHECK(mirrored.handedness == Handedness::kLeft);
  CHECK(mirror_pose(mirrored).handedness == Handedness::kRight);

  const FkResult fk = forward_kinematics(chain, pose, default_extrinsics(), false);
  const FkResult mfk =
      forward_kinematics(chain, mirrored, default_extrinsics(), false);
  for (int k = 0; k < kKeypointCount; ++k) {
    CHECK(mfk.keypoints(0, k) == doctest::Approx(-fk.keypoints(0, k)).epsilon(1e-12));
    CHECK(mfk.keypoints(1, k) == doctest::Approx(fk.keypoints(1, k)).epsilon(1e-12));
    CHECK(mfk.keypoints(2, k) == doctest::Approx(fk.keypoints(2, k)).epsilon(1e-12));
  }

  // double mirror is the identity on keypoints
  const FkResult back =
      forward_kinematics(chain, mirror_pose(mirrored), default_extrinsics(), false);
  CHECK((back.keypoints - fk.keypoints).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("perturb with sigma zero is the identity") {
  const KinematicChain chain = build_arm_chain();
  Rng rng(8);
  ArmHandPose pose = zero_pose();
  pose.theta[kElbowFlex] = 0.8;
  const ArmHandPose out = perturb_pose(chain, pose, 0.0, rng);
  CHECK(out.theta == pose.theta);
  CHECK(out.phi == pose.phi);
  CHECK(out.handedness == pose.handedness);
}

TEST_CASE("perturbation moments match the law of large numbers") {
  const KinematicChain chain = build_arm_chain();
  ArmHandPose pose = zero_pose();
  pose.theta[kElbowFlex] = 1.2;  // keep all slots far from their limits
  const double sigma = 0.15;
  const int n = 100000;
  Rng rng(9);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(kArmDof);
  Eigen::VectorXd sum2 = Eigen::VectorXd::Zero(kArmDof);
  for (int i = 0; i < n; ++i) {
    const ArmHandPose p = perturb_pose(chain, pose, sigma, rng);
    const Eigen::VectorXd d = p.theta - pose.theta;
    sum += d;
    sum2 += d.cwiseProduct(d);
  }
  const double mean_tol = 3.0 * sigma / std::sqrt(double(n));
  for (int i = 0; i < kArmDof; ++i) {
    const double mean = sum[i] / n;
    const double var = sum2[i] / n - mean * mean;
    CHECK(std::abs(mean) < mean_tol);
    CHECK(var == doctest::Approx(sigma * sigma).epsilon(0.05));
  }
}

TEST_CASE("perturbed angles always respect the limits") {
  const KinematicChain chain = build_arm_chain();
  Rng rng(10);
  const ArmHandPose pose = zero_pose();
  for (int i = 0; i < 2000; ++i) {
    const ArmHandPose p = perturb_pose(chain, pose, 3.0, rng);
    for (int j = 0; j < kArmDof; ++j) {
      CHECK(p.theta[j] >= chain.lo[j]);
      CHECK(p.theta[j] <= chain.hi[j]);
    }
  }
}

TEST_CASE("cloud size is invariant under pose change") {
  const KinematicChain chain = build_arm_chain({.cloud_spacing_scale = 3.0});
  Rng rng(11);
  const FkResult a =
      forward_kinematics(chain, random_pose(chain, rng), default_extrinsics());
  const FkResult b =
      forward_kinematics(chain, random_pose(chain, rng), default_extrinsics());
  CHECK(a.cloud.cols() == b.cloud.cols());
  CHECK(a.cloud.cols() == chain.cloud_size());
}

TEST_CASE("attached objects follow the palm") {
  const KinematicChain chain = build_arm_chain({.cloud_spacing_scale = 3.0});
  const GraspLibrary lib = GraspLibrary::builtin(chain, 3.0);
  const Grasp* with_object = nullptr;
  for (const auto& g : lib.grasps)
    if (g.object_id >= 0) {
      with_object = &g;
      break;
    }
  REQUIRE(with_object != nullptr);
  ArmHandPose pose{with_object->base_theta, with_object->phi, with_object->id,
                   with_object->object_id, Handedness::kRight};
  const ObjectModel* obj = lib.object_for(*with_object);
  const FkResult with =
      forward_kinematics(chain, pose, default_extrinsics(), true, obj);
  const FkResult without =
      forward_kinematics(chain, pose, default_extrinsics(), true, nullptr);
  CHECK(with.cloud.cols() == without.cloud.cols() + obj->cloud.cols());
  // every object point stays near the wrist
  const Vec3 wrist = with.keypoints.col(kKpWrist);
  for (Eigen::Index i = without.cloud.cols(); i < with.cloud.cols(); ++i) {
    const Vec3 p = with.cloud.col(i).cast<double>();
    CHECK((p - wrist).norm() < 0.45);
  }
}

TEST_CASE("pose dimension mismatch is structural") {
  const KinematicChain chain = build_arm_chain();
  ArmHandPose bad = zero_pose();
  bad.theta = Eigen::VectorXd::Zero(3);
  CHECK_THROWS_AS(
      forward_kinematics(chain, bad, RigidTransform::Identity(), false),
      StructuralError);
}

TEST_CASE("every builtin grasp is fully visible at sigma zero") {
  const KinematicChain chain = build_arm_chain({.cloud_spacing_scale = 3.0});
  const GraspLibrary lib = GraspLibrary::builtin(chain, 3.0);
  REQUIRE(lib.grasps.size() >= 20);
  const CameraModel cam;
  for (const auto& g : lib.grasps) {
    ArmHandPose pose{g.base_theta, g.phi, g.id, g.object_id, Handedness::kRight};
    const FkResult fk = forward_kinematics(chain, pose, default_extrinsics(), false);
    CHECK(visibility_fraction(cam, fk.keypoints) == 1.0);
    // limits hold, so sigma-zero perturbation cannot clamp anything
    for (int i = 0; i < kArmDof; ++i) {
      CHECK(g.base_theta[i] >= chain.lo[i]);
      CHECK(g.base_theta[i] <= chain.hi[i]);
    }
  }
}

TEST_CASE("reach_angles places the wrist on the target") {
  const double L1 = kDims.upper_arm_len, L2 = kDims.forearm_len;
  const KinematicChain chain = build_arm_chain();
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const Vec3 target(rng.uniform(-0.35, 0.2), rng.uniform(-0.2, 0.35),
                      rng.uniform(0.15, 0.5));
    const Eigen::Vector3d ypf = reach_angles(L1, L2, target);
    ArmHandPose pose = zero_pose();
    pose.theta[kShoulderYaw] = ypf[0];
    pose.theta[kShoulderPitch] = ypf[1];
    pose.theta[kElbowFlex] = ypf[2];
    const FkResult fk =
        forward_kinematics(chain, pose, RigidTransform::Identity(), false);
    const double rmin = std::sqrt(L1 * L1 + L2 * L2 -
                                  2 * L1 * L2 * std::cos(35.0 * M_PI / 180.0));
    const double r = target.norm();
    const Vec3 clamped =
        target.normalized() * std::clamp(r, rmin, 0.98 * (L1 + L2));
    CHECK((fk.keypoints.col(kKpWrist) - clamped).norm() < 1e-9);
    CHECK(ypf[2] >= 0.0);
    CHECK(ypf[2] <= 150.0 * M_PI / 180.0 + 1e-9);
  }
}

}  // TEST_SUITE
