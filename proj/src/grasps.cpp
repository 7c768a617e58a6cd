#include "egovol/grasps.hpp"

#include <array>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace egovol {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDeg = kPi / 180.0;
constexpr double kObjectSpacing = 0.6e-3;

using FingerAngles = std::array<double, 4>;  // abd, mcp, pip, dip (degrees)
using HandShape = std::array<FingerAngles, kFingerCount>;

Eigen::VectorXd hand_phi(const HandShape& h) {
  Eigen::VectorXd phi(kHandDof);
  for (int f = 0; f < kFingerCount; ++f)
    for (int j = 0; j < 4; ++j) phi[4 * f + j] = h[f][j] * kDeg;
  return phi;
}

// thumb, index, middle, ring, pinky
const HandShape kOpen = {{{10, 10, 5, 5}, {6, 4, 3, 2}, {1, 3, 3, 2}, {5, 4, 3, 2}, {9, 5, 3, 2}}};
const HandShape kFist = {{{18, 45, 58, 50}, {2, 85, 95, 60}, {1, 88, 96, 62}, {2, 86, 95, 60}, {3, 82, 92, 58}}};
const HandShape kPoint = {{{12, 42, 50, 40}, {2, 4, 4, 3}, {1, 85, 95, 60}, {2, 86, 94, 60}, {3, 82, 92, 58}}};
const HandShape kThumbsUp = {{{6, 2, 3, 2}, {2, 85, 95, 60}, {1, 88, 96, 62}, {2, 86, 95, 60}, {3, 82, 92, 58}}};
const HandShape kPinch = {{{14, 36, 32, 26}, {2, 42, 46, 32}, {1, 70, 80, 55}, {2, 72, 80, 55}, {3, 70, 78, 52}}};
const HandShape kCylGrip = {{{22, 40, 42, 32}, {3, 55, 70, 45}, {1, 58, 72, 46}, {3, 56, 70, 45}, {5, 52, 66, 42}}};
const HandShape kSphereGrip = {{{26, 34, 40, 30}, {10, 45, 55, 40}, {2, 48, 58, 42}, {8, 46, 55, 40}, {14, 42, 52, 38}}};
const HandShape kBoxGrip = {{{20, 38, 45, 34}, {4, 50, 60, 40}, {1, 52, 62, 42}, {4, 50, 60, 40}, {6, 48, 56, 38}}};
const HandShape kPrecision = {{{16, 45, 40, 30}, {2, 50, 55, 35}, {1, 55, 62, 40}, {2, 62, 72, 48}, {3, 66, 76, 50}}};
const HandShape kLightCurl = {{{10, 20, 18, 12}, {4, 18, 15, 10}, {1, 20, 16, 10}, {4, 18, 15, 10}, {7, 16, 13, 9}}};
const HandShape kClaw = {{{16, 30, 48, 42}, {5, 25, 70, 55}, {1, 26, 72, 56}, {5, 25, 70, 55}, {8, 24, 66, 52}}};
const HandShape kFlat = {{{8, 6, 4, 3}, {1, 2, 2, 2}, {1, 2, 2, 2}, {1, 2, 2, 2}, {1, 2, 2, 2}}};
const HandShape kSpread = {{{24, 8, 5, 4}, {14, 5, 4, 3}, {2, 4, 4, 3}, {12, 5, 4, 3}, {20, 6, 4, 3}}};
const HandShape kTrigger = {{{20, 42, 44, 34}, {2, 30, 20, 12}, {1, 60, 74, 48}, {3, 58, 72, 46}, {5, 54, 68, 44}}};
const HandShape kOkSign = {{{16, 48, 44, 36}, {2, 55, 60, 42}, {1, 8, 6, 4}, {4, 7, 5, 4}, {7, 6, 5, 4}}};

struct ObjectSpec {
  const char* name;
  Shape shape;
  RigidTransform attach;
};

RigidTransform attach_at(double y, double z,
                         double ry_deg = 0.0, double rx_deg = 0.0) {
  RigidTransform t = translate(0.0, y, z);
  if (ry_deg != 0.0)
    t = t * RigidTransform(Eigen::AngleAxisd(ry_deg * kDeg, Vec3::UnitY()));
  if (rx_deg != 0.0)
    t = t * RigidTransform(Eigen::AngleAxisd(rx_deg * kDeg, Vec3::UnitX()));
  return t;
}

std::vector<ObjectSpec> object_specs() {
  // Objects sit against the palm surface (palm normal -y, half thickness
  // 1.5 cm); cylinders are authored along local z and rotated into place.
  return {
      {"bottle", Shape::cylinder({0, 0, -0.09}, {0, 0, 0.09}, 0.035), attach_at(-0.050, 0.050, 90)},
      {"ball", Shape::sphere({0, 0, 0}, 0.040), attach_at(-0.055, 0.050)},
      {"block", Shape::box({0, 0, 0}, {0.050, 0.020, 0.030}), attach_at(-0.035, 0.050)},
      {"mug", Shape::cylinder({0, 0, -0.05}, {0, 0, 0.05}, 0.040), attach_at(-0.055, 0.050, 0, 90)},
      {"pen", Shape::cylinder({0, 0, -0.07}, {0, 0, 0.07}, 0.006), attach_at(-0.021, 0.070, 90)},
      {"phone", Shape::box({0, 0, 0}, {0.035, 0.004, 0.070}), attach_at(-0.019, 0.050)},
      {"cup", Shape::cylinder({0, 0, -0.045}, {0, 0, 0.045}, 0.038), attach_at(-0.053, 0.050, 0, 90)},
      {"knob", Shape::sphere({0, 0, 0}, 0.030), attach_at(-0.045, 0.080)},
      {"card", Shape::box({0, 0, 0}, {0.043, 0.001, 0.027}), attach_at(-0.016, 0.090)},
      {"spray", Shape::cylinder({0, 0, -0.08}, {0, 0, 0.08}, 0.030), attach_at(-0.045, 0.040, 0, 90)},
  };
}

struct GraspSpec {
  const char* name;
  Vec3 wrist_target;  // camera coordinates
  const HandShape* hand;
  int object;  // index into object_specs(), -1 none
  double roll_deg, pron_deg, wflex_deg, wdev_deg;
};

std::vector<GraspSpec> grasp_specs() {
  return {
      {"open-palm", {0.02, 0.05, 0.38}, &kOpen, -1, 0, 0, 0, 0},
      {"fist", {0.12, 0.02, 0.34}, &kFist, -1, 18, 28, 10, -6},
      {"point", {-0.06, -0.02, 0.42}, &kPoint, -1, -15, -25, -8, 8},
      {"thumbs-up", {0.05, -0.08, 0.44}, &kThumbsUp, -1, 30, -55, 5, 0},
      {"pinch", {0.15, 0.08, 0.30}, &kPinch, 7, -25, 40, -15, 10},
      {"bottle-grasp", {-0.10, 0.08, 0.36}, &kCylGrip, 0, 8, 12, 18, -10},
      {"ball-grasp", {0.16, -0.03, 0.44}, &kSphereGrip, 1, -8, -14, -18, 4},
      {"block-grasp", {0.00, 0.12, 0.30}, &kBoxGrip, 2, 22, 35, 8, 12},
      {"mug-grip", {0.10, 0.13, 0.40}, &kCylGrip, 3, -20, -38, -5, -12},
      {"pen-grip", {-0.11, 0.04, 0.30}, &kPrecision, 4, 12, 52, 20, 6},
      {"phone-hold", {0.06, 0.00, 0.50}, &kLightCurl, 5, -12, -48, -20, -4},
      {"open-reach", {0.17, 0.06, 0.38}, &kLightCurl, -1, 26, 18, 12, 14},
      {"claw", {-0.03, -0.08, 0.34}, &kClaw, -1, -28, -18, -12, -14},
      {"flat-press", {0.13, -0.10, 0.36}, &kFlat, -1, 35, 8, 22, 2},
      {"wave", {-0.13, -0.05, 0.40}, &kSpread, -1, -32, -8, -22, -2},
      {"cup-hold", {0.02, 0.15, 0.38}, &kCylGrip, 6, 5, 58, 3, 9},
      {"knob-turn", {0.13, 0.11, 0.46}, &kSphereGrip, 7, -5, -58, -3, -9},
      {"card-hold", {-0.07, 0.13, 0.44}, &kPinch, 8, 15, 22, 15, -13},
      {"spray-grip", {0.18, 0.00, 0.31}, &kTrigger, 9, -18, -30, -15, 13},
      {"ok-sign", {-0.02, 0.03, 0.28}, &kOkSign, -1, 9, -12, 24, -8},
  };
}

nlohmann::json shape_to_json(const Shape& s) {
  nlohmann::json j;
  switch (s.kind) {
    case Shape::Kind::kCapsule: j["kind"] = "capsule"; break;
    case Shape::Kind::kCylinder: j["kind"] = "cylinder"; break;
    case Shape::Kind::kBox: j["kind"] = "box"; break;
    case Shape::Kind::kSphere: j["kind"] = "sphere"; break;
  }
  j["a"] = {s.a.x(), s.a.y(), s.a.z()};
  j["b"] = {s.b.x(), s.b.y(), s.b.z()};
  j["half"] = {s.half.x(), s.half.y(), s.half.z()};
  j["r"] = s.r;
  return j;
}

Shape shape_from_json(const nlohmann::json& j) {
  Shape s;
  const std::string kind = j.at("kind");
  if (kind == "capsule") s.kind = Shape::Kind::kCapsule;
  else if (kind == "cylinder") s.kind = Shape::Kind::kCylinder;
  else if (kind == "box") s.kind = Shape::Kind::kBox;
  else if (kind == "sphere") s.kind = Shape::Kind::kSphere;
  else throw DataError("grasp file: unknown shape kind '" + kind + "'");
  auto vec = [&](const char* key) {
    const auto& a = j.at(key);
    return Vec3(a.at(0).get<double>(), a.at(1).get<double>(),
                a.at(2).get<double>());
  };
  s.a = vec("a");
  s.b = vec("b");
  s.half = vec("half");
  s.r = j.at("r").get<double>();
  return s;
}

}  // namespace

Eigen::Vector3d reach_angles(double len1, double len2, const Vec3& target) {
  // Flexion capped near 145 degrees keeps the solution inside joint limits.
  const double rmin = std::sqrt(len1 * len1 + len2 * len2 -
                                2.0 * len1 * len2 * std::cos(35.0 * kDeg));
  const double rmax = 0.98 * (len1 + len2);
  double r = target.norm();
  Vec3 d = r > 1e-12 ? Vec3(target) : Vec3(0, 0, rmin);
  r = std::min(std::max(r, rmin), rmax);
  d = d.normalized() * r;

  const double yaw = std::atan2(d.x(), d.z());
  const double psi = std::atan2(d.y(), std::hypot(d.x(), d.z()));
  const double gamma =
      std::acos((len1 * len1 + r * r - len2 * len2) / (2.0 * len1 * r));
  const double pitch = -(psi + gamma);
  const double flex =
      kPi - std::acos((len1 * len1 + len2 * len2 - r * r) / (2.0 * len1 * len2));
  return {yaw, pitch, flex};
}

const Grasp& GraspLibrary::by_id(int id) const {
  for (const auto& g : grasps)
    if (g.id == id) return g;
  throw StructuralError("grasp id " + std::to_string(id) + " not in library");
}

bool GraspLibrary::has_id(int id) const {
  for (const auto& g : grasps)
    if (g.id == id) return true;
  return false;
}

std::vector<int> GraspLibrary::all_ids() const {
  std::vector<int> ids;
  ids.reserve(grasps.size());
  for (const auto& g : grasps) ids.push_back(g.id);
  return ids;
}

GraspLibrary GraspLibrary::builtin(const KinematicChain& chain,
                                   double cloud_spacing_scale) {
  GraspLibrary lib;
  for (const auto& spec : object_specs()) {
    ObjectModel obj;
    obj.id = static_cast<int>(lib.objects.size());
    obj.name = spec.name;
    obj.shape = spec.shape;
    obj.attach = spec.attach;
    obj.cloud = sample_surface(spec.shape, kObjectSpacing * cloud_spacing_scale);
    lib.objects.push_back(std::move(obj));
  }

  const Vec3 anchor = default_extrinsics().translation();
  const Vec3 safe_center(0.04, 0.02, 0.40);
  const BodyDimensions dims;  // arm segment lengths for the reach solve

  int id = 0;
  for (const auto& spec : grasp_specs()) {
    Grasp g;
    g.id = id++;
    g.name = spec.name;
    g.object_id = spec.object;
    g.phi = hand_phi(*spec.hand);

    // Anchor the arm on the wrist target, pulling toward the workspace
    // center until every keypoint projects safely inside the image.
    Vec3 target = spec.wrist_target;
    const CameraModel cam;
    for (int iter = 0; iter < 32; ++iter) {
      const Eigen::Vector3d ypf =
          reach_angles(dims.upper_arm_len, dims.forearm_len, target - anchor);
      Eigen::VectorXd theta = Eigen::VectorXd::Zero(kArmDof);
      theta[kShoulderRoll] = spec.roll_deg * kDeg;
      theta[kShoulderYaw] = ypf[0];
      theta[kShoulderPitch] = ypf[1];
      theta[kElbowFlex] = ypf[2];
      theta[kElbowPronation] = spec.pron_deg * kDeg;
      theta[kWristFlex] = spec.wflex_deg * kDeg;
      theta[kWristDeviation] = spec.wdev_deg * kDeg;
      Eigen::VectorXd all(kArmDof + kHandDof);
      all << theta, g.phi;
      all = chain.clamp_angles(all);
      g.base_theta = all.head(kArmDof);
      g.phi = all.tail(kHandDof);

      ArmHandPose pose{g.base_theta, g.phi, g.id, g.object_id,
                       Handedness::kRight};
      const FkResult fk =
          forward_kinematics(chain, pose, default_extrinsics(), false);
      constexpr double kMargin = 10.0;
      bool ok = true;
      for (int k = 0; k < kKeypointCount && ok; ++k) {
        const Vec3 p = fk.keypoints.col(k);
        if (p.z() < 0.15) {
          ok = false;
          break;
        }
        const Vec2 px = project(cam, p);
        ok = px.x() >= kMargin && px.x() <= cam.width - 1 - kMargin &&
             px.y() >= kMargin && px.y() <= cam.height - 1 - kMargin;
      }
      if (ok) break;
      target = 0.85 * target + 0.15 * safe_center;
    }

    lib.grasps.push_back(std::move(g));
  }
  return lib;
}

void GraspLibrary::save(const std::string& path) const {
  nlohmann::json j;
  j["version"] = 1;
  j["angle_convention"] = "shoulder-zyx-intrinsic";
  j["objects"] = nlohmann::json::array();
  for (const auto& o : objects) {
    nlohmann::json jo;
    jo["id"] = o.id;
    jo["name"] = o.name;
    jo["shape"] = shape_to_json(o.shape);
    const Eigen::Matrix4d m = o.attach.matrix();
    std::vector<double> flat(16);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) flat[4 * r + c] = m(r, c);
    jo["attach"] = flat;
    j["objects"].push_back(std::move(jo));
  }
  j["grasps"] = nlohmann::json::array();
  for (const auto& g : grasps) {
    nlohmann::json jg;
    jg["id"] = g.id;
    jg["name"] = g.name;
    jg["theta"] = std::vector<double>(g.base_theta.data(),
                                      g.base_theta.data() + g.base_theta.size());
    jg["phi"] = std::vector<double>(g.phi.data(), g.phi.data() + g.phi.size());
    jg["object"] = g.object_id;
    j["grasps"].push_back(std::move(jg));
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write grasp file: " + path);
  out << j.dump(2) << '\n';
}

GraspLibrary GraspLibrary::load(const std::string& path,
                                const KinematicChain& chain,
                                double cloud_spacing_scale) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read grasp file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("grasp file: invalid JSON: " + std::string(e.what()));
  }
  if (j.value("version", 0) != 1)
    throw DataError("grasp file: unsupported version");

  GraspLibrary lib;
  for (const auto& jo : j.at("objects")) {
    ObjectModel o;
    o.id = jo.at("id").get<int>();
    o.name = jo.at("name").get<std::string>();
    o.shape = shape_from_json(jo.at("shape"));
    const auto& flat = jo.at("attach");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = flat.at(4 * r + c).get<double>();
    o.attach = RigidTransform(m);
    o.cloud = sample_surface(o.shape, kObjectSpacing * cloud_spacing_scale);
    lib.objects.push_back(std::move(o));
  }
  for (const auto& jg : j.at("grasps")) {
    Grasp g;
    g.id = jg.at("id").get<int>();
    g.name = jg.at("name").get<std::string>();
    const auto& th = jg.at("theta");
    const auto& ph = jg.at("phi");
    if (th.size() != kArmDof || ph.size() != kHandDof)
      throw DataError("grasp file: angle vector size mismatch for grasp '" +
                      g.name + "'");
    Eigen::VectorXd all(kArmDof + kHandDof);
    for (int i = 0; i < kArmDof; ++i) all[i] = th.at(i).get<double>();
    for (int i = 0; i < kHandDof; ++i) all[kArmDof + i] = ph.at(i).get<double>();
    all = chain.clamp_angles(all);
    g.base_theta = all.head(kArmDof);
    g.phi = all.tail(kHandDof);
    g.object_id = jg.at("object").get<int>();
    if (g.object_id >= static_cast<int>(lib.objects.size()))
      throw DataError("grasp file: grasp '" + g.name +
                      "' references missing object");
    lib.grasps.push_back(std::move(g));
  }
  return lib;
}

}  // namespace egovol
