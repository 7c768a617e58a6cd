#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "egovol/common.hpp"

namespace egovol {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

// Pinhole intrinsics plus the frustum binning grid shared by synthesis and
// feature extraction. Pixel centers sit at integer coordinates; all bin
// boundaries are half-open [lo, hi). Immutable after validate().
//
// The grid constraint (width % nu == 0, height % nv == 0) makes every
// frustum bin project to an exact block_w x block_h pixel block, which is
// what lets quantization read bins straight off the depth image.
struct CameraModel {
  double f = 224.0;  // focal length, pixels
  double cx = 160.0;
  double cy = 120.0;
  int width = 320;
  int height = 240;
  double z_max = 0.70;  // workspace radial bound, meters
  int nu = 32;
  int nv = 24;
  int nw = 35;

  void validate() const {
    if (!(f > 0.0)) throw ConfigError("camera: focal length must be > 0");
    if (width < 1 || height < 1)
      throw ConfigError("camera: resolution must be >= 1");
    if (nu < 1 || nv < 1 || nw < 1)
      throw ConfigError("camera: grid resolution must be >= 1");
    if (!(z_max > 0.0)) throw ConfigError("camera: z_max must be > 0");
    if (width % nu != 0)
      throw ConfigError("camera: width must be a multiple of nu");
    if (height % nv != 0)
      throw ConfigError("camera: height must be a multiple of nv");
  }

  int block_w() const { return width / nu; }
  int block_h() const { return height / nv; }

  bool operator==(const CameraModel&) const = default;
};

// Perspective projection to pixel coordinates. Defined only in front of the
// camera; visibility against image bounds is the caller's concern.
inline Vec2 project(const CameraModel& cam, const Vec3& p) {
  if (!(p.z() > 0.0))
    throw StructuralError("project: behind-camera point (z <= 0)");
  return {cam.f * p.x() / p.z() + cam.cx, cam.f * p.y() / p.z() + cam.cy};
}

// Unit direction of the ray through pixel (x, y).
inline Vec3 pixel_ray(const CameraModel& cam, double x, double y) {
  Vec3 d((x - cam.cx) / cam.f, (y - cam.cy) / cam.f, 1.0);
  return d.normalized();
}

// Radial distance ||p|| of the point at planar depth z_planar along the ray
// through (x, y). Sensors report planar z; stored depth maps are radial.
inline double radial_from_planar(const CameraModel& cam, double z_planar,
                                 double x, double y) {
  const double dx = (x - cam.cx) / cam.f;
  const double dy = (y - cam.cy) / cam.f;
  return z_planar * std::sqrt(dx * dx + dy * dy + 1.0);
}

struct GridCell {
  int u = 0;
  int v = 0;
  bool operator==(const GridCell&) const = default;
};

// Feature-grid column owning pixel (x, y).
inline GridCell bin_of_pixel(const CameraModel& cam, double x, double y) {
  if (x < 0.0 || x >= cam.width || y < 0.0 || y >= cam.height)
    throw StructuralError("bin_of_pixel: pixel outside image bounds");
  return {static_cast<int>(std::floor(x * cam.nu / cam.width)),
          static_cast<int>(std::floor(y * cam.nv / cam.height))};
}

}  // namespace egovol
