#pragma once

#include <Eigen/Dense>

#include "egovol/camera.hpp"

namespace egovol {

// Surface primitive in a segment-local frame. Capsules and cylinders run
// from `a` to `b` with radius `r`; boxes are centered at `a` with half
// extents `half`; spheres are centered at `a` with radius `r`.
struct Shape {
  enum class Kind { kCapsule, kCylinder, kBox, kSphere };

  Kind kind = Kind::kCapsule;
  Vec3 a{0, 0, 0};
  Vec3 b{0, 0, 0};
  Vec3 half{0, 0, 0};
  double r = 0.0;

  static Shape capsule(const Vec3& a, const Vec3& b, double r) {
    Shape s;
    s.kind = Kind::kCapsule;
    s.a = a;
    s.b = b;
    s.r = r;
    return s;
  }
  static Shape cylinder(const Vec3& a, const Vec3& b, double r) {
    Shape s;
    s.kind = Kind::kCylinder;
    s.a = a;
    s.b = b;
    s.r = r;
    return s;
  }
  static Shape box(const Vec3& center, const Vec3& half) {
    Shape s;
    s.kind = Kind::kBox;
    s.a = center;
    s.half = half;
    return s;
  }
  static Shape sphere(const Vec3& center, double r) {
    Shape s;
    s.kind = Kind::kSphere;
    s.a = center;
    s.r = r;
    return s;
  }

  double surface_area() const;
};

// Regular surface sampling at roughly `spacing` meters between neighbors.
// Deterministic: same shape and spacing always produce identical points.
Eigen::Matrix3Xf sample_surface(const Shape& shape, double spacing);

Eigen::Matrix3Xf sample_surface(const std::vector<Shape>& shapes,
                                double spacing);

}  // namespace egovol
