#include "egovol/shapes.hpp"

#include <cmath>
#include <vector>

namespace egovol {

namespace {

constexpr double kPi = 3.14159265358979323846;

int at_least(double x, int lo) {
  return std::max(lo, static_cast<int>(std::ceil(x)));
}

// Frame (t1, t2, axis) with axis = normalize(b - a).
void axis_frame(const Vec3& a, const Vec3& b, Vec3& axis, Vec3& t1, Vec3& t2) {
  axis = (b - a).normalized();
  t1 = std::abs(axis.z()) < 0.9 ? axis.cross(Vec3::UnitZ()).normalized()
                                : axis.cross(Vec3::UnitX()).normalized();
  t2 = axis.cross(t1);
}

void ring(std::vector<Eigen::Vector3f>& out, const Vec3& center, double r,
          const Vec3& t1, const Vec3& t2, double spacing) {
  const int n = at_least(2.0 * kPi * r / spacing, 3);
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * i / n;
    out.push_back(
        (center + r * (std::cos(a) * t1 + std::sin(a) * t2)).cast<float>());
  }
}

// Side wall of a cylinder from a to b.
void tube(std::vector<Eigen::Vector3f>& out, const Vec3& a, const Vec3& b,
          double r, double spacing) {
  Vec3 axis, t1, t2;
  axis_frame(a, b, axis, t1, t2);
  const double len = (b - a).norm();
  const int rows = at_least(len / spacing, 2);
  for (int i = 0; i <= rows; ++i)
    ring(out, a + axis * (len * i / rows), r, t1, t2, spacing);
}

// Hemisphere cap around `pole_dir` (unit), as latitude rings.
void cap(std::vector<Eigen::Vector3f>& out, const Vec3& center,
         const Vec3& pole_dir, const Vec3& t1, const Vec3& t2, double r,
         double spacing) {
  const int lat = at_least(0.5 * kPi * r / spacing, 2);
  for (int i = 1; i <= lat; ++i) {
    const double phi = 0.5 * kPi * i / lat;  // 0 at equator, pi/2 at pole
    const double ring_r = r * std::cos(phi);
    const Vec3 c = center + pole_dir * (r * std::sin(phi));
    if (i == lat) {
      out.push_back((center + pole_dir * r).cast<float>());
    } else {
      ring(out, c, ring_r, t1, t2, spacing);
    }
  }
}

void disc(std::vector<Eigen::Vector3f>& out, const Vec3& center,
          const Vec3& t1, const Vec3& t2, double r, double spacing) {
  const int rings = at_least(r / spacing, 1);
  out.push_back(center.cast<float>());
  for (int i = 1; i <= rings; ++i)
    ring(out, center, r * i / rings, t1, t2, spacing);
}

void face(std::vector<Eigen::Vector3f>& out, const Vec3& corner, const Vec3& e1,
          const Vec3& e2, double spacing) {
  const int n1 = at_least(e1.norm() / spacing, 1);
  const int n2 = at_least(e2.norm() / spacing, 1);
  for (int i = 0; i <= n1; ++i)
    for (int j = 0; j <= n2; ++j)
      out.push_back(
          (corner + e1 * (static_cast<double>(i) / n1) +
           e2 * (static_cast<double>(j) / n2))
              .cast<float>());
}

}  // namespace

double Shape::surface_area() const {
  switch (kind) {
    case Kind::kCapsule:
      return 2.0 * kPi * r * (b - a).norm() + 4.0 * kPi * r * r;
    case Kind::kCylinder:
      return 2.0 * kPi * r * (b - a).norm() + 2.0 * kPi * r * r;
    case Kind::kBox:
      return 8.0 * (half.x() * half.y() + half.y() * half.z() +
                    half.z() * half.x());
    case Kind::kSphere:
      return 4.0 * kPi * r * r;
  }
  return 0.0;
}

Eigen::Matrix3Xf sample_surface(const Shape& shape, double spacing) {
  std::vector<Eigen::Vector3f> pts;
  pts.reserve(static_cast<std::size_t>(
      shape.surface_area() / (spacing * spacing) * 1.5 + 16));

  switch (shape.kind) {
    case Shape::Kind::kCapsule: {
      Vec3 axis, t1, t2;
      axis_frame(shape.a, shape.b, axis, t1, t2);
      tube(pts, shape.a, shape.b, shape.r, spacing);
      cap(pts, shape.a, -axis, t1, t2, shape.r, spacing);
      cap(pts, shape.b, axis, t1, t2, shape.r, spacing);
      break;
    }
    case Shape::Kind::kCylinder: {
      Vec3 axis, t1, t2;
      axis_frame(shape.a, shape.b, axis, t1, t2);
      tube(pts, shape.a, shape.b, shape.r, spacing);
      disc(pts, shape.a, t1, t2, shape.r, spacing);
      disc(pts, shape.b, t1, t2, shape.r, spacing);
      break;
    }
    case Shape::Kind::kBox: {
      const Vec3& c = shape.a;
      const Vec3& h = shape.half;
      const Vec3 ex(2 * h.x(), 0, 0), ey(0, 2 * h.y(), 0), ez(0, 0, 2 * h.z());
      face(pts, c - h, ex, ey, spacing);                        // z-
      face(pts, c - h + ez, ex, ey, spacing);                   // z+
      face(pts, c - h, ex, ez, spacing);                        // y-
      face(pts, c - h + ey, ex, ez, spacing);                   // y+
      face(pts, c - h, ey, ez, spacing);                        // x-
      face(pts, c - h + ex, ey, ez, spacing);                   // x+
      break;
    }
    case Shape::Kind::kSphere: {
      const int lat = at_least(kPi * shape.r / spacing, 3);
      const Vec3 t1 = Vec3::UnitX(), t2 = Vec3::UnitY();
      pts.push_back((shape.a - Vec3(0, 0, shape.r)).cast<float>());
      pts.push_back((shape.a + Vec3(0, 0, shape.r)).cast<float>());
      for (int i = 1; i < lat; ++i) {
        const double phi = kPi * i / lat;  // 0 at -z pole
        const Vec3 c = shape.a + Vec3(0, 0, -shape.r * std::cos(phi));
        ring(pts, c, shape.r * std::sin(phi), t1, t2, spacing);
      }
      break;
    }
  }

  Eigen::Matrix3Xf m(3, pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) m.col(i) = pts[i];
  return m;
}

Eigen::Matrix3Xf sample_surface(const std::vector<Shape>& shapes,
                                double spacing) {
  std::vector<Eigen::Matrix3Xf> parts;
  Eigen::Index total = 0;
  for (const auto& s : shapes) {
    parts.push_back(sample_surface(s, spacing));
    total += parts.back().cols();
  }
  Eigen::Matrix3Xf m(3, total);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    m.middleCols(at, p.cols()) = p;
    at += p.cols();
  }
  return m;
}

}  // namespace egovol
