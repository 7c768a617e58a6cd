#include "egovol/features.hpp"

#include <algorithm>
#include <cmath>

namespace egovol {

QuantizedDepthMap quantize_depth(const CameraModel& cam, const DepthMap& z) {
  if (!z.matches(cam))
    throw StructuralError("quantize_depth: depth map does not match camera");

  QuantizedDepthMap out(cam.nu, cam.nv, cam.nw);
  const int bw = cam.block_w();
  const int bh = cam.block_h();
  const int block_size = bw * bh;
  std::vector<float> vals;
  vals.reserve(block_size);

  for (int v = 0; v < cam.nv; ++v) {
    for (int u = 0; u < cam.nu; ++u) {
      vals.clear();
      int within = 0;  // measured pixels with depth <= z_max
      for (int y = v * bh; y < (v + 1) * bh; ++y) {
        for (int x = u * bw; x < (u + 1) * bw; ++x) {
          const float d = z.at(x, y);
          if (d > 0.0f) {
            vals.push_back(d);
            if (d <= cam.z_max) ++within;
          }
        }
      }
      if (vals.empty() || 2 * within < block_size) continue;  // stays sentinel

      const std::size_t mid = (vals.size() - 1) / 2;  // lower middle when even
      std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
      const double med = vals[mid];
      if (med >= cam.z_max) continue;

      const int bin = static_cast<int>(std::floor(cam.nw * med / cam.z_max));
      out.at(u, v) = static_cast<std::uint16_t>(std::min(bin, cam.nw - 1));
    }
  }
  return out;
}

VoxelGrid to_voxels(const QuantizedDepthMap& q) {
  VoxelGrid grid(q.nu, q.nv, q.nw);
  for (int u = 0; u < q.nu; ++u)
    for (int v = 0; v < q.nv; ++v)
      for (int w = q.at(u, v); w < q.nw; ++w) grid.set(u, v, w, true);
  return grid;
}

QuantizedDepthMap from_voxels(const VoxelGrid& grid) {
  QuantizedDepthMap q(grid.nu, grid.nv, grid.nw);
  for (int u = 0; u < grid.nu; ++u) {
    for (int v = 0; v < grid.nv; ++v) {
      int w = 0;
      while (w < grid.nw && !grid.at(u, v, w)) ++w;
      q.at(u, v) = static_cast<std::uint16_t>(w);
    }
  }
  return q;
}

std::size_t occupied_count(const QuantizedDepthMap& q) {
  std::size_t n = 0;
  for (int u = 0; u < q.nu; ++u)
    for (int v = 0; v < q.nv; ++v) n += q.nw - q.at(u, v);
  return n;
}

Eigen::Matrix3Xf backproject_measured(const CameraModel& cam,
                                      const DepthMap& z) {
  std::size_t count = 0;
  for (int y = 0; y < z.height; ++y)
    for (int x = 0; x < z.width; ++x)
      if (z.measured(x, y)) ++count;

  Eigen::Matrix3Xf pts(3, count);
  std::size_t i = 0;
  for (int y = 0; y < z.height; ++y) {
    for (int x = 0; x < z.width; ++x) {
      if (!z.measured(x, y)) continue;
      const Vec3 p = z.at(x, y) * pixel_ray(cam, x, y);
      pts.col(i++) = p.cast<float>();
    }
  }
  return pts;
}

OrthoGrid bin_points_ortho(const Eigen::Matrix3Xf& points, const Vec3& dims,
                           double cube) {
  const int nx = static_cast<int>(std::lround(dims.x() / cube));
  const int ny = static_cast<int>(std::lround(dims.y() / cube));
  const int nz = static_cast<int>(std::lround(dims.z() / cube));
  const Vec3 origin(-dims.x() / 2.0, -dims.y() / 2.0, 0.0);
  OrthoGrid grid(nx, ny, nz, cube, origin);

  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const double px = points(0, c) - origin.x();
    const double py = points(1, c) - origin.y();
    const double pz = points(2, c) - origin.z();
    const int i = static_cast<int>(std::floor(px / cube));
    const int j = static_cast<int>(std::floor(py / cube));
    const int k = static_cast<int>(std::floor(pz / cube));
    if (i < 0 || i >= nx || j < 0 || j >= ny || k < 0 || k >= nz) continue;
    grid.b[grid.index(i, j, k)] = 1;
  }
  return grid;
}

OrthoGrid orthographic_voxels(const CameraModel& cam, const DepthMap& z,
                              const Vec3& dims, double cube) {
  return bin_points_ortho(backproject_measured(cam, z), dims, cube);
}

}  // namespace egovol
