#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "egovol/camera.hpp"
#include "egovol/depth_map.hpp"

namespace egovol {

// Nu x Nv map of radial bin indices in [0, nw]; nw is the sentinel for
// "no measurement inside the workspace". This is the sparse form of the
// volumetric feature and the only input the fast scorer needs.
struct QuantizedDepthMap {
  int nu = 0;
  int nv = 0;
  int nw = 0;

  using Array = Eigen::Array<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>;
  Array q;  // (nv rows, nu cols)

  QuantizedDepthMap() = default;
  QuantizedDepthMap(int nu_, int nv_, int nw_)
      : nu(nu_), nv(nv_), nw(nw_),
        q(Array::Constant(nv_, nu_, static_cast<std::uint16_t>(nw_))) {}

  std::uint16_t at(int u, int v) const { return q(v, u); }
  std::uint16_t& at(int u, int v) { return q(v, u); }

  bool matches(const CameraModel& cam) const {
    return nu == cam.nu && nv == cam.nv && nw == cam.nw;
  }
};

// Dense backfilled occupancy tensor b[u,v,w]. Each (u,v) column is a step
// function: zeros up to the first measurement, ones from there on (occluded
// voxels count as occupied). Kept for tests and the naive-scoring oracle;
// production scoring never materializes it.
struct VoxelGrid {
  int nu = 0;
  int nv = 0;
  int nw = 0;
  std::vector<std::uint8_t> b;  // index (u * nv + v) * nw + w

  VoxelGrid() = default;
  VoxelGrid(int nu_, int nv_, int nw_)
      : nu(nu_), nv(nv_), nw(nw_),
        b(static_cast<std::size_t>(nu_) * nv_ * nw_, 0) {}

  std::size_t index(int u, int v, int w) const {
    return (static_cast<std::size_t>(u) * nv + v) * nw + w;
  }
  bool at(int u, int v, int w) const { return b[index(u, v, w)] != 0; }
  void set(int u, int v, int w, bool value) {
    b[index(u, v, w)] = value ? 1 : 0;
  }

  std::size_t count_ones() const {
    std::size_t n = 0;
    for (auto x : b) n += x;
    return n;
  }
};

// Median-filter quantization of a depth map onto the frustum grid. A column
// is sentinel when its pixel block has no measurements, when fewer than half
// of the block's pixels carry measurements <= z_max, or when the median of
// the measured values falls at or beyond z_max. Even-sized medians take the
// lower middle element.
QuantizedDepthMap quantize_depth(const CameraModel& cam, const DepthMap& z);

// Expands the sparse form into the dense backfilled grid:
// b[u,v,w] = 1 iff w >= z'[u,v].
VoxelGrid to_voxels(const QuantizedDepthMap& q);

// Inverse of to_voxels for well-formed (step-function) grids; the pair is a
// lossless round trip.
QuantizedDepthMap from_voxels(const VoxelGrid& grid);

// Number of occupied voxels: sum over columns of (nw - z').
std::size_t occupied_count(const QuantizedDepthMap& q);

// Axis-aligned rectilinear occupancy grid used as the orthographic baseline.
// No backfill: occupancy marks surface cells only.
struct OrthoGrid {
  int nx = 0;
  int ny = 0;
  int nz = 0;
  double cube = 0.02;        // cell edge, meters
  Vec3 origin{0.0, 0.0, 0.0};  // minimum corner of the workspace box
  std::vector<std::uint8_t> b;  // index (i * ny + j) * nz + k

  OrthoGrid() = default;
  OrthoGrid(int nx_, int ny_, int nz_, double cube_, const Vec3& origin_)
      : nx(nx_), ny(ny_), nz(nz_), cube(cube_), origin(origin_),
        b(static_cast<std::size_t>(nx_) * ny_ * nz_, 0) {}

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * ny + j) * nz + k;
  }
  bool at(int i, int j, int k) const { return b[index(i, j, k)] != 0; }

  std::size_t count_ones() const {
    std::size_t n = 0;
    for (auto x : b) n += x;
    return n;
  }
};

// Back-projects every measured pixel to a 3D point (radial distance along
// the pixel ray).
Eigen::Matrix3Xf backproject_measured(const CameraModel& cam,
                                      const DepthMap& z);

// Bins points into cube cells over the box [origin, origin + dims).
OrthoGrid bin_points_ortho(const Eigen::Matrix3Xf& points, const Vec3& dims,
                           double cube);

// The orthographic baseline feature over a dims.x x dims.y x dims.z meter
// workspace centered laterally on the camera axis, z in [0, dims.z).
OrthoGrid orthographic_voxels(const CameraModel& cam, const DepthMap& z,
                              const Vec3& dims = Vec3(0.64, 0.48, 0.70),
                              double cube = 0.02);

}  // namespace egovol
