#pragma once

#include <Eigen/Dense>

#include "egovol/camera.hpp"
#include "egovol/common.hpp"

namespace egovol {

// Radial-distance image. Value 0 marks rays with no measurement; every
// measured value is finite and > 0. Row-major so the raw buffer matches the
// on-disk record layout (y outer, x inner).
struct DepthMap {
  static constexpr float kNoMeasurement = 0.0f;

  using Array =
      Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  int width = 0;
  int height = 0;
  Array a;  // (height rows, width cols)

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), a(Array::Zero(h, w)) {}

  float& at(int x, int y) { return a(y, x); }
  float at(int x, int y) const { return a(y, x); }
  bool measured(int x, int y) const { return a(y, x) > 0.0f; }

  bool same_shape(const DepthMap& o) const {
    return width == o.width && height == o.height;
  }
  bool matches(const CameraModel& cam) const {
    return width == cam.width && height == cam.height;
  }
};

}  // namespace egovol
