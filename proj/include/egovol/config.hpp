#pragma once

#include <string>

#include <json.hpp>

#include "egovol/camera.hpp"

namespace egovol {

// Full pipeline configuration. A seed is mandatory: every run is
// reproducible or it does not start.
struct RunConfig {
  CameraModel camera;

  struct Synthesis {
    std::uint64_t n_train = 2000;
    std::uint64_t n_test = 500;
    double sigma = 0.15;
    double pair_rate = 0.25;
    double delta = 0.02;
    int background_count = 32;
    std::string background_file;
    double depth_noise_sigma = 0.0;
    std::string grasps_file;  // empty = builtin library
  } synthesis;

  struct Model {
    int k = 20;
    double lambda = 1e-4;
    int epochs = 30;
  } model;

  struct Eval {
    double tau3d = 0.10;
  } eval;

  std::uint64_t seed = 0;

  struct Paths {
    std::string train = "train.egov";
    std::string test = "test.egov";
    std::string model = "model.egom";
    std::string report = "report.csv";
  } paths;

  int threads = 0;
  double cloud_spacing_scale = 1.0;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
  void validate() const;

  // Stage-scoped config hashes; artifacts embed the hash they were built
  // from so unchanged stages can be skipped.
  std::uint64_t dataset_hash(bool test_split) const;
  std::uint64_t model_hash() const;
  std::uint64_t report_hash() const;
};

}  // namespace egovol
