#include "egovol/config.hpp"

#include <fstream>
#include <set>

#include "egovol/dataset_io.hpp"

namespace egovol {

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return from_json(j);
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
  RunConfig cfg;
  try {
    if (j.contains("camera")) cfg.camera = camera_from_json(j.at("camera"));
    if (!j.contains("seed"))
      throw ConfigError("config must set a seed explicitly");
    cfg.seed = j.at("seed").get<std::uint64_t>();

    if (j.contains("synthesis")) {
      const auto& s = j.at("synthesis");
      cfg.synthesis.n_train = s.value("n_train", cfg.synthesis.n_train);
      cfg.synthesis.n_test = s.value("n_test", cfg.synthesis.n_test);
      cfg.synthesis.sigma = s.value("sigma", cfg.synthesis.sigma);
      cfg.synthesis.pair_rate = s.value("pair_rate", cfg.synthesis.pair_rate);
      cfg.synthesis.delta = s.value("delta", cfg.synthesis.delta);
      cfg.synthesis.background_count =
          s.value("background_count", cfg.synthesis.background_count);
      cfg.synthesis.background_file =
          s.value("background_file", cfg.synthesis.background_file);
      cfg.synthesis.depth_noise_sigma =
          s.value("depth_noise_sigma", cfg.synthesis.depth_noise_sigma);
      cfg.synthesis.grasps_file = s.value("grasps", cfg.synthesis.grasps_file);
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      cfg.model.k = m.value("k", cfg.model.k);
      cfg.model.lambda = m.value("lambda", cfg.model.lambda);
      cfg.model.epochs = m.value("epochs", cfg.model.epochs);
    }
    if (j.contains("eval")) cfg.eval.tau3d = j.at("eval").value("tau3d", cfg.eval.tau3d);
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      cfg.paths.train = p.value("train", cfg.paths.train);
      cfg.paths.test = p.value("test", cfg.paths.test);
      cfg.paths.model = p.value("model", cfg.paths.model);
      cfg.paths.report = p.value("report", cfg.paths.report);
    }
    cfg.threads = j.value("threads", cfg.threads);
    cfg.cloud_spacing_scale =
        j.value("cloud_spacing_scale", cfg.cloud_spacing_scale);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config field error: " + std::string(e.what()));
  }
  cfg.validate();
  return cfg;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j;
  j["camera"] = camera_to_json(camera);
  j["seed"] = seed;
  j["synthesis"] = {{"n_train", synthesis.n_train},
                    {"n_test", synthesis.n_test},
                    {"sigma", synthesis.sigma},
                    {"pair_rate", synthesis.pair_rate},
                    {"delta", synthesis.delta},
                    {"background_count", synthesis.background_count},
                    {"background_file", synthesis.background_file},
                    {"depth_noise_sigma", synthesis.depth_noise_sigma},
                    {"grasps", synthesis.grasps_file}};
  j["model"] = {{"k", model.k}, {"lambda", model.lambda}, {"epochs", model.epochs}};
  j["eval"] = {{"tau3d", eval.tau3d}};
  j["paths"] = {{"train", paths.train},
                {"test", paths.test},
                {"model", paths.model},
                {"report", paths.report}};
  j["threads"] = threads;
  j["cloud_spacing_scale"] = cloud_spacing_scale;
  return j;
}

void RunConfig::validate() const {
  camera.validate();
  const std::set<std::string> distinct{paths.train, paths.test, paths.model,
                                       paths.report};
  if (distinct.size() != 4)
    throw ConfigError("config paths must be pairwise distinct");
  if (model.k < 2) throw ConfigError("model.k must be >= 2");
  if (model.epochs < 1) throw ConfigError("model.epochs must be >= 1");
  if (!(model.lambda > 0.0)) throw ConfigError("model.lambda must be > 0");
  if (synthesis.sigma < 0.0) throw ConfigError("synthesis.sigma must be >= 0");
  if (synthesis.pair_rate < 0.0 || synthesis.pair_rate > 1.0)
    throw ConfigError("synthesis.pair_rate must be in [0, 1]");
  if (synthesis.n_train == 0 || synthesis.n_test == 0)
    throw ConfigError("synthesis.n_train and n_test must be > 0");
}

std::uint64_t RunConfig::dataset_hash(bool test_split) const {
  nlohmann::json j = to_json();
  nlohmann::json scope;
  scope["camera"] = j["camera"];
  scope["synthesis"] = j["synthesis"];
  scope["seed"] = seed;
  scope["split"] = test_split ? "test" : "train";
  scope["cloud_spacing_scale"] = cloud_spacing_scale;
  return json_hash(scope);
}

std::uint64_t RunConfig::model_hash() const {
  nlohmann::json scope;
  scope["dataset"] = hash_hex(dataset_hash(false));
  scope["model"] = to_json()["model"];
  scope["seed"] = seed;
  return json_hash(scope);
}

std::uint64_t RunConfig::report_hash() const {
  nlohmann::json scope;
  scope["model"] = hash_hex(model_hash());
  scope["test"] = hash_hex(dataset_hash(true));
  scope["tau3d"] = eval.tau3d;
  return json_hash(scope);
}

}  // namespace egovol
