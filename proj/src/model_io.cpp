#include "egovol/model_io.hpp"

#include <cstring>
#include <fstream>

#include "egovol/dataset_io.hpp"

namespace egovol {

namespace {

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw DataError(std::string("truncated model file at ") + what);
  return v;
}

void write_f32(std::ostream& out, const float* p, std::size_t n) {
  out.write(reinterpret_cast<const char*>(p), sizeof(float) * n);
}

void read_f32(std::istream& in, float* p, std::size_t n, const char* what) {
  in.read(reinterpret_cast<char*>(p), sizeof(float) * n);
  if (!in) throw DataError(std::string("truncated model file at ") + what);
}

}  // namespace

void save_model(const PoseModel& model, const std::string& path,
                const nlohmann::json& extra_meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open model for writing: " + path);

  nlohmann::json header = extra_meta;
  header["camera"] = camera_to_json(model.camera());
  header["k"] = model.k();
  header["lambda"] = model.meta().lambda;
  header["epochs"] = model.meta().epochs;
  header["seed"] = model.meta().seed;
  {
    std::vector<int> counts;
    for (const auto& c : model.classes()) counts.push_back(c.train_count);
    header["train_counts"] = counts;
  }
  const std::string js = header.dump();

  out.write(kModelMagic, 4);
  write_pod(out, kModelVersion);
  write_pod(out, static_cast<std::uint32_t>(js.size()));
  out.write(js.data(), js.size());

  for (int c = 0; c < model.k(); ++c) {
    const PoseClass& cls = model.classes()[c];
    out.write(reinterpret_cast<const char*>(cls.centroid.data()),
              sizeof(double) * kClusterDim);
    const Eigen::Matrix<float, 3, kKeypointCount> kp3 =
        cls.mean_kp3.cast<float>();
    const Eigen::Matrix<float, 2, kKeypointCount> kp2 =
        cls.mean_kp2.cast<float>();
    write_f32(out, kp3.data(), 3 * kKeypointCount);
    write_f32(out, kp2.data(), 2 * kKeypointCount);
    write_pod(out, model.bias(c));

    const WeightTensor& beta = model.betas()[c];
    write_f32(out, beta.w.data(), beta.w.size());
    const Eigen::VectorXf folded = model.cumsum(c).w.cast<float>();
    write_f32(out, folded.data(), folded.size());
  }
  out.flush();
  if (!out) throw ConfigError("write failed: " + path);
}

PoseModel load_model(const std::string& path, nlohmann::json* meta_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0)
    throw DataError("model magic mismatch: expected EGOM in " + path);
  const auto version = read_pod<std::uint16_t>(in, "version");
  if (version != kModelVersion)
    throw DataError("model version mismatch: got " + std::to_string(version) +
                    ", expected " + std::to_string(kModelVersion));
  const auto json_len = read_pod<std::uint32_t>(in, "header length");
  std::string js(json_len, '\0');
  in.read(js.data(), json_len);
  if (!in) throw DataError("truncated model header in " + path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("model header json invalid: " + std::string(e.what()));
  }
  const CameraModel cam = camera_from_json(header.at("camera"));
  const int k = header.at("k").get<int>();
  if (k < 1) throw DataError("model header has k < 1");
  TrainMeta meta;
  meta.lambda = header.value("lambda", 0.0);
  meta.epochs = header.value("epochs", 0);
  meta.seed = header.value("seed", std::uint64_t{0});
  std::vector<int> counts = header.value("train_counts", std::vector<int>(k, 0));

  const std::size_t dim = static_cast<std::size_t>(cam.nu) * cam.nv * cam.nw;
  const std::size_t folded_dim =
      static_cast<std::size_t>(cam.nu) * cam.nv * (cam.nw + 1);

  std::vector<PoseClass> classes(k);
  std::vector<WeightTensor> betas(k);
  std::vector<Eigen::VectorXf> stored_folded(k);
  for (int c = 0; c < k; ++c) {
    PoseClass& cls = classes[c];
    cls.class_id = c;
    cls.centroid.resize(kClusterDim);
    in.read(reinterpret_cast<char*>(cls.centroid.data()),
            sizeof(double) * kClusterDim);
    Eigen::Matrix<float, 3, kKeypointCount> kp3;
    Eigen::Matrix<float, 2, kKeypointCount> kp2;
    read_f32(in, kp3.data(), 3 * kKeypointCount, "mean keypoints");
    read_f32(in, kp2.data(), 2 * kKeypointCount, "mean keypoints");
    cls.mean_kp3 = kp3.cast<double>();
    cls.mean_kp2 = kp2.cast<double>();
    cls.train_count = c < static_cast<int>(counts.size()) ? counts[c] : 0;

    WeightTensor& beta = betas[c];
    beta.nu = cam.nu;
    beta.nv = cam.nv;
    beta.nw = cam.nw;
    beta.bias = read_pod<double>(in, "bias");
    beta.w.resize(dim);
    read_f32(in, beta.w.data(), dim, "weight tensor");
    stored_folded[c].resize(folded_dim);
    read_f32(in, stored_folded[c].data(), folded_dim, "cumsum tensor");
  }

  PoseModel model(cam, std::move(classes), std::move(betas), meta);

  // The stored cumsum tensors are redundant; recompute and compare so a
  // corrupted or inconsistent file cannot load.
  for (int c = 0; c < k; ++c) {
    const Eigen::VectorXf recomputed = model.cumsum(c).w.cast<float>();
    if (std::memcmp(recomputed.data(), stored_folded[c].data(),
                    sizeof(float) * folded_dim) != 0)
      throw DataError("model cumsum tensor for class " + std::to_string(c) +
                      " is inconsistent with its weights: " + path);
  }

  if (meta_out) *meta_out = header;
  return model;
}

}  // namespace egovol
