#include "egovol/eval.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <sstream>

#include "egovol/parallel.hpp"

namespace egovol {

namespace {

using Clock = std::chrono::steady_clock;

bool sensor_equal(const CameraModel& a, const CameraModel& b) {
  return a.f == b.f && a.cx == b.cx && a.cy == b.cy && a.width == b.width &&
         a.height == b.height;
}

LatencyStats latency_from(std::vector<double>& seconds) {
  LatencyStats out;
  if (seconds.empty()) return out;
  double sum = 0.0;
  for (double s : seconds) sum += s;
  out.mean_s = sum / seconds.size();
  std::sort(seconds.begin(), seconds.end());
  const std::size_t idx = static_cast<std::size_t>(
      std::ceil(0.95 * seconds.size())) - 1;
  out.p95_s = seconds[std::min(idx, seconds.size() - 1)];
  return out;
}

struct EvalAccumulator {
  explicit EvalAccumulator(int k, double tau) : tau3d(tau) {
    confusion = Eigen::MatrixXi::Zero(k, k);
  }

  void add(const std::vector<PoseClass>& classes, const ExemplarRecord& rec,
           int predicted, double seconds) {
    const int gt = nearest_class(classes, cluster_vector(rec));
    confusion(gt, predicted) += 1;
    n += 1;
    if (predicted == gt) cluster_hits += 1;

    const PoseClass& cls = classes[predicted];
    const Eigen::Vector3d gt_wrist =
        rec.arms[0].kp3.col(kKpWrist).cast<double>();
    if ((cls.mean_kp3.col(kKpWrist) - gt_wrist).norm() <= tau3d)
      detection_hits += 1;

    kp3_err_sum +=
        (cls.mean_kp3 - rec.arms[0].kp3.cast<double>()).colwise().norm().mean();
    double err2 = 0.0;
    int n2 = 0;
    for (int kp = 0; kp < kKeypointCount; ++kp) {
      if (!std::isfinite(rec.arms[0].kp2(0, kp))) continue;
      if (!std::isfinite(cls.mean_kp2(0, kp))) continue;
      err2 += (cls.mean_kp2.col(kp) - rec.arms[0].kp2.col(kp).cast<double>())
                  .norm();
      n2 += 1;
    }
    if (n2 > 0) {
      kp2_err_sum += err2 / n2;
      kp2_frames += 1;
    }
    times.push_back(seconds);
  }

  EvalReport finish() {
    EvalReport r;
    r.n = n;
    r.tau3d = tau3d;
    r.cluster_accuracy = n > 0 ? static_cast<double>(cluster_hits) / n : 0.0;
    r.detection_accuracy = n > 0 ? static_cast<double>(detection_hits) / n : 0.0;
    r.mean_kp3_err_m = n > 0 ? kp3_err_sum / n : 0.0;
    r.mean_kp2_err_px = kp2_frames > 0 ? kp2_err_sum / kp2_frames : 0.0;
    r.confusion = confusion;
    r.latency = latency_from(times);
    return r;
  }

  double tau3d;
  int n = 0;
  int cluster_hits = 0;
  int detection_hits = 0;
  double kp3_err_sum = 0.0;
  double kp2_err_sum = 0.0;
  int kp2_frames = 0;
  Eigen::MatrixXi confusion;
  std::vector<double> times;
};

int predict_frame(const PoseModel& model, const ExemplarRecord& rec) {
  const QuantizedDepthMap q = quantize_depth(model.camera(), rec.depth);
  return classify(model, q).class_id;
}

}  // namespace

EvalReport evaluate_with(const std::vector<PoseClass>& classes,
                         const Predictor& predict,
                         const std::vector<ExemplarRecord>& test,
                         double tau3d) {
  EvalAccumulator acc(static_cast<int>(classes.size()), tau3d);
  for (const auto& rec : test) {
    const auto t0 = Clock::now();
    const int predicted = predict(rec);
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    acc.add(classes, rec, predicted, dt);
  }
  return acc.finish();
}

EvalReport evaluate(const PoseModel& model,
                    const std::vector<ExemplarRecord>& test, double tau3d) {
  return evaluate_with(
      model.classes(),
      [&model](const ExemplarRecord& rec) { return predict_frame(model, rec); },
      test, tau3d);
}

EvalReport evaluate_dataset(const PoseModel& model, const std::string& path,
                            double tau3d) {
  DatasetReader reader(path);
  if (!sensor_equal(reader.header().cam, model.camera()))
    throw ConfigError("evaluate: dataset camera does not match model camera");

  EvalAccumulator acc(model.k(), tau3d);
  ExemplarRecord rec;
  while (reader.next(rec)) {
    const auto t0 = Clock::now();
    const int predicted = predict_frame(model, rec);
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    acc.add(model.classes(), rec, predicted, dt);
  }
  return acc.finish();
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "k") return SweepAxis::kK;
  if (s == "grid") return SweepAxis::kGrid;
  if (s == "train_size") return SweepAxis::kTrainSize;
  throw ConfigError("unknown sweep axis: " + s + " (want k|grid|train_size)");
}

namespace {

CameraModel grid_variant(const CameraModel& base, const std::string& value) {
  CameraModel cam = base;
  char x1 = 0, x2 = 0;
  std::istringstream is(value);
  if (!(is >> cam.nu >> x1 >> cam.nv >> x2 >> cam.nw) || x1 != 'x' || x2 != 'x')
    throw ConfigError("grid value must look like 32x24x35, got: " + value);
  cam.validate();
  return cam;
}

std::vector<QuantizedDepthMap> stream_features(const std::string& path,
                                               const CameraModel& cam,
                                               std::size_t limit) {
  DatasetReader reader(path);
  std::vector<QuantizedDepthMap> features;
  features.reserve(std::min<std::size_t>(limit, reader.count()));
  ExemplarRecord rec;
  while (features.size() < limit && reader.next(rec))
    features.push_back(quantize_depth(cam, rec.depth));
  return features;
}

std::vector<ClusterInput> stream_cluster_inputs(const std::string& path) {
  DatasetReader reader(path);
  std::vector<ClusterInput> inputs;
  inputs.reserve(reader.count());
  ExemplarRecord rec;
  while (reader.next(rec)) inputs.push_back(cluster_input(rec));
  return inputs;
}

}  // namespace

std::vector<SweepPoint> sweep(SweepAxis axis,
                              const std::vector<std::string>& values,
                              const std::string& train_path,
                              const std::string& test_path,
                              const SweepConfig& cfg) {
  if (values.empty()) throw ConfigError("sweep: no axis values given");

  const std::vector<ClusterInput> inputs = stream_cluster_inputs(train_path);
  const CameraModel base_cam = DatasetReader(train_path).header().cam;

  std::vector<SweepPoint> points;
  for (const std::string& value : values) {
    CameraModel cam = base_cam;
    int k = cfg.k;
    std::size_t train_size = inputs.size();
    if (axis == SweepAxis::kK) {
      k = std::stoi(value);
    } else if (axis == SweepAxis::kTrainSize) {
      train_size = std::min<std::size_t>(std::stoul(value), inputs.size());
    } else {
      cam = grid_variant(base_cam, value);
    }

    std::vector<ClusterInput> subset(inputs.begin(),
                                     inputs.begin() + train_size);
    Rng rng(cfg.cluster_seed);
    const ClusterResult clusters = cluster_poses(subset, k, rng);
    const std::vector<QuantizedDepthMap> features =
        stream_features(train_path, cam, train_size);
    std::vector<WeightTensor> betas =
        train_ova(features, clusters.labels, k, cam, cfg.train);
    PoseModel model(cam, clusters.classes, std::move(betas),
                    {cfg.train.lambda, cfg.train.epochs, cfg.train.seed});
    points.push_back({value, evaluate_dataset(model, test_path, cfg.tau3d)});
  }
  return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& points,
                      const std::string& axis_name) {
  std::ostringstream os;
  os << axis_name
     << ",n,cluster_accuracy,detection_accuracy,mean_kp3_err_m,"
        "mean_kp2_err_px,latency_mean_s,latency_p95_s\n";
  for (const auto& p : points) {
    os << p.value << ',' << p.report.n << ',' << p.report.cluster_accuracy
       << ',' << p.report.detection_accuracy << ',' << p.report.mean_kp3_err_m
       << ',' << p.report.mean_kp2_err_px << ',' << p.report.latency.mean_s
       << ',' << p.report.latency.p95_s << '\n';
  }
  return os.str();
}

BenchResult bench_throughput(const PoseModel& model,
                             const std::vector<DepthMap>& frames) {
  if (frames.size() < 100)
    throw ConfigError("bench_throughput needs at least 100 frames, got " +
                      std::to_string(frames.size()));

  BenchResult out;
  out.frames = static_cast<int>(frames.size());
  std::vector<double> times;
  times.reserve(frames.size());
  ScoreStats stats;
  for (const auto& frame : frames) {
    const auto t0 = Clock::now();
    const QuantizedDepthMap q = quantize_depth(model.camera(), frame);
    stats.lookup_adds = 0;
    const Eigen::VectorXd scores = score_fast(model, q, &stats);
    int best = 0;
    for (int c = 1; c < model.k(); ++c)
      if (scores[c] > scores[best]) best = c;
    (void)best;
    times.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  }
  out.lookup_adds_per_frame = stats.lookup_adds;
  out.latency = latency_from(times);
  out.fps = out.latency.mean_s > 0.0 ? 1.0 / out.latency.mean_s : 0.0;
  return out;
}

namespace {

BitFeature pack_bytes(const std::vector<std::uint8_t>& bytes) {
  BitFeature f;
  f.bits = bytes.size();
  f.words.assign((bytes.size() + 63) / 64, 0);
  for (std::size_t i = 0; i < bytes.size(); ++i)
    if (bytes[i]) f.words[i >> 6] |= std::uint64_t{1} << (i & 63);
  return f;
}

}  // namespace

BitFeature pack_bits(const VoxelGrid& g) { return pack_bytes(g.b); }
BitFeature pack_bits(const OrthoGrid& g) { return pack_bytes(g.b); }

int nn_predict(const std::vector<BitFeature>& train,
               const std::vector<int>& labels, const BitFeature& query) {
  if (train.empty()) throw StructuralError("nn_predict: empty training set");
  std::size_t best = 0;
  std::uint64_t best_d = ~std::uint64_t{0};
  for (std::size_t i = 0; i < train.size(); ++i) {
    std::uint64_t d = 0;
    const std::size_t nw = query.words.size();
    for (std::size_t w = 0; w < nw; ++w)
      d += std::popcount(train[i].words[w] ^ query.words[w]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return labels[best];
}

double nn_accuracy(const std::vector<BitFeature>& train,
                   const std::vector<int>& train_labels,
                   const std::vector<BitFeature>& test,
                   const std::vector<int>& test_labels, int threads) {
  if (test.empty()) return 0.0;
  std::vector<int> hits(test.size(), 0);
  parallel_blocks(test.size(), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
      hits[i] = nn_predict(train, train_labels, test[i]) == test_labels[i];
  });
  int total = 0;
  for (int h : hits) total += h;
  return static_cast<double>(total) / test.size();
}

}  // namespace egovol
