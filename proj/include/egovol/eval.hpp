#pragma once

#include <functional>
#include <string>
#include <vector>

#include "egovol/dataset_io.hpp"
#include "egovol/model.hpp"

namespace egovol {

struct LatencyStats {
  double mean_s = 0.0;
  double p95_s = 0.0;
};

struct EvalReport {
  int n = 0;
  double cluster_accuracy = 0.0;    // predicted class == nearest-centroid label
  double detection_accuracy = 0.0;  // predicted mean wrist within tau3d of truth
  double mean_kp3_err_m = 0.0;
  double mean_kp2_err_px = 0.0;
  double tau3d = 0.0;
  Eigen::MatrixXi confusion;  // rows: ground-truth label, cols: prediction
  LatencyStats latency;       // quantize + score + argmax, excludes all I/O
};

// Prediction hook so evaluation plumbing can be exercised with stub
// classifiers (e.g. nearest-centroid) in place of the SVM.
using Predictor = std::function<int(const ExemplarRecord&)>;

EvalReport evaluate(const PoseModel& model,
                    const std::vector<ExemplarRecord>& test, double tau3d);

EvalReport evaluate_with(const std::vector<PoseClass>& classes,
                         const Predictor& predict,
                         const std::vector<ExemplarRecord>& test, double tau3d);

// Streaming variant; checks the dataset camera against the model's.
EvalReport evaluate_dataset(const PoseModel& model, const std::string& path,
                            double tau3d);

enum class SweepAxis { kK, kGrid, kTrainSize };

SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepConfig {
  int k = 20;
  TrainParams train;
  double tau3d = 0.10;
  std::uint64_t cluster_seed = 1;
};

struct SweepPoint {
  std::string value;
  EvalReport report;
};

// Trains and evaluates once per axis value with a shared seed. Datasets are
// re-streamed per value, so only quantized features stay in memory. Grid
// values are written NUxNVxNW; k and train_size values are integers.
std::vector<SweepPoint> sweep(SweepAxis axis,
                              const std::vector<std::string>& values,
                              const std::string& train_path,
                              const std::string& test_path,
                              const SweepConfig& cfg);

std::string sweep_csv(const std::vector<SweepPoint>& points,
                      const std::string& axis_name);

struct BenchResult {
  int frames = 0;
  LatencyStats latency;
  std::uint64_t lookup_adds_per_frame = 0;
  double fps = 0.0;
};

// Wall-clock quantize + score_fast + argmax per frame; needs >= 100 frames.
BenchResult bench_throughput(const PoseModel& model,
                             const std::vector<DepthMap>& frames);

// Bit-packed binary features with Hamming nearest neighbor; the stub
// classifier used when comparing feature variants head to head.
struct BitFeature {
  std::size_t bits = 0;
  std::vector<std::uint64_t> words;
};

BitFeature pack_bits(const VoxelGrid& g);
BitFeature pack_bits(const OrthoGrid& g);

int nn_predict(const std::vector<BitFeature>& train,
               const std::vector<int>& labels, const BitFeature& query);

double nn_accuracy(const std::vector<BitFeature>& train,
                   const std::vector<int>& train_labels,
                   const std::vector<BitFeature>& test,
                   const std::vector<int>& test_labels, int threads = 0);

}  // namespace egovol
