#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "egovol/features.hpp"
#include "egovol/rng.hpp"
#include "egovol/synthesis.hpp"

namespace egovol {

constexpr int kClusterDim = 21;  // elbow + wrist + 5 knuckles, 3D each

// The 21-dim pose-space vector clustering operates on: 3D elbow, wrist and
// finger-base joints of the dominant (right) arm.
Eigen::VectorXd cluster_vector(const ExemplarRecord& rec);

struct PoseClass {
  int class_id = 0;
  Eigen::VectorXd centroid;  // kClusterDim
  Eigen::Matrix<double, 3, kKeypointCount> mean_kp3;
  Eigen::Matrix<double, 2, kKeypointCount> mean_kp2;
  int train_count = 0;
};

struct ClusterResult {
  std::vector<PoseClass> classes;
  std::vector<int> labels;  // one per record
};

// What clustering needs from a record; records can be streamed from disk
// and reduced to this without keeping their depth maps around.
struct ClusterInput {
  Eigen::VectorXd vec;  // kClusterDim
  Eigen::Matrix<float, 3, kKeypointCount> kp3;
  Eigen::Matrix<float, 2, kKeypointCount> kp2;
};

ClusterInput cluster_input(const ExemplarRecord& rec);

// Lloyd's iterations with k-means++ seeding until the assignment reaches a
// fixpoint (or 100 iterations). Empty clusters re-seed at the point
// farthest from its assigned centroid. Deterministic given the rng seed.
ClusterResult cluster_poses(const std::vector<ClusterInput>& inputs, int k,
                            Rng& rng);
ClusterResult cluster_poses(const std::vector<ExemplarRecord>& records, int k,
                            Rng& rng);

// Assignment rule shared by clustering and evaluation: nearest centroid,
// ties to the lowest class id.
int nearest_class(const std::vector<PoseClass>& classes,
                  const Eigen::VectorXd& x);

// Per-class linear weights over the dense backfilled voxel feature,
// reshaped to nu x nv x nw; w-major within each (u,v) column, columns in
// (u * nv + v) order.
struct WeightTensor {
  int nu = 0, nv = 0, nw = 0;
  Eigen::VectorXf w;
  double bias = 0.0;

  std::size_t index(int u, int v, int w_) const {
    return (static_cast<std::size_t>(u) * nv + v) * nw + w_;
  }
};

// Suffix sums of a weight tensor along w, with one extra all-zero plane at
// w = nw so sentinel columns contribute nothing. Held in double so the fast
// scorer agrees with the naive one to float-associativity error only.
struct CumsumTensor {
  int nu = 0, nv = 0, nw = 0;  // nw is the underlying tensor's depth
  Eigen::VectorXd w;           // size nu * nv * (nw + 1)

  std::size_t index(int u, int v, int w_) const {
    return (static_cast<std::size_t>(u) * nv + v) * (nw + 1) + w_;
  }
};

CumsumTensor fold_weights(const WeightTensor& beta);
std::vector<CumsumTensor> fold_weights(const std::vector<WeightTensor>& betas);

// Exact inverse of fold_weights (adjacent differences), used to verify
// stored models.
WeightTensor difference(const CumsumTensor& folded);

struct TrainParams {
  double lambda = 1e-4;
  int epochs = 30;
  std::uint64_t seed = 1;
  int threads = 0;
};

// One-vs-all hinge-loss training, one independent primal subgradient
// problem per class (Pegasos step schedule 1/(lambda t)). Determinism: the
// example order is a per-class seeded shuffle, so fixed seed + data give
// bit-identical weights.
std::vector<WeightTensor> train_ova(const std::vector<QuantizedDepthMap>& features,
                                    const std::vector<int>& labels, int k,
                                    const CameraModel& cam,
                                    const TrainParams& params);

struct TrainMeta {
  double lambda = 0.0;
  int epochs = 0;
  std::uint64_t seed = 0;
};

// Immutable after construction/load; scoring is pure and thread-safe.
class PoseModel {
 public:
  PoseModel() = default;
  PoseModel(CameraModel cam, std::vector<PoseClass> classes,
            std::vector<WeightTensor> betas, TrainMeta meta);

  const CameraModel& camera() const { return cam_; }
  int k() const { return static_cast<int>(classes_.size()); }
  const std::vector<PoseClass>& classes() const { return classes_; }
  const std::vector<WeightTensor>& betas() const { return betas_; }
  const TrainMeta& meta() const { return meta_; }
  double bias(int cls) const { return betas_[cls].bias; }

  CumsumTensor cumsum(int cls) const;  // materialized from the packed table

  // Class-contiguous packed cumsum table: index (column * (nw+1) + w) * k
  // + class. This is what the fast scorer streams through.
  const Eigen::VectorXd& packed() const { return packed_; }

 private:
  CameraModel cam_;
  std::vector<PoseClass> classes_;
  std::vector<WeightTensor> betas_;
  Eigen::VectorXd packed_;
  TrainMeta meta_;
};

// Testing oracle: full dot product of each weight tensor with the dense
// backfilled grid (u-major, then v, then w; double accumulation).
Eigen::VectorXd score_naive(const PoseModel& model, const VoxelGrid& grid);

struct ScoreStats {
  std::uint64_t lookup_adds = 0;
};

// The joint feature-extraction/classification loop: one cumsum lookup-add
// per (column, class), nu * nv * k in total, independent of nw.
Eigen::VectorXd score_fast(const PoseModel& model, const QuantizedDepthMap& q,
                           ScoreStats* stats = nullptr);

struct Classification {
  int class_id = 0;
  double score = 0.0;
};

// Argmax over score_fast; exact ties go to the lowest class id. The winning
// class's mean keypoints (model.classes()[id]) are the pose estimate.
Classification classify(const PoseModel& model, const QuantizedDepthMap& q);

}  // namespace egovol
