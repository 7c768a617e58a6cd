#include "egovol/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "egovol/parallel.hpp"

namespace egovol {

Eigen::VectorXd cluster_vector(const ExemplarRecord& rec) {
  const ExemplarArm& arm = rec.arms.at(0);
  Eigen::VectorXd x(kClusterDim);
  int at = 0;
  auto put = [&](int kp) {
    x.segment<3>(at) = arm.kp3.col(kp).cast<double>();
    at += 3;
  };
  put(kKpElbow);
  put(kKpWrist);
  for (int f = 0; f < kFingerCount; ++f) put(kp_mcp(f));
  return x;
}

ClusterInput cluster_input(const ExemplarRecord& rec) {
  return {cluster_vector(rec), rec.arms.at(0).kp3, rec.arms.at(0).kp2};
}

int nearest_class(const std::vector<PoseClass>& classes,
                  const Eigen::VectorXd& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < classes.size(); ++c) {
    const double d = (classes[c].centroid - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

namespace {

int nearest_centroid(const Eigen::MatrixXd& centroids, const Eigen::VectorXd& x) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.cols(); ++c) {
    const double d = (centroids.col(c) - x).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

ClusterResult cluster_poses(const std::vector<ExemplarRecord>& records, int k,
                            Rng& rng) {
  std::vector<ClusterInput> inputs;
  inputs.reserve(records.size());
  for (const auto& r : records) inputs.push_back(cluster_input(r));
  return cluster_poses(inputs, k, rng);
}

ClusterResult cluster_poses(const std::vector<ClusterInput>& inputs, int k,
                            Rng& rng) {
  const int n = static_cast<int>(inputs.size());
  if (k < 1) throw ConfigError("cluster_poses: k must be >= 1");
  if (n < k)
    throw ConfigError("cluster_poses: " + std::to_string(n) +
                      " records cannot fill " + std::to_string(k) + " clusters");

  Eigen::MatrixXd data(kClusterDim, n);
  for (int i = 0; i < n; ++i) data.col(i) = inputs[i].vec;

  // k-means++ seeding
  Eigen::MatrixXd centroids(kClusterDim, k);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());
  centroids.col(0) = data.col(rng.uniform_int(n));
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i],
                       (data.col(i) - centroids.col(c - 1)).squaredNorm());
      total += d2[i];
    }
    double pick = rng.uniform() * total;
    int chosen = n - 1;
    for (int i = 0; i < n; ++i) {
      pick -= d2[i];
      if (pick <= 0.0) {
        chosen = i;
        break;
      }
    }
    centroids.col(c) = data.col(chosen);
  }

  std::vector<int> labels(n, -1);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = nearest_centroid(centroids, data.col(i));
      if (c != labels[i]) {
        labels[i] = c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(kClusterDim, k);
    std::vector<int> counts(k, 0);
    for (int i = 0; i < n; ++i) {
      sums.col(labels[i]) += data.col(i);
      counts[labels[i]] += 1;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centroids.col(c) = sums.col(c) / counts[c];
      } else {
        // re-seed at the point farthest from its assigned centroid
        int far = 0;
        double far_d = -1.0;
        for (int i = 0; i < n; ++i) {
          const double d = (data.col(i) - centroids.col(labels[i])).squaredNorm();
          if (d > far_d) {
            far_d = d;
            far = i;
          }
        }
        centroids.col(c) = data.col(far);
        labels[far] = c;
        changed = true;
      }
    }
    if (!changed) break;
  }

  ClusterResult out;
  out.labels = labels;
  out.classes.assign(k, PoseClass{});
  std::vector<Eigen::Matrix<double, 3, kKeypointCount>> kp3_sum(
      k, Eigen::Matrix<double, 3, kKeypointCount>::Zero());
  std::vector<Eigen::Matrix<double, 2, kKeypointCount>> kp2_sum(
      k, Eigen::Matrix<double, 2, kKeypointCount>::Zero());
  std::vector<Eigen::Matrix<double, 1, kKeypointCount>> kp2_n(
      k, Eigen::Matrix<double, 1, kKeypointCount>::Zero());

  for (int i = 0; i < n; ++i) {
    const int c = labels[i];
    out.classes[c].train_count += 1;
    kp3_sum[c] += inputs[i].kp3.cast<double>();
    for (int kp = 0; kp < kKeypointCount; ++kp) {
      if (std::isfinite(inputs[i].kp2(0, kp))) {
        kp2_sum[c].col(kp) += inputs[i].kp2.col(kp).cast<double>();
        kp2_n[c](kp) += 1.0;
      }
    }
  }
  for (int c = 0; c < k; ++c) {
    PoseClass& cls = out.classes[c];
    cls.class_id = c;
    cls.centroid = centroids.col(c);
    const double cnt = std::max(1, cls.train_count);
    cls.mean_kp3 = kp3_sum[c] / cnt;
    for (int kp = 0; kp < kKeypointCount; ++kp)
      cls.mean_kp2.col(kp) = kp2_n[c](kp) > 0.0
                                 ? (kp2_sum[c].col(kp) / kp2_n[c](kp)).eval()
                                 : Eigen::Vector2d::Constant(
                                       std::numeric_limits<double>::quiet_NaN());
  }
  return out;
}

namespace {

// Backfilled-column dot product: sum of w over [z', nw) per column equals
// the dense feature dot product without materializing the grid.
double sparse_dot(const Eigen::VectorXd& w, const QuantizedDepthMap& q,
                  int nw) {
  double acc = 0.0;
  std::size_t col_base = 0;
  for (int u = 0; u < q.nu; ++u) {
    for (int v = 0; v < q.nv; ++v, col_base += nw) {
      const int z = q.at(u, v);
      for (int d = z; d < nw; ++d) acc += w[col_base + d];
    }
  }
  return acc;
}

void sparse_add(Eigen::VectorXd& w, const QuantizedDepthMap& q, int nw,
                double scale) {
  std::size_t col_base = 0;
  for (int u = 0; u < q.nu; ++u) {
    for (int v = 0; v < q.nv; ++v, col_base += nw) {
      const int z = q.at(u, v);
      for (int d = z; d < nw; ++d) w[col_base + d] += scale;
    }
  }
}

}  // namespace

std::vector<WeightTensor> train_ova(const std::vector<QuantizedDepthMap>& features,
                                    const std::vector<int>& labels, int k,
                                    const CameraModel& cam,
                                    const TrainParams& params) {
  const std::size_t n = features.size();
  if (labels.size() != n)
    throw StructuralError("train_ova: feature/label count mismatch");
  if (n == 0) throw ConfigError("train_ova: empty training set");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw StructuralError("train_ova: label out of range");
    if (!features[i].matches(cam))
      throw StructuralError("train_ova: feature grid mismatch");
  }
  std::vector<int> positives(k, 0);
  for (int label : labels) positives[label] += 1;
  std::string empty;
  for (int c = 0; c < k; ++c)
    if (positives[c] == 0) empty += (empty.empty() ? "" : ", ") + std::to_string(c);
  if (!empty.empty())
    throw ConfigError("train_ova: classes without positives: " + empty);

  const std::size_t dim =
      static_cast<std::size_t>(cam.nu) * cam.nv * cam.nw;
  std::vector<WeightTensor> out(k);

  parallel_blocks(k, params.threads, [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      Rng rng(derive_seed(params.seed ^ 0x5fa5u, c));
      std::vector<std::uint32_t> order(n);
      std::iota(order.begin(), order.end(), 0);

      // Pegasos with the usual scale trick: w = s * v, so the per-step
      // (1 - eta*lambda) shrink is O(1).
      Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
      double s = 1.0;
      double bias = 0.0;
      std::uint64_t t = 1;
      for (int epoch = 0; epoch < params.epochs; ++epoch) {
        // Fisher-Yates, seeded per class
        for (std::size_t i = n - 1; i > 0; --i)
          std::swap(order[i], order[rng.uniform_int(i + 1)]);
        for (std::size_t oi = 0; oi < n; ++oi) {
          const std::size_t i = order[oi];
          const double y = labels[i] == static_cast<int>(c) ? 1.0 : -1.0;
          ++t;
          const double eta = 1.0 / (params.lambda * t);
          const double margin =
              y * (s * sparse_dot(v, features[i], cam.nw) + bias);
          s *= 1.0 - 1.0 / t;  // = 1 - eta * lambda
          if (margin < 1.0) {
            sparse_add(v, features[i], cam.nw, eta * y / s);
            bias += eta * y;
          }
        }
      }

      WeightTensor& beta = out[c];
      beta.nu = cam.nu;
      beta.nv = cam.nv;
      beta.nw = cam.nw;
      beta.w = (s * v).cast<float>();
      beta.bias = bias;
    }
  });
  return out;
}

CumsumTensor fold_weights(const WeightTensor& beta) {
  CumsumTensor folded;
  folded.nu = beta.nu;
  folded.nv = beta.nv;
  folded.nw = beta.nw;
  folded.w.resize(static_cast<std::size_t>(beta.nu) * beta.nv * (beta.nw + 1));
  std::size_t src = 0, dst = 0;
  for (int u = 0; u < beta.nu; ++u) {
    for (int v = 0; v < beta.nv; ++v, src += beta.nw, dst += beta.nw + 1) {
      folded.w[dst + beta.nw] = 0.0;
      for (int w = beta.nw - 1; w >= 0; --w)
        folded.w[dst + w] =
            folded.w[dst + w + 1] + static_cast<double>(beta.w[src + w]);
    }
  }
  return folded;
}

std::vector<CumsumTensor> fold_weights(const std::vector<WeightTensor>& betas) {
  std::vector<CumsumTensor> out;
  out.reserve(betas.size());
  for (const auto& b : betas) out.push_back(fold_weights(b));
  return out;
}

WeightTensor difference(const CumsumTensor& folded) {
  WeightTensor beta;
  beta.nu = folded.nu;
  beta.nv = folded.nv;
  beta.nw = folded.nw;
  beta.w.resize(static_cast<std::size_t>(folded.nu) * folded.nv * folded.nw);
  std::size_t src = 0, dst = 0;
  for (int u = 0; u < folded.nu; ++u) {
    for (int v = 0; v < folded.nv; ++v, src += folded.nw + 1, dst += folded.nw) {
      for (int w = 0; w < folded.nw; ++w)
        beta.w[dst + w] =
            static_cast<float>(folded.w[src + w] - folded.w[src + w + 1]);
    }
  }
  return beta;
}

PoseModel::PoseModel(CameraModel cam, std::vector<PoseClass> classes,
                     std::vector<WeightTensor> betas, TrainMeta meta)
    : cam_(std::move(cam)), classes_(std::move(classes)),
      betas_(std::move(betas)), meta_(meta) {
  if (classes_.size() != betas_.size())
    throw StructuralError("PoseModel: class/weight list size mismatch");
  if (classes_.empty()) throw StructuralError("PoseModel: no classes");
  for (const auto& b : betas_)
    if (b.nu != cam_.nu || b.nv != cam_.nv || b.nw != cam_.nw)
      throw StructuralError("PoseModel: weight tensor grid mismatch");

  const int k = static_cast<int>(classes_.size());
  const std::size_t cols = static_cast<std::size_t>(cam_.nu) * cam_.nv;
  packed_.resize(cols * (cam_.nw + 1) * k);
  for (int c = 0; c < k; ++c) {
    const CumsumTensor folded = fold_weights(betas_[c]);
    for (std::size_t i = 0; i < cols * (cam_.nw + 1); ++i)
      packed_[i * k + c] = folded.w[i];
  }
}

CumsumTensor PoseModel::cumsum(int cls) const {
  CumsumTensor folded;
  folded.nu = cam_.nu;
  folded.nv = cam_.nv;
  folded.nw = cam_.nw;
  const int k = this->k();
  const std::size_t planes = static_cast<std::size_t>(cam_.nu) * cam_.nv *
                             (cam_.nw + 1);
  folded.w.resize(planes);
  for (std::size_t i = 0; i < planes; ++i) folded.w[i] = packed_[i * k + cls];
  return folded;
}

Eigen::VectorXd score_naive(const PoseModel& model, const VoxelGrid& grid) {
  const CameraModel& cam = model.camera();
  if (grid.nu != cam.nu || grid.nv != cam.nv || grid.nw != cam.nw)
    throw StructuralError("score_naive: grid dimensions do not match model");

  const int k = model.k();
  Eigen::VectorXd scores(k);
  for (int c = 0; c < k; ++c) {
    const WeightTensor& beta = model.betas()[c];
    double acc = 0.0;
    std::size_t i = 0;
    for (int u = 0; u < cam.nu; ++u)
      for (int v = 0; v < cam.nv; ++v)
        for (int w = 0; w < cam.nw; ++w, ++i)
          if (grid.b[i]) acc += static_cast<double>(beta.w[i]);
    scores[c] = acc + beta.bias;
  }
  return scores;
}

Eigen::VectorXd score_fast(const PoseModel& model, const QuantizedDepthMap& q,
                           ScoreStats* stats) {
  const CameraModel& cam = model.camera();
  if (!q.matches(cam))
    throw StructuralError("score_fast: quantized map does not match model");

  const int k = model.k();
  Eigen::VectorXd scores(k);
  for (int c = 0; c < k; ++c) scores[c] = model.bias(c);

  const double* packed = model.packed().data();
  double* acc = scores.data();
  std::uint64_t ops = 0;
  std::size_t col = 0;
  for (int u = 0; u < cam.nu; ++u) {
    for (int v = 0; v < cam.nv; ++v, ++col) {
      const std::size_t base = (col * (cam.nw + 1) + q.at(u, v)) * k;
      for (int c = 0; c < k; ++c) acc[c] += packed[base + c];
      ops += k;
    }
  }
  if (stats) stats->lookup_adds += ops;
  return scores;
}

Classification classify(const PoseModel& model, const QuantizedDepthMap& q) {
  const Eigen::VectorXd scores = score_fast(model, q);
  int best = 0;
  for (int c = 1; c < model.k(); ++c)
    if (scores[c] > scores[best]) best = c;  // ties keep the lowest id
  return {best, scores[best]};
}

}  // namespace egovol
