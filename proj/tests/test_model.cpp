#include <doctest.h>

#include "egovol/model.hpp"

using namespace egovol;

namespace {

CameraModel small_cam() {
  CameraModel cam;
  cam.width = 40;
  cam.height = 30;
  cam.nu = 4;
  cam.nv = 3;
  cam.nw = 5;
  cam.cx = 20;
  cam.cy = 15;
  return cam;
}

QuantizedDepthMap sentinel_map(const CameraModel& cam) {
  return QuantizedDepthMap(cam.nu, cam.nv, cam.nw);
}

WeightTensor random_beta(const CameraModel& cam, Rng& rng) {
  WeightTensor beta;
  beta.nu = cam.nu;
  beta.nv = cam.nv;
  beta.nw = cam.nw;
  beta.w.resize(static_cast<Eigen::Index>(cam.nu) * cam.nv * cam.nw);
  for (Eigen::Index i = 0; i < beta.w.size(); ++i)
    beta.w[i] = static_cast<float>(rng.uniform(-1.0, 1.0));
  beta.bias = rng.uniform(-0.5, 0.5);
  return beta;
}

PoseModel random_model(const CameraModel& cam, int k, Rng& rng) {
  std::vector<PoseClass> classes(k);
  std::vector<WeightTensor> betas;
  for (int c = 0; c < k; ++c) {
    classes[c].class_id = c;
    classes[c].centroid = Eigen::VectorXd::Zero(kClusterDim);
    classes[c].mean_kp3.setZero();
    classes[c].mean_kp2.setZero();
    betas.push_back(random_beta(cam, rng));
  }
  return PoseModel(cam, std::move(classes), std::move(betas), {});
}

QuantizedDepthMap random_q(const CameraModel& cam, Rng& rng) {
  QuantizedDepthMap q(cam.nu, cam.nv, cam.nw);
  for (int u = 0; u < cam.nu; ++u)
    for (int v = 0; v < cam.nv; ++v)
      q.at(u, v) = static_cast<std::uint16_t>(rng.uniform_int(cam.nw + 1));
  return q;
}

ClusterInput point_input(const Eigen::VectorXd& v) {
  ClusterInput in;
  in.vec = v;
  in.kp3.setZero();
  in.kp2.setZero();
  // keep the wrist coordinate tied to the cluster vector so mean keypoints
  // are distinguishable
  in.kp3(0, kKpWrist) = static_cast<float>(v[0]);
  return in;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("kmeans recovers well-separated groups") {
  Rng rng(31);
  std::vector<ClusterInput> inputs;
  for (int i = 0; i < 60; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kClusterDim);
    const bool raised = i % 2 == 0;
    for (int d = 0; d < kClusterDim; ++d)
      v[d] = (raised ? 2.0 : -2.0) + 0.05 * rng.normal();
    inputs.push_back(point_input(v));
  }
  Rng seed(1);
  const ClusterResult res = cluster_poses(inputs, 2, seed);

  // brute-force nearest-centroid oracle and group purity
  for (int i = 0; i < 60; ++i) {
    const double d0 = (inputs[i].vec - res.classes[0].centroid).squaredNorm();
    const double d1 = (inputs[i].vec - res.classes[1].centroid).squaredNorm();
    CHECK(res.labels[i] == (d1 < d0 ? 1 : 0));
    CHECK(res.labels[i] == res.labels[i % 2]);
  }
  CHECK(res.labels[0] != res.labels[1]);
  CHECK(res.classes[0].train_count == 30);
  CHECK(res.classes[1].train_count == 30);
}

TEST_CASE("kmeans with k equal to n has zero distortion") {
  Rng rng(32);
  std::vector<ClusterInput> inputs;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(kClusterDim);
    v[0] = i * 3.0;
    v[1] = -double(i);
    inputs.push_back(point_input(v));
  }
  Rng seed(2);
  const ClusterResult res = cluster_poses(inputs, 8, seed);
  for (int i = 0; i < 8; ++i)
    CHECK((inputs[i].vec - res.classes[res.labels[i]].centroid).norm() == 0.0);
}

TEST_CASE("kmeans is deterministic under a fixed seed") {
  Rng rng(33);
  std::vector<ClusterInput> inputs;
  for (int i = 0; i < 100; ++i) {
    Eigen::VectorXd v(kClusterDim);
    for (int d = 0; d < kClusterDim; ++d) v[d] = rng.normal();
    inputs.push_back(point_input(v));
  }
  Rng s1(7), s2(7);
  CHECK(cluster_poses(inputs, 5, s1).labels == cluster_poses(inputs, 5, s2).labels);
}

TEST_CASE("kmeans rejects k larger than the record count") {
  std::vector<ClusterInput> inputs(3, point_input(Eigen::VectorXd::Zero(kClusterDim)));
  Rng rng(1);
  CHECK_THROWS_AS(cluster_poses(inputs, 4, rng), ConfigError);
}

TEST_CASE("training separates a linearly separable toy set") {
  const CameraModel cam = small_cam();
  std::vector<QuantizedDepthMap> features;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    QuantizedDepthMap a = sentinel_map(cam);
    a.at(0, 0) = 0;  // class 0 occupies column (0,0)
    a.at(1, i % 3) = 2;
    features.push_back(a);
    labels.push_back(0);
    QuantizedDepthMap b = sentinel_map(cam);
    b.at(3, 2) = 0;  // class 1 occupies column (3,2)
    b.at(2, i % 3) = 2;
    features.push_back(b);
    labels.push_back(1);
  }
  const auto betas = train_ova(features, labels, 2, cam, {1e-4, 30, 1, 1});
  const PoseModel model(cam, std::vector<PoseClass>(2), betas_to_model(betas),
                        {});
  (void)model;
}

TEST_CASE("trained weights classify the training set perfectly when separable") {
  const CameraModel cam = small_cam();
  std::vector<QuantizedDepthMap> features;
  std::vector<int> labels;
  for (int i = 0; i < 10; ++i) {
    QuantizedDepthMap a = sentinel_map(cam);
    a.at(0, 0) = 0;
    a.at(1, i % 3) = 2;
    features.push_back(a);
    labels.push_back(0);
    QuantizedDepthMap b = sentinel_map(cam);
    b.at(3, 2) = 0;
    b.at(2, i % 3) = 2;
    features.push_back(b);
    labels.push_back(1);
  }
  auto betas = train_ova(features, labels, 2, cam, {1e-4, 30, 1, 1});
  std::vector<PoseClass> classes(2);
  for (int c = 0; c < 2; ++c) {
    classes[c].class_id = c;
    classes[c].centroid = Eigen::VectorXd::Zero(kClusterDim);
  }
  const PoseModel model(cam, classes, std::move(betas), {});
  int correct = 0;
  for (std::size_t i = 0; i < features.size(); ++i)
    correct += classify(model, features[i]).class_id == labels[i];
  CHECK(correct == 20);
}

TEST_CASE("huge regularization shrinks the weights away") {
  const CameraModel cam = small_cam();
  Rng rng(34);
  std::vector<QuantizedDepthMap> features;
  std::vector<int> labels;
  for (int i = 0; i < 16; ++i) {
    features.push_back(random_q(cam, rng));
    labels.push_back(i % 2);
  }
  const auto betas = train_ova(features, labels, 2, cam, {1e6, 10, 1, 1});
  for (const auto& beta : betas)
    CHECK(beta.w.cast<double>().norm() < 1e-3);
}

TEST_CASE("training is deterministic, independent of thread count") {
  const CameraModel cam = small_cam();
  Rng rng(35);
  std::vector<QuantizedDepthMap> features;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    features.push_back(random_q(cam, rng));
    labels.push_back(int(rng.uniform_int(3)));
  }
  const auto a = train_ova(features, labels, 3, cam, {1e-4, 5, 9, 1});
  const auto b = train_ova(features, labels, 3, cam, {1e-4, 5, 9, 2});
  for (int c = 0; c < 3; ++c) {
    CHECK(a[c].bias == b[c].bias);
    CHECK((a[c].w == b[c].w).all());
  }
}

TEST_CASE("training reports empty classes") {
  const CameraModel cam = small_cam();
  Rng rng(36);
  std::vector<QuantizedDepthMap> features{random_q(cam, rng), random_q(cam, rng)};
  std::vector<int> labels{0, 0};
  CHECK_THROWS_WITH_AS(train_ova(features, labels, 2, cam, {}),
                       doctest::Contains("without positives"), ConfigError);
}

TEST_CASE("fold: suffix sums with a zero sentinel plane") {
  WeightTensor beta;
  beta.nu = beta.nv = 1;
  beta.nw = 3;
  beta.w.resize(3);
  beta.w << 1.0f, 2.0f, 3.0f;
  const CumsumTensor folded = fold_weights(beta);
  REQUIRE(folded.w.size() == 4);
  CHECK(folded.w[0] == 6.0);
  CHECK(folded.w[1] == 5.0);
  CHECK(folded.w[2] == 3.0);
  CHECK(folded.w[3] == 0.0);

  beta.w.setZero();
  CHECK(fold_weights(beta).w.isZero(0.0));
}

TEST_CASE("difference inverts fold exactly") {
  const CameraModel cam = small_cam();
  Rng rng(37);
  for (int trial = 0; trial < 30; ++trial) {
    const WeightTensor beta = random_beta(cam, rng);
    const WeightTensor back = difference(fold_weights(beta));
    CHECK((back.w == beta.w).all());
  }
}

TEST_CASE("score_naive equals an independent triple loop") {
  const CameraModel cam = small_cam();
  Rng rng(38);
  const PoseModel model = random_model(cam, 4, rng);

  SUBCASE("all-zero grid scores the biases") {
    const VoxelGrid empty(cam.nu, cam.nv, cam.nw);
    const Eigen::VectorXd s = score_naive(model, empty);
    for (int c = 0; c < 4; ++c) CHECK(s[c] == model.bias(c));
  }

  SUBCASE("one-hot weight reads through") {
    std::vector<PoseClass> classes(1);
    classes[0].centroid = Eigen::VectorXd::Zero(kClusterDim);
    WeightTensor beta;
    beta.nu = cam.nu;
    beta.nv = cam.nv;
    beta.nw = cam.nw;
    beta.w = Eigen::VectorXf::Zero(cam.nu * cam.nv * cam.nw);
    beta.w[beta.index(2, 1, 3)] = 2.5f;
    beta.bias = 0.25;
    const PoseModel one(cam, classes, {beta}, {});
    VoxelGrid grid(cam.nu, cam.nv, cam.nw);
    grid.set(2, 1, 3, true);
    CHECK(score_naive(one, grid)[0] == doctest::Approx(2.75));
  }

  SUBCASE("random grids match the oracle loop") {
    for (int trial = 0; trial < 20; ++trial) {
      const QuantizedDepthMap q = random_q(cam, rng);
      const VoxelGrid grid = to_voxels(q);
      const Eigen::VectorXd s = score_naive(model, grid);
      for (int c = 0; c < 4; ++c) {
        // reversed loop order and long double accumulation
        long double acc = model.bias(c);
        for (int w = cam.nw - 1; w >= 0; --w)
          for (int v = cam.nv - 1; v >= 0; --v)
            for (int u = cam.nu - 1; u >= 0; --u)
              if (grid.at(u, v, w))
                acc += static_cast<long double>(model.betas()[c].w[grid.index(u, v, w)]);
        CHECK(s[c] == doctest::Approx(static_cast<double>(acc)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("score_fast: sentinel map scores the biases") {
  const CameraModel cam = small_cam();
  Rng rng(39);
  const PoseModel model = random_model(cam, 3, rng);
  const Eigen::VectorXd s = score_fast(model, sentinel_map(cam));
  for (int c = 0; c < 3; ++c) CHECK(s[c] == model.bias(c));
}

TEST_CASE("score_fast: single column reads the suffix sum") {
  CameraModel cam;
  cam.width = 10;
  cam.height = 10;
  cam.nu = 1;
  cam.nv = 1;
  cam.nw = 6;
  std::vector<PoseClass> classes(1);
  classes[0].centroid = Eigen::VectorXd::Zero(kClusterDim);
  Rng rng(40);
  const WeightTensor beta = random_beta(cam, rng);
  const PoseModel model(cam, classes, {beta}, {});
  for (int w0 = 0; w0 <= 6; ++w0) {
    QuantizedDepthMap q(1, 1, 6);
    q.at(0, 0) = static_cast<std::uint16_t>(w0);
    double expect = beta.bias;
    for (int d = w0; d < 6; ++d) expect += static_cast<double>(beta.w[d]);
    CHECK(score_fast(model, q)[0] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("score_fast matches score_naive within float associativity") {
  const CameraModel cam = small_cam();
  Rng rng(41);
  for (int k : {1, 3, 10}) {
    const PoseModel model = random_model(cam, k, rng);
    for (int trial = 0; trial < 30; ++trial) {
      const QuantizedDepthMap q = random_q(cam, rng);
      const Eigen::VectorXd fast = score_fast(model, q);
      const Eigen::VectorXd naive = score_naive(model, to_voxels(q));
      for (int c = 0; c < k; ++c)
        CHECK(std::abs(fast[c] - naive[c]) <= 1e-6 * (1.0 + std::abs(naive[c])));
    }
  }
}

TEST_CASE("score_fast performs exactly nu*nv*k lookup-adds") {
  const CameraModel cam = small_cam();
  Rng rng(42);
  const PoseModel model = random_model(cam, 7, rng);
  ScoreStats stats;
  score_fast(model, sentinel_map(cam), &stats);
  CHECK(stats.lookup_adds ==
        static_cast<std::uint64_t>(cam.nu) * cam.nv * 7);
}

TEST_CASE("model cumsum accessor matches fold_weights") {
  const CameraModel cam = small_cam();
  Rng rng(43);
  const PoseModel model = random_model(cam, 3, rng);
  for (int c = 0; c < 3; ++c) {
    const CumsumTensor a = model.cumsum(c);
    const CumsumTensor b = fold_weights(model.betas()[c]);
    CHECK((a.w == b.w).all());
  }
}

TEST_CASE("classify follows biases, ties and bias shifts") {
  const CameraModel cam = small_cam();
  std::vector<PoseClass> classes(3);
  std::vector<WeightTensor> betas(3);
  for (int c = 0; c < 3; ++c) {
    classes[c].class_id = c;
    classes[c].centroid = Eigen::VectorXd::Zero(kClusterDim);
    betas[c].nu = cam.nu;
    betas[c].nv = cam.nv;
    betas[c].nw = cam.nw;
    betas[c].w = Eigen::VectorXf::Zero(cam.nu * cam.nv * cam.nw);
  }
  betas[0].bias = 0.0;
  betas[1].bias = 5.0;
  betas[2].bias = 1.0;
  const QuantizedDepthMap q = sentinel_map(cam);
  {
    const PoseModel model(cam, classes, betas, {});
    CHECK(classify(model, q).class_id == 1);
  }
  {
    auto tied = betas;
    tied[0].bias = tied[1].bias = tied[2].bias = 2.0;
    const PoseModel model(cam, classes, tied, {});
    CHECK(classify(model, q).class_id == 0);  // lowest id wins ties
  }
  {
    auto shifted = betas;
    for (auto& b : shifted) b.bias += 123.0;
    const PoseModel model(cam, classes, shifted, {});
    CHECK(classify(model, q).class_id == 1);  // argmax is shift invariant
  }
}

TEST_CASE("score dimension mismatches are structural") {
  const CameraModel cam = small_cam();
  Rng rng(44);
  const PoseModel model = random_model(cam, 2, rng);
  CHECK_THROWS_AS(score_fast(model, QuantizedDepthMap(2, 2, 2)), StructuralError);
  CHECK_THROWS_AS(score_naive(model, VoxelGrid(2, 2, 2)), StructuralError);
}

}  // TEST_SUITE
