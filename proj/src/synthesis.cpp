#include "egovol/synthesis.hpp"

#include <cmath>
#include <limits>
#include <mutex>

#include "egovol/dataset_io.hpp"
#include "egovol/parallel.hpp"

namespace egovol {

DepthMap raycast_depth(const CameraModel& cam, const Eigen::Matrix3Xf& cloud) {
  DepthMap z(cam.width, cam.height);
  const float f = static_cast<float>(cam.f);
  const float cx = static_cast<float>(cam.cx);
  const float cy = static_cast<float>(cam.cy);

  for (Eigen::Index i = 0; i < cloud.cols(); ++i) {
    const float pz = cloud(2, i);
    if (!(pz > 0.0f)) continue;
    const float px = cloud(0, i);
    const float py = cloud(1, i);
    // pixel centers at integer coordinates
    const int x = static_cast<int>(std::lround(f * px / pz + cx));
    const int y = static_cast<int>(std::lround(f * py / pz + cy));
    if (x < 0 || x >= cam.width || y < 0 || y >= cam.height) continue;
    const float r = std::sqrt(px * px + py * py + pz * pz);
    float& cell = z.at(x, y);
    if (cell == DepthMap::kNoMeasurement || r < cell) cell = r;
  }
  return z;
}

double visibility_fraction(
    const CameraModel& cam,
    const Eigen::Matrix<double, 3, kKeypointCount>& kp) {
  int visible = 0;
  for (int k = 0; k < kKeypointCount; ++k) {
    const Vec3 p = kp.col(k);
    if (!(p.z() > 0.0)) continue;
    const Vec2 px = project(cam, p);
    if (px.x() >= 0.0 && px.x() < cam.width && px.y() >= 0.0 &&
        px.y() < cam.height)
      ++visible;
  }
  return static_cast<double>(visible) / kKeypointCount;
}

namespace {

ExemplarArm make_arm(const CameraModel& cam, int grasp_id, Handedness hand,
                     const Eigen::Matrix<double, 3, kKeypointCount>& kp3) {
  ExemplarArm arm;
  arm.grasp_id = grasp_id;
  arm.handedness = hand;
  arm.kp3 = kp3.cast<float>();
  for (int k = 0; k < kKeypointCount; ++k) {
    if (kp3(2, k) > 0.0) {
      arm.kp2.col(k) = project(cam, kp3.col(k)).cast<float>();
    } else {
      arm.kp2.col(k).setConstant(std::numeric_limits<float>::quiet_NaN());
    }
  }
  return arm;
}

}  // namespace

std::optional<ExemplarRecord> sample_exemplar(const SynthesisContext& ctx,
                                              int grasp_id, double sigma,
                                              Rng& rng, Handedness handedness) {
  const Grasp& grasp = ctx.library->by_id(grasp_id);
  ArmHandPose base{grasp.base_theta, grasp.phi, grasp.id, grasp.object_id,
                   handedness};
  const ArmHandPose pose = perturb_pose(*ctx.chain, base, sigma, rng);
  const FkResult fk =
      forward_kinematics(*ctx.chain, pose, ctx.extrinsics, true,
                         ctx.library->object_for(grasp));
  if (visibility_fraction(ctx.cam, fk.keypoints) < kVisibilityThreshold)
    return std::nullopt;

  ExemplarRecord rec;
  rec.arms.push_back(make_arm(ctx.cam, grasp_id, handedness, fk.keypoints));
  rec.depth = raycast_depth(ctx.cam, fk.cloud);
  return rec;
}

std::optional<ExemplarRecord> pair_arms(const ExemplarRecord& a,
                                        const ExemplarRecord& b, double delta) {
  if (a.arm_count() != 1 || b.arm_count() != 1)
    throw StructuralError("pair_arms: both records must be single-arm");
  if (a.arms[0].handedness == b.arms[0].handedness)
    throw StructuralError("pair_arms: records must have opposite handedness");
  if (!a.depth.same_shape(b.depth))
    throw StructuralError("pair_arms: depth map dimensions differ");

  const ExemplarRecord& right =
      a.arms[0].handedness == Handedness::kRight ? a : b;
  const ExemplarRecord& left =
      a.arms[0].handedness == Handedness::kRight ? b : a;

  // Compatibility: wherever both arms are seen, they must be separated in
  // depth by more than delta. Pixels seen by only one arm are vacuous.
  const auto& za = right.depth.a;
  const auto& zb = left.depth.a;
  for (Eigen::Index i = 0; i < za.size(); ++i) {
    const float da = za.data()[i];
    const float db = zb.data()[i];
    if (da > 0.0f && db > 0.0f && std::abs(da - db) <= delta)
      return std::nullopt;
  }

  ExemplarRecord merged;
  merged.arms = {right.arms[0], left.arms[0]};
  merged.depth = composite_background(right.depth, left.depth);
  return merged;
}

DepthMap composite_background(const DepthMap& fore, const DepthMap& back) {
  if (!fore.same_shape(back))
    throw StructuralError("composite_background: dimension mismatch");
  DepthMap out(fore.width, fore.height);
  for (Eigen::Index i = 0; i < out.a.size(); ++i) {
    const float df = fore.a.data()[i];
    const float db = back.a.data()[i];
    if (df > 0.0f && db > 0.0f)
      out.a.data()[i] = std::min(df, db);
    else
      out.a.data()[i] = df > 0.0f ? df : db;
  }
  return out;
}

BackgroundPool BackgroundPool::procedural(const CameraModel& cam, int count,
                                          std::uint64_t seed) {
  BackgroundPool pool;
  pool.maps.reserve(count);

  struct Plane {
    Vec3 n;
    double offset;  // plane: n . p = offset
  };
  struct Box {
    Vec3 lo, hi;
  };

  for (int m = 0; m < count; ++m) {
    Rng rng(derive_seed(seed ^ 0xb67c9ull, m));

    std::vector<Plane> planes;
    const int n_planes = 1 + static_cast<int>(rng.uniform_int(3));
    for (int i = 0; i < n_planes; ++i) {
      const double dist = rng.uniform(0.8, 3.0);
      const double tx = rng.uniform(-0.45, 0.45);
      const double ty = rng.uniform(-0.45, 0.45);
      const Vec3 n = Vec3(std::sin(tx), std::sin(ty),
                          -std::cos(tx) * std::cos(ty))
                         .normalized();
      planes.push_back({n, n.dot(Vec3(0, 0, dist))});
    }

    std::vector<Box> boxes;
    const int n_boxes = static_cast<int>(rng.uniform_int(6));
    for (int i = 0; i < n_boxes; ++i) {
      const double zc = rng.uniform(0.8, 2.5);
      const double px = rng.uniform(0.0, cam.width);
      const double py = rng.uniform(0.0, cam.height);
      const Vec3 center = zc * Vec3((px - cam.cx) / cam.f,
                                    (py - cam.cy) / cam.f, 1.0);
      const Vec3 half(rng.uniform(0.05, 0.35), rng.uniform(0.05, 0.35),
                      rng.uniform(0.05, 0.35));
      boxes.push_back({center - half, center + half});
    }

    DepthMap z(cam.width, cam.height);
    for (int y = 0; y < cam.height; ++y) {
      for (int x = 0; x < cam.width; ++x) {
        const Vec3 d = pixel_ray(cam, x, y);
        double best = std::numeric_limits<double>::infinity();
        for (const auto& pl : planes) {
          const double denom = d.dot(pl.n);
          if (std::abs(denom) < 1e-12) continue;
          const double t = pl.offset / denom;
          if (t > 0.0 && t < best) best = t;
        }
        for (const auto& bx : boxes) {
          double tlo = 0.0, thi = std::numeric_limits<double>::infinity();
          for (int ax = 0; ax < 3; ++ax) {
            const double inv = 1.0 / d[ax];
            double t0 = bx.lo[ax] * inv;
            double t1 = bx.hi[ax] * inv;
            if (t0 > t1) std::swap(t0, t1);
            tlo = std::max(tlo, t0);
            thi = std::min(thi, t1);
          }
          if (thi >= tlo && tlo > 0.0 && tlo < best) best = tlo;
        }
        if (std::isfinite(best)) z.at(x, y) = static_cast<float>(best);
      }
    }
    pool.maps.push_back(std::move(z));
  }
  return pool;
}

BackgroundPool BackgroundPool::from_file(const std::string& path,
                                         const CameraModel& cam) {
  BackgroundPool pool;
  DatasetReader reader(path);
  if (reader.header().cam.width != cam.width ||
      reader.header().cam.height != cam.height)
    throw ConfigError("background file resolution does not match camera");
  ExemplarRecord rec;
  while (reader.next(rec)) pool.maps.push_back(std::move(rec.depth));
  if (pool.maps.empty())
    throw ConfigError("background file contains no depth maps: " + path);
  return pool;
}

ExemplarRecord make_record(const SynthesisContext& ctx,
                           const GenerateConfig& cfg,
                           const BackgroundPool* pool, std::uint64_t seed) {
  Rng rng(seed);
  const std::vector<int>& ids =
      cfg.grasp_ids.empty() ? ctx.library->all_ids() : cfg.grasp_ids;
  auto pick_grasp = [&] { return ids[rng.uniform_int(ids.size())]; };

  const bool two_arm = rng.bernoulli(cfg.pair_rate);

  ExemplarRecord rec;
  if (!two_arm) {
    for (;;) {
      if (auto r = sample_exemplar(ctx, pick_grasp(), cfg.sigma, rng)) {
        rec = std::move(*r);
        break;
      }
    }
  } else {
    for (bool done = false; !done;) {
      std::optional<ExemplarRecord> primary;
      while (!primary)
        primary = sample_exemplar(ctx, pick_grasp(), cfg.sigma, rng);
      // A few partner attempts; incompatible pairs redraw the primary too.
      for (int attempt = 0; attempt < 64 && !done; ++attempt) {
        auto partner = sample_exemplar(ctx, pick_grasp(), cfg.sigma, rng,
                                       Handedness::kLeft);
        if (!partner) continue;
        if (auto merged = pair_arms(*primary, *partner, cfg.delta)) {
          rec = std::move(*merged);
          done = true;
        }
      }
    }
  }

  if (pool && !pool->maps.empty())
    rec.depth = composite_background(rec.depth, pool->pick(rng));

  if (cfg.depth_noise_sigma > 0.0) {
    for (Eigen::Index i = 0; i < rec.depth.a.size(); ++i) {
      float& d = rec.depth.a.data()[i];
      if (d > 0.0f)
        d = std::max(1e-4f, d + static_cast<float>(rng.normal(
                                    0.0, cfg.depth_noise_sigma)));
    }
  }

  rec.seed = seed;
  return rec;
}

GenerateStats generate_dataset(const SynthesisContext& ctx,
                               const GenerateConfig& cfg,
                               const std::string& out_path) {
  BackgroundPool pool;
  const BackgroundPool* pool_ptr = nullptr;
  if (!cfg.background_file.empty()) {
    pool = BackgroundPool::from_file(cfg.background_file, ctx.cam);
    pool_ptr = &pool;
  } else if (cfg.background_count > 0) {
    pool = BackgroundPool::procedural(ctx.cam, cfg.background_count, cfg.seed);
    pool_ptr = &pool;
  }

  nlohmann::json meta;
  meta["sigma"] = cfg.sigma;
  meta["pair_rate"] = cfg.pair_rate;
  meta["delta"] = cfg.delta;
  meta["seed"] = cfg.seed;
  meta["depth_noise_sigma"] = cfg.depth_noise_sigma;
  meta["config_hash"] =
      cfg.config_hash_override.empty()
          ? hash_hex(json_hash(
                nlohmann::json{{"camera", camera_to_json(ctx.cam)},
                               {"n", cfg.n},
                               {"sigma", cfg.sigma},
                               {"pair_rate", cfg.pair_rate},
                               {"delta", cfg.delta},
                               {"seed", cfg.seed},
                               {"background_count", cfg.background_count},
                               {"background_file", cfg.background_file},
                               {"depth_noise_sigma", cfg.depth_noise_sigma},
                               {"grasp_ids", cfg.grasp_ids}}))
          : cfg.config_hash_override;

  DatasetWriter writer(out_path, ctx.cam, meta, cfg.n);
  GenerateStats stats;

  // Records are generated in parallel batches but written in index order,
  // so the file bytes never depend on the thread count.
  constexpr std::uint64_t kBatch = 64;
  std::vector<ExemplarRecord> batch;
  for (std::uint64_t start = 0; start < cfg.n; start += kBatch) {
    const std::uint64_t m = std::min(kBatch, cfg.n - start);
    batch.assign(m, ExemplarRecord{});
    parallel_blocks(m, cfg.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i)
        batch[i] =
            make_record(ctx, cfg, pool_ptr, derive_seed(cfg.seed, start + i));
    });
    for (auto& rec : batch) {
      stats.records += 1;
      if (rec.arm_count() == 2) stats.two_arm += 1;
      writer.append(rec);
    }
  }
  writer.close();
  return stats;
}

}  // namespace egovol
