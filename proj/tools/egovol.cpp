#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "egovol/dataset_io.hpp"
#include "egovol/eval.hpp"
#include "egovol/model_io.hpp"
#include "egovol/pgm.hpp"
#include "egovol/pipeline.hpp"

namespace {

using namespace egovol;

CameraModel load_camera(const std::string& path) {
  if (path.empty()) return CameraModel{};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read camera file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("camera file is not valid JSON: " + std::string(e.what()));
  }
  return camera_from_json(j.contains("camera") ? j.at("camera") : j);
}

struct ChainAndLibrary {
  KinematicChain chain;
  GraspLibrary library;
};

ChainAndLibrary make_chain_and_library(const std::string& grasps_file,
                                       double spacing_scale) {
  ChainAndLibrary out{build_arm_chain({.cloud_spacing_scale = spacing_scale}),
                      {}};
  out.library = grasps_file.empty()
                    ? GraspLibrary::builtin(out.chain, spacing_scale)
                    : GraspLibrary::load(grasps_file, out.chain, spacing_scale);
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void print_report(const EvalReport& r, std::ostream& os) {
  os << "frames:              " << r.n << '\n'
     << "cluster accuracy:    " << r.cluster_accuracy << '\n'
     << "detection accuracy:  " << r.detection_accuracy << " (tau3d=" << r.tau3d
     << " m)\n"
     << "mean 3d kp error:    " << r.mean_kp3_err_m << " m\n"
     << "mean 2d kp error:    " << r.mean_kp2_err_px << " px\n"
     << "latency mean/p95:    " << r.latency.mean_s * 1e3 << " / "
     << r.latency.p95_s * 1e3 << " ms\n";
}

int run_app(int argc, char** argv) {
  CLI::App app{"egovol: egocentric workspace pose recognition pipeline"};
  app.require_subcommand(1);

  int threads = 0;
  app.add_option("--threads", threads,
                 "worker thread cap (0 = EGOVOL_THREADS or all cores)");

  // ---- generate ----------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "synthesize a labeled dataset");
  struct {
    std::uint64_t n = 1000;
    double sigma = 0.15, pair_rate = 0.25, delta = 0.02;
    std::uint64_t seed = 1;
    std::string out, grasps, camera_file, background_file;
    int backgrounds = 32;
    double noise = 0.0, spacing_scale = 1.0;
  } g;
  gen->add_option("--n", g.n, "number of exemplars")->required();
  gen->add_option("--sigma", g.sigma, "arm-angle perturbation stddev, rad");
  gen->add_option("--pair-rate", g.pair_rate, "two-arm record fraction");
  gen->add_option("--delta", g.delta, "pairing depth-gap threshold, m");
  gen->add_option("--seed", g.seed, "base rng seed");
  gen->add_option("--out", g.out, "output EGOV file")->required();
  gen->add_option("--grasps", g.grasps, "grasp library JSON (default builtin)");
  gen->add_option("--camera", g.camera_file, "camera config JSON");
  gen->add_option("--backgrounds", g.backgrounds,
                  "procedural background pool size (0 disables)");
  gen->add_option("--background-file", g.background_file,
                  "EGOV file supplying background depth maps");
  gen->add_option("--noise", g.noise, "additive depth noise stddev, m");
  gen->add_option("--cloud-spacing-scale", g.spacing_scale,
                  "surface sampling spacing multiplier");

  // ---- cluster ------------------------------------------------------------
  auto* clu = app.add_subcommand("cluster", "k-means pose-space quantization");
  struct {
    std::string dataset, out;
    int k = 20;
    std::uint64_t seed = 1;
  } c;
  clu->add_option("--dataset", c.dataset)->required();
  clu->add_option("--k", c.k, "number of pose classes");
  clu->add_option("--seed", c.seed);
  clu->add_option("--out", c.out, "labels/centroids JSON")->required();

  // ---- train --------------------------------------------------------------
  auto* trn = app.add_subcommand("train", "cluster poses and train the model");
  struct {
    std::string dataset, out;
    int k = 20, epochs = 30;
    double lambda = 1e-4;
    std::uint64_t seed = 1;
  } t;
  trn->add_option("--dataset", t.dataset)->required();
  trn->add_option("--k", t.k, "number of pose classes");
  trn->add_option("--lambda", t.lambda, "hinge-loss regularization");
  trn->add_option("--epochs", t.epochs);
  trn->add_option("--seed", t.seed);
  trn->add_option("--out", t.out, "output EGOM file")->required();

  // ---- classify -----------------------------------------------------------
  auto* cls = app.add_subcommand("classify", "classify a frame");
  struct {
    std::string model, input;
    std::uint64_t index = 0;
    int top = 1;
    bool json = false;
  } cl;
  cls->add_option("--model", cl.model)->required();
  cls->add_option("--input", cl.input, "EGOV dataset or 16-bit depth PGM")
      ->required();
  cls->add_option("--index", cl.index, "record index for dataset input");
  cls->add_option("--top", cl.top, "report the N best classes");
  cls->add_flag("--json", cl.json, "print machine-readable JSON");

  // ---- eval ---------------------------------------------------------------
  auto* evl = app.add_subcommand("eval", "held-out evaluation");
  struct {
    std::string model, test, csv;
    double tau3d = 0.10;
  } e;
  evl->add_option("--model", e.model)->required();
  evl->add_option("--test", e.test)->required();
  evl->add_option("--tau3d", e.tau3d, "wrist detection radius, m");
  evl->add_option("--csv", e.csv, "write the report as CSV (+ .json sidecar)");

  // ---- sweep --------------------------------------------------------------
  auto* swp = app.add_subcommand("sweep", "ablation over k, grid or train size");
  struct {
    std::string axis, values, train, test, csv;
    int k = 20, epochs = 30;
    double lambda = 1e-4, tau3d = 0.10;
    std::uint64_t seed = 1;
  } s;
  swp->add_option("--axis", s.axis, "k | grid | train_size")->required();
  swp->add_option("--values", s.values, "comma-separated axis values")
      ->required();
  swp->add_option("--train", s.train)->required();
  swp->add_option("--test", s.test)->required();
  swp->add_option("--k", s.k, "base class count");
  swp->add_option("--lambda", s.lambda);
  swp->add_option("--epochs", s.epochs);
  swp->add_option("--seed", s.seed);
  swp->add_option("--tau3d", s.tau3d);
  swp->add_option("--csv", s.csv, "output CSV path")->required();

  // ---- bench --------------------------------------------------------------
  auto* bch = app.add_subcommand("bench", "scoring throughput benchmark");
  struct {
    std::string model, input;
    int frames = 1000;
  } b;
  bch->add_option("--model", b.model)->required();
  bch->add_option("--input", b.input, "EGOV dataset supplying frames")
      ->required();
  bch->add_option("--frames", b.frames, "frame count (dataset cycles)");

  // ---- dump ---------------------------------------------------------------
  auto* dmp = app.add_subcommand("dump", "export one record as PGM + JSON");
  struct {
    std::string dataset, out;
    std::uint64_t index = 0;
  } d;
  dmp->add_option("--dataset", d.dataset)->required();
  dmp->add_option("--index", d.index);
  dmp->add_option("--out", d.out, "output path prefix")->required();

  // ---- features -----------------------------------------------------------
  auto* fea = app.add_subcommand("features",
                                 "dump the quantized feature of one record");
  struct {
    std::string input, out;
    std::uint64_t index = 0;
  } f;
  fea->add_option("--input", f.input, "EGOV dataset")->required();
  fea->add_option("--index", f.index);
  fea->add_option("--out", f.out, "output path prefix")->required();

  // ---- run ----------------------------------------------------------------
  auto* run = app.add_subcommand("run", "full pipeline from a config file");
  std::string run_config;
  run->add_option("--config", run_config, "RunConfig JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return 2;
  }

  if (*gen) {
    const CameraModel cam = load_camera(g.camera_file);
    const auto cl_ = make_chain_and_library(g.grasps, g.spacing_scale);
    const SynthesisContext ctx{cam, &cl_.chain, &cl_.library,
                               default_extrinsics()};
    GenerateConfig cfg;
    cfg.n = g.n;
    cfg.sigma = g.sigma;
    cfg.pair_rate = g.pair_rate;
    cfg.delta = g.delta;
    cfg.seed = g.seed;
    cfg.background_count = g.backgrounds;
    cfg.background_file = g.background_file;
    cfg.depth_noise_sigma = g.noise;
    cfg.threads = threads;
    const GenerateStats stats = generate_dataset(ctx, cfg, g.out);
    std::cout << "wrote " << stats.records << " records (" << stats.two_arm
              << " two-arm) to " << g.out << '\n';
  } else if (*clu) {
    std::vector<ClusterInput> inputs;
    {
      DatasetReader reader(c.dataset);
      ExemplarRecord rec;
      while (reader.next(rec)) inputs.push_back(cluster_input(rec));
    }
    Rng rng(c.seed);
    const ClusterResult result = cluster_poses(inputs, c.k, rng);
    nlohmann::json j;
    j["k"] = c.k;
    j["seed"] = c.seed;
    j["labels"] = result.labels;
    j["classes"] = nlohmann::json::array();
    for (const auto& pc : result.classes) {
      nlohmann::json jc;
      jc["class_id"] = pc.class_id;
      jc["train_count"] = pc.train_count;
      jc["centroid"] = std::vector<double>(
          pc.centroid.data(), pc.centroid.data() + pc.centroid.size());
      j["classes"].push_back(std::move(jc));
    }
    std::ofstream out(c.out);
    if (!out) throw ConfigError("cannot write " + c.out);
    out << j.dump(2) << '\n';
    std::cout << "clustered " << inputs.size() << " records into " << c.k
              << " classes -> " << c.out << '\n';
  } else if (*trn) {
    std::vector<ClusterInput> inputs;
    std::vector<QuantizedDepthMap> features;
    CameraModel cam;
    {
      DatasetReader reader(t.dataset);
      cam = reader.header().cam;
      ExemplarRecord rec;
      while (reader.next(rec)) {
        inputs.push_back(cluster_input(rec));
        features.push_back(quantize_depth(cam, rec.depth));
      }
    }
    Rng rng(t.seed);
    const ClusterResult clusters = cluster_poses(inputs, t.k, rng);
    std::vector<WeightTensor> betas =
        train_ova(features, clusters.labels, t.k, cam,
                  {t.lambda, t.epochs, t.seed, threads});
    const PoseModel model(cam, clusters.classes, std::move(betas),
                          {t.lambda, t.epochs, t.seed});
    save_model(model, t.out);
    std::cout << "trained k=" << t.k << " on " << features.size()
              << " records -> " << t.out << '\n';
  } else if (*cls) {
    const PoseModel model = load_model(cl.model);
    DepthMap depth;
    if (cl.input.size() > 4 &&
        cl.input.compare(cl.input.size() - 4, 4, ".pgm") == 0) {
      depth = read_depth_pgm16(cl.input, model.camera().z_max);
    } else {
      DatasetReader reader(cl.input);
      if (cl.index >= reader.count())
        throw ConfigError("record index out of range");
      ExemplarRecord rec;
      for (std::uint64_t i = 0; i <= cl.index; ++i) reader.next(rec);
      depth = std::move(rec.depth);
    }
    const QuantizedDepthMap q = quantize_depth(model.camera(), depth);
    const Eigen::VectorXd scores = score_fast(model, q);
    std::vector<int> order(model.k());
    for (int i = 0; i < model.k(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
    });
    const int top = std::min<int>(std::max(1, cl.top), model.k());
    if (cl.json) {
      nlohmann::json j;
      j["class_id"] = order[0];
      j["score"] = scores[order[0]];
      j["top"] = nlohmann::json::array();
      for (int i = 0; i < top; ++i)
        j["top"].push_back({{"class_id", order[i]}, {"score", scores[order[i]]}});
      const PoseClass& best = model.classes()[order[0]];
      nlohmann::json kp3 = nlohmann::json::array();
      for (int kp = 0; kp < kKeypointCount; ++kp)
        kp3.push_back({best.mean_kp3(0, kp), best.mean_kp3(1, kp),
                       best.mean_kp3(2, kp)});
      j["mean_keypoints3d"] = std::move(kp3);
      std::cout << j.dump(2) << '\n';
    } else {
      for (int i = 0; i < top; ++i)
        std::cout << (i == 0 ? "-> " : "   ") << "class " << order[i]
                  << "  score " << scores[order[i]] << '\n';
      const PoseClass& best = model.classes()[order[0]];
      std::cout << "   mean wrist at (" << best.mean_kp3(0, kKpWrist) << ", "
                << best.mean_kp3(1, kKpWrist) << ", "
                << best.mean_kp3(2, kKpWrist) << ") m\n";
    }
  } else if (*evl) {
    const PoseModel model = load_model(e.model);
    const EvalReport report = evaluate_dataset(model, e.test, e.tau3d);
    print_report(report, std::cout);
    if (!e.csv.empty()) {
      std::ofstream out(e.csv);
      if (!out) throw ConfigError("cannot write " + e.csv);
      out << sweep_csv({{"eval", report}}, "stage");
      nlohmann::json j;
      j["n"] = report.n;
      j["cluster_accuracy"] = report.cluster_accuracy;
      j["detection_accuracy"] = report.detection_accuracy;
      j["mean_kp3_err_m"] = report.mean_kp3_err_m;
      j["mean_kp2_err_px"] = report.mean_kp2_err_px;
      j["tau3d"] = report.tau3d;
      std::ofstream sidecar(e.csv + ".json");
      sidecar << j.dump(2) << '\n';
    }
  } else if (*swp) {
    SweepConfig cfg;
    cfg.k = s.k;
    cfg.train = {s.lambda, s.epochs, s.seed, threads};
    cfg.tau3d = s.tau3d;
    cfg.cluster_seed = s.seed;
    const auto points = sweep(sweep_axis_from_string(s.axis),
                              split_csv(s.values), s.train, s.test, cfg);
    const std::string csv = sweep_csv(points, s.axis);
    std::ofstream out(s.csv);
    if (!out) throw ConfigError("cannot write " + s.csv);
    out << csv;
    nlohmann::json j;
    j["axis"] = s.axis;
    j["values"] = split_csv(s.values);
    j["k"] = s.k;
    j["lambda"] = s.lambda;
    j["epochs"] = s.epochs;
    j["seed"] = s.seed;
    j["tau3d"] = s.tau3d;
    std::ofstream sidecar(s.csv + ".json");
    sidecar << j.dump(2) << '\n';
    std::cout << csv;
  } else if (*bch) {
    const PoseModel model = load_model(b.model);
    std::vector<DepthMap> frames;
    {
      DatasetReader reader(b.input);
      ExemplarRecord rec;
      while (frames.size() < static_cast<std::size_t>(b.frames) &&
             reader.next(rec))
        frames.push_back(std::move(rec.depth));
    }
    if (frames.empty()) throw ConfigError("bench input has no frames");
    for (std::size_t i = 0; frames.size() < static_cast<std::size_t>(b.frames);
         ++i)
      frames.push_back(frames[i % frames.size()]);
    const BenchResult r = bench_throughput(model, frames);
    std::cout << "frames:            " << r.frames << '\n'
              << "lookup-adds/frame: " << r.lookup_adds_per_frame << '\n'
              << "latency mean:      " << r.latency.mean_s * 1e3 << " ms\n"
              << "latency p95:       " << r.latency.p95_s * 1e3 << " ms\n"
              << "throughput:        " << r.fps << " fps\n";
  } else if (*dmp) {
    dump_frame(d.dataset, d.index, d.out);
    std::cout << "wrote " << d.out << ".pgm and " << d.out << ".json\n";
  } else if (*fea) {
    dump_features(f.input, f.index, f.out);
    std::cout << "wrote " << f.out << "_zprime.pgm and " << f.out
              << "_voxels.txt\n";
  } else if (*run) {
    RunConfig cfg = RunConfig::from_file(run_config);
    if (threads > 0) cfg.threads = threads;
    run_pipeline(cfg, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const egovol::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const egovol::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const egovol::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
