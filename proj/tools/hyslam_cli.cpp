// hyslam command-line front end: runs the SLAM pipeline on a sequence
// manifest, generates synthetic sequences, trains vocabularies, and scores
// trajectories. All outputs land under the directory given with --out.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hyslam/eval/metrics.hpp"
#include "hyslam/io/calibration_io.hpp"
#include "hyslam/io/feature_io.hpp"
#include "hyslam/io/manifest.hpp"
#include "hyslam/io/map_io.hpp"
#include "hyslam/io/trajectory_io.hpp"
#include "hyslam/pipeline/system.hpp"
#include "hyslam/synth/synthetic_world.hpp"

namespace fs = std::filesystem;
using namespace hyslam;

namespace {

struct RunOptions {
  std::string manifest_path;
  std::string config_path;
  std::string vocabulary_path;
  std::string out_dir;
  bool hybrid = false;
  bool deterministic = true;
  std::uint32_t seed = 42;
  int features_per_frame = 0;  // 0 keeps the config value
};

void writeReport(const std::string& path,
                 const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& [key, value] : kv) out << key << " " << value << "\n";
}

std::string formatted(double value) {
  std::ostringstream out;
  out << std::setprecision(17) << value;
  return out.str();
}

PipelineConfig makeConfig(const RunOptions& options) {
  PipelineConfig config;
  if (!options.config_path.empty())
    config = loadPipelineConfig(options.config_path);
  config.hybrid = options.hybrid;
  config.deterministic = options.deterministic;
  config.seed = options.seed;
  if (options.features_per_frame > 0)
    config.max_features = options.features_per_frame;
  if (!options.vocabulary_path.empty())
    config.vocabulary_path = options.vocabulary_path;
  config.validate();
  return config;
}

// Feeds every manifest frame through the pipeline. Fisheye frames are
// skipped unless hybrid mode is on.
std::unique_ptr<System> runPipeline(const SequenceManifest& manifest,
                                    const PipelineConfig& config) {
  auto system = std::make_unique<System>(config);
  auto stereo = std::make_shared<Camera>(
      loadCalibration(manifest.stereo_calibration_path));
  CameraPtr fisheye = stereo;
  if (!manifest.fisheye_calibration_path.empty())
    fisheye = std::make_shared<Camera>(
        loadCalibration(manifest.fisheye_calibration_path));
  system->setCameras(stereo, fisheye);

  for (const FrameRecord& record : manifest.frames) {
    if (record.kind == CameraKind::kFisheye && !config.hybrid) continue;
    FrameInput input;
    input.timestamp = record.timestamp;
    input.kind = record.kind;
    input.features = loadFeatures(record.feature_path);
    system->feed(input);
  }
  system->finish();
  return system;
}

std::vector<std::pair<std::string, std::string>> statsReport(
    const RunStats& stats) {
  return {
      {"stereo_frames", std::to_string(stats.stereo_frames)},
      {"stereo_tracked", std::to_string(stats.stereo_tracked)},
      {"fisheye_frames", std::to_string(stats.fisheye_frames)},
      {"fisheye_registered", std::to_string(stats.fisheye_registered)},
      {"keyframes", std::to_string(stats.keyframes)},
      {"map_points", std::to_string(stats.map_points)},
      {"loop_closures", std::to_string(stats.loop_closures)},
      {"mean_tracking_ms", formatted(stats.mean_tracking_ms)},
  };
}

int commandRunSlam(const RunOptions& options, bool map_only) {
  const SequenceManifest manifest = loadManifest(options.manifest_path);
  const PipelineConfig config = makeConfig(options);
  fs::create_directories(options.out_dir);
  const fs::path out(options.out_dir);

  auto system = runPipeline(manifest, config);

  {
    std::shared_lock lock(system->map().mutex());
    saveMapDump(system->map(), (out / "map.txt").string());
  }
  if (map_only) {
    std::cout << "map written to " << (out / "map.txt").string() << "\n";
    return 0;
  }

  writeTrajectory(system->finalTrajectory(CameraKind::kStereo),
                  (out / "trajectory_stereo.txt").string());
  if (config.hybrid)
    writeTrajectory(system->finalTrajectory(CameraKind::kFisheye),
                    (out / "trajectory_fisheye.txt").string());

  const RunStats stats = system->stats();
  writeReport((out / "timing_report.txt").string(),
              {{"mean_tracking_ms", formatted(stats.mean_tracking_ms)},
               {"frames", std::to_string(stats.stereo_frames +
                                         stats.fisheye_frames)}});
  writeReport((out / "run_report.txt").string(), statsReport(stats));
  for (const auto& [key, value] : statsReport(stats))
    std::cout << key << " " << value << "\n";
  return 0;
}

int commandEvalAte(const std::string& estimate_path,
                   const std::string& reference_path, const std::string& out_dir,
                   double tolerance) {
  const Trajectory estimate = readTrajectory(estimate_path);
  const Trajectory reference = readTrajectory(reference_path);
  const auto report = ateRmse(estimate, reference, tolerance);
  if (!report.ok())
    throw std::runtime_error("too few timestamp associations for ATE");

  const std::vector<std::pair<std::string, std::string>> kv = {
      {"ate_rmse_m", formatted(report.value().rmse)},
      {"ate_mean_m", formatted(report.value().mean)},
      {"ate_median_m", formatted(report.value().median)},
      {"ate_max_m", formatted(report.value().max_error)},
      {"pairs", std::to_string(report.value().pair_count)},
  };
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    writeReport((fs::path(out_dir) / "ate_report.txt").string(), kv);
  }
  for (const auto& [key, value] : kv) std::cout << key << " " << value << "\n";
  return 0;
}

int commandEvalHybrid(const std::string& estimate_stereo,
                      const std::string& estimate_fisheye,
                      const std::string& truth_stereo,
                      const std::string& truth_fisheye,
                      const std::string& out_dir, double tolerance) {
  const auto report = hybridPoseError(
      readTrajectory(estimate_stereo), readTrajectory(estimate_fisheye),
      readTrajectory(truth_stereo), readTrajectory(truth_fisheye), tolerance);
  if (!report.ok())
    throw std::runtime_error("no registered hybrid pairs to evaluate");

  const HybridPoseReport& r = report.value();
  const std::vector<std::pair<std::string, std::string>> kv = {
      {"registered_pairs", std::to_string(r.registered_pairs)},
      {"total_pairs", std::to_string(r.total_pairs)},
      {"mean_translation_cm", formatted(r.mean_translation_cm)},
      {"median_translation_cm", formatted(r.median_translation_cm)},
      {"mean_rotation_deg", formatted(r.mean_rotation_deg)},
      {"median_rotation_deg", formatted(r.median_rotation_deg)},
  };
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    writeReport((fs::path(out_dir) / "hybrid_report.txt").string(), kv);
  }
  for (const auto& [key, value] : kv) std::cout << key << " " << value << "\n";
  return 0;
}

int commandEvalFeatures(const std::string& manifest_path,
                        const std::string& out_dir, int stride,
                        double tolerance) {
  const SequenceManifest manifest = loadManifest(manifest_path);
  if (tolerance <= 0.0) {
    // Default hybrid pair tolerance: half the stereo frame period.
    std::vector<double> stereo_stamps;
    for (const FrameRecord& record : manifest.frames)
      if (record.kind == CameraKind::kStereo)
        stereo_stamps.push_back(record.timestamp);
    tolerance = stereo_stamps.size() > 1
                    ? 0.5 * (stereo_stamps.back() - stereo_stamps.front()) /
                          static_cast<double>(stereo_stamps.size() - 1)
                    : 0.01;
  }
  if (manifest.ground_truth_stereo_path.empty() ||
      manifest.ground_truth_fisheye_path.empty())
    throw std::runtime_error(
        "feature evaluation needs both ground-truth trajectories in the "
        "manifest");
  const Trajectory truth_stereo =
      readTrajectory(manifest.ground_truth_stereo_path);
  const Trajectory truth_fisheye =
      readTrajectory(manifest.ground_truth_fisheye_path);
  const Camera stereo_camera =
      loadCalibration(manifest.stereo_calibration_path);
  const Camera fisheye_camera =
      loadCalibration(manifest.fisheye_calibration_path);

  // Synchronized hybrid frame pairs from the manifest records.
  Trajectory stereo_times, fisheye_times;
  std::vector<std::size_t> stereo_records, fisheye_records;
  for (std::size_t i = 0; i < manifest.frames.size(); ++i) {
    const FrameRecord& record = manifest.frames[i];
    if (record.kind == CameraKind::kStereo) {
      stereo_times.push(record.timestamp, Pose());
      stereo_records.push_back(i);
    } else {
      fisheye_times.push(record.timestamp, Pose());
      fisheye_records.push_back(i);
    }
  }
  const auto frame_pairs =
      associateByTimestamp(fisheye_times, stereo_times, tolerance);

  auto poseAt = [tolerance](const Trajectory& trajectory, double timestamp,
                            Pose* pose) {
    Trajectory query;
    query.push(timestamp, Pose());
    const auto hits = associateByTimestamp(query, trajectory, tolerance);
    if (hits.empty()) return false;
    *pose = trajectory.poses[hits.front().second].pose;
    return true;
  };

  std::vector<FeatureEvalPair> pairs;
  for (std::size_t p = 0; p < frame_pairs.size(); ++p) {
    if (stride > 1 && p % static_cast<std::size_t>(stride) != 0) continue;
    const FrameRecord& fisheye_record =
        manifest.frames[fisheye_records[frame_pairs[p].first]];
    const FrameRecord& stereo_record =
        manifest.frames[stereo_records[frame_pairs[p].second]];
    Pose stereo_in_world, fisheye_in_world;
    if (!poseAt(truth_stereo, stereo_record.timestamp, &stereo_in_world) ||
        !poseAt(truth_fisheye, fisheye_record.timestamp, &fisheye_in_world))
      continue;
    FeatureEvalPair pair;
    pair.stereo_features = loadFeatures(stereo_record.feature_path);
    pair.fisheye_features = loadFeatures(fisheye_record.feature_path);
    pair.truth_stereo_to_fisheye =
        fisheye_in_world.inverse().compose(stereo_in_world);
    pairs.push_back(std::move(pair));
  }

  const auto report = runFeatureEval(pairs, stereo_camera, fisheye_camera);
  if (!report.ok())
    throw std::runtime_error("no synchronized hybrid pairs to evaluate");

  const AucReport& r = report.value();
  const std::vector<std::pair<std::string, std::string>> kv = {
      {"auc_rot", formatted(r.auc_rot)},
      {"auc_trans", formatted(r.auc_trans)},
      {"mean_inlier_matches", formatted(r.mean_inlier_matches)},
      {"pairs_evaluated", std::to_string(r.pairs_evaluated)},
      {"pairs_no_consensus", std::to_string(r.pairs_no_consensus)},
      {"pairs_zero_baseline", std::to_string(r.pairs_zero_baseline)},
  };
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    writeReport((fs::path(out_dir) / "feature_eval_report.txt").string(), kv);
  }
  for (const auto& [key, value] : kv) std::cout << key << " " << value << "\n";
  return 0;
}

int commandSynthGen(const std::string& scene_path, const std::string& out_dir,
                    std::uint32_t seed, bool seed_given) {
  SceneSpec spec;
  if (!scene_path.empty()) spec = loadSceneSpec(scene_path);
  if (seed_given) spec.seed = seed;
  fs::create_directories(out_dir);
  const SyntheticWorld world = generateWorld(spec);
  const std::string manifest_path = exportSequence(world, out_dir);
  std::cout << "manifest " << manifest_path << "\n";
  return 0;
}

int commandTrainVocab(const std::string& manifest_path,
                      const std::string& out_dir, int branching, int depth,
                      std::uint32_t seed) {
  const SequenceManifest manifest = loadManifest(manifest_path);
  std::vector<Descriptor> corpus;
  for (const FrameRecord& record : manifest.frames)
    for (const Feature& f : loadFeatures(record.feature_path))
      corpus.push_back(f.descriptor);
  const Vocabulary vocabulary =
      Vocabulary::train(corpus, branching, depth, seed);
  fs::create_directories(out_dir);
  const std::string path = (fs::path(out_dir) / "vocabulary.bin").string();
  vocabulary.save(path);
  std::cout << "words " << vocabulary.wordCount() << "\n"
            << "vocabulary " << path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hyslam: hybrid stereo + fisheye SLAM"};
  app.require_subcommand(1);

  RunOptions run;
  auto addRunFlags = [&run](CLI::App* cmd) {
    cmd->add_option("--manifest", run.manifest_path, "sequence manifest")
        ->required();
    cmd->add_option("--config", run.config_path, "pipeline config file");
    cmd->add_option("--vocabulary", run.vocabulary_path,
                    "pre-trained vocabulary file");
    cmd->add_option("--out", run.out_dir, "output directory")->required();
    cmd->add_flag("--hybrid", run.hybrid, "fuse the fisheye stream");
    cmd->add_flag("--deterministic,!--threaded", run.deterministic,
                  "single-threaded reproducible schedule (default on)");
    cmd->add_option("--seed", run.seed, "RNG seed");
    cmd->add_option("--features-per-frame", run.features_per_frame,
                    "per-frame feature budget");
  };
  CLI::App* run_slam =
      app.add_subcommand("run-slam", "run the SLAM pipeline on a sequence");
  addRunFlags(run_slam);
  CLI::App* map_export = app.add_subcommand(
      "map-export", "run the pipeline and export only the map dump");
  addRunFlags(map_export);

  std::string estimate_path, reference_path, out_dir;
  double tolerance = 0.01;
  CLI::App* eval_ate =
      app.add_subcommand("eval-ate", "absolute trajectory error");
  eval_ate->add_option("--estimate", estimate_path, "estimated trajectory")
      ->required();
  eval_ate->add_option("--reference", reference_path, "reference trajectory")
      ->required();
  eval_ate->add_option("--out", out_dir, "output directory");
  eval_ate->add_option("--tolerance", tolerance,
                       "timestamp association tolerance, seconds");

  std::string estimate_fisheye, truth_stereo, truth_fisheye;
  CLI::App* eval_hybrid = app.add_subcommand(
      "eval-hybrid", "relative stereo-to-fisheye pose error");
  eval_hybrid
      ->add_option("--estimate-stereo", estimate_path, "estimated stereo")
      ->required();
  eval_hybrid
      ->add_option("--estimate-fisheye", estimate_fisheye,
                   "estimated fisheye")
      ->required();
  eval_hybrid->add_option("--truth-stereo", truth_stereo, "true stereo")
      ->required();
  eval_hybrid->add_option("--truth-fisheye", truth_fisheye, "true fisheye")
      ->required();
  eval_hybrid->add_option("--out", out_dir, "output directory");
  eval_hybrid->add_option("--sync-tolerance", tolerance,
                          "hybrid pair tolerance, seconds");

  std::string manifest_path;
  int stride = 1;
  CLI::App* eval_features = app.add_subcommand(
      "eval-features", "two-view matching accuracy on hybrid pairs");
  eval_features->add_option("--manifest", manifest_path, "sequence manifest")
      ->required();
  eval_features->add_option("--out", out_dir, "output directory");
  eval_features->add_option("--stride", stride, "evaluate every n-th pair");
  double feature_tolerance = -1.0;  // default: half the stereo frame period
  eval_features->add_option("--sync-tolerance", feature_tolerance,
                            "hybrid pair tolerance, seconds");

  std::string scene_path;
  std::uint32_t seed = 1;
  CLI::App* synth_gen =
      app.add_subcommand("synth-gen", "render a synthetic sequence");
  synth_gen->add_option("--scene", scene_path, "scene spec file");
  synth_gen->add_option("--out", out_dir, "output directory")->required();
  CLI::Option* seed_option =
      synth_gen->add_option("--seed", seed, "scene RNG seed");

  int branching = 10, depth = 3;
  std::uint32_t vocab_seed = 42;
  CLI::App* train_vocab = app.add_subcommand(
      "train-vocab", "train a vocabulary from a sequence's descriptors");
  train_vocab->add_option("--manifest", manifest_path, "sequence manifest")
      ->required();
  train_vocab->add_option("--out", out_dir, "output directory")->required();
  train_vocab->add_option("--branching", branching, "tree branching factor");
  train_vocab->add_option("--depth", depth, "tree depth");
  train_vocab->add_option("--seed", vocab_seed, "training RNG seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (run_slam->parsed()) return commandRunSlam(run, false);
    if (map_export->parsed()) return commandRunSlam(run, true);
    if (eval_ate->parsed())
      return commandEvalAte(estimate_path, reference_path, out_dir, tolerance);
    if (eval_hybrid->parsed())
      return commandEvalHybrid(estimate_path, estimate_fisheye, truth_stereo,
                               truth_fisheye, out_dir, tolerance);
    if (eval_features->parsed())
      return commandEvalFeatures(manifest_path, out_dir, stride,
                                 feature_tolerance);
    if (synth_gen->parsed())
      return commandSynthGen(scene_path, out_dir, seed, !seed_option->empty());
    if (train_vocab->parsed())
      return commandTrainVocab(manifest_path, out_dir, branching, depth,
                               vocab_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
