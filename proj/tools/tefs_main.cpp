// tefs: deterministic single-viewport stereo capture simulator and
// evaluation toolkit. Subcommands: capture, convert-depth, vo, evaluate,
// validate-tefs, report.
//
// Exit codes: 0 success, 1 operational or threshold failure, 2 command-line
// usage error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "tefs/capture.hpp"
#include "tefs/dataset_io.hpp"
#include "tefs/depth.hpp"
#include "tefs/errors.hpp"
#include "tefs/pipeline.hpp"
#include "tefs/scenario.hpp"
#include "tefs/timebase.hpp"
#include "tefs/traj_eval.hpp"
#include "tefs/vo_baseline.hpp"

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

// Every subcommand opens with one of these blocks; re-running with exactly
// the values shown reproduces the outputs byte for byte.
class ConfigBlock {
 public:
  ConfigBlock() { out_ << "effective configuration:\n"; }
  ConfigBlock& kv(const std::string& key, const std::string& v) {
    out_ << "  " << key << " = " << v << "\n";
    return *this;
  }
  ConfigBlock& kv(const std::string& key, const char* v) {
    return kv(key, std::string(v));
  }
  ConfigBlock& kv(const std::string& key, bool v) {
    return kv(key, v ? "true" : "false");
  }
  template <typename T, typename = std::enable_if_t<std::is_arithmetic_v<T> &&
                                                    !std::is_same_v<T, bool>>>
  ConfigBlock& kv(const std::string& key, T v) {
    if constexpr (std::is_floating_point_v<T>) {
      char buf[48];
      std::snprintf(buf, sizeof buf, "%.10g", v);
      return kv(key, std::string(buf));
    } else {
      return kv(key, std::to_string(v));
    }
  }
  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
};

struct CaptureArgs {
  std::string scenarioPath;
  std::string outDir;
  std::string method = "tefs";
  std::string condition = "extraSunny";
  std::string depthSemantics = "simNativeNdc";
  std::string schedule = "standard";
  int cycles = -1;      // -1: use the scenario's value
  double speedKmh = -1.0;  // <0: use the scenario's value
  uint64_t seed = 0;
  bool seedSet = false;
  int width = 320, height = 180;
  double hfovDeg = 90.0, vfovDeg = 59.0;
  double nearClip = 0.01, farClip = 600.0;
  double baselineM = 0.54;
  double tickRateHz = 60.0;
  double engineDisparityS = tefs::EngineConfig::kDisparityDefaultS;
  double minFeatureDisparityPx = 3.0;
  bool noImagery = false;
  int cycleLength = 0, presetTick = 0, leftTick = 0, rightTick = 0;
};

std::string describe_capture(const tefs::ScenarioConfig& scn,
                             const tefs::CaptureConfig& cfg,
                             const std::string& scenarioPath,
                             const std::string& outDir) {
  ConfigBlock b;
  b.kv("scenario_file", scenarioPath.empty() ? "<built-in>" : scenarioPath)
      .kv("scenario_name", scn.name)
      .kv("out_dir", outDir)
      .kv("speed_kmh", scn.speedKmh)
      .kv("cycles", scn.cycles)
      .kv("method", tefs::to_string(cfg.mode))
      .kv("condition", cfg.condition.name)
      .kv("seed", cfg.seed)
      .kv("schedule.cycle_length", cfg.schedule.cycleLength)
      .kv("schedule.preset_tick", cfg.schedule.presetTick)
      .kv("schedule.left_capture_tick", cfg.schedule.leftCaptureTick)
      .kv("schedule.right_capture_tick", cfg.schedule.rightCaptureTick)
      .kv("tick_rate_hz", cfg.tickRateHz)
      .kv("engine_disparity_s", cfg.engineDisparityS)
      .kv("camera.width", cfg.camera.width)
      .kv("camera.height", cfg.camera.height)
      .kv("camera.hfov_deg", cfg.camera.hfovDeg)
      .kv("camera.vfov_deg", cfg.camera.vfovDeg)
      .kv("camera.near_clip", cfg.camera.clips.nearClip)
      .kv("camera.far_clip", cfg.camera.clips.farClip)
      .kv("rig.baseline_m", cfg.rig.baselineM)
      .kv("min_feature_disparity_px", cfg.minFeatureDisparityPx)
      .kv("depth_semantics", tefs::to_string(cfg.depthSemantics))
      .kv("write_imagery", cfg.writeImagery)
      .kv("leak_fraction", scn.leakFraction);
  return b.str();
}

tefs::CaptureConfig build_capture_config(const CaptureArgs& a,
                                         const tefs::ScenarioConfig& scn) {
  tefs::CaptureConfig cfg;
  cfg.mode = tefs::capture_mode_from_string(a.method);
  cfg.condition = tefs::ConditionProfile::preset(a.condition);
  cfg.depthSemantics =
      tefs::depth_semantics_from_string(a.depthSemantics.c_str());
  cfg.schedule = a.schedule == "extended" ? tefs::CycleSchedule::extended()
                                          : tefs::CycleSchedule::standard();
  if (a.schedule != "standard" && a.schedule != "extended") {
    throw std::invalid_argument("unknown schedule '" + a.schedule +
                                "' (expected standard or extended)");
  }
  if (a.cycleLength > 0) cfg.schedule.cycleLength = a.cycleLength;
  if (a.presetTick > 0) cfg.schedule.presetTick = a.presetTick;
  if (a.leftTick > 0) cfg.schedule.leftCaptureTick = a.leftTick;
  if (a.rightTick > 0) cfg.schedule.rightCaptureTick = a.rightTick;
  cfg.seed = a.seedSet ? a.seed : scn.defaultSeed;
  cfg.camera.width = a.width;
  cfg.camera.height = a.height;
  cfg.camera.hfovDeg = a.hfovDeg;
  cfg.camera.vfovDeg = a.vfovDeg;
  cfg.camera.clips.nearClip = a.nearClip;
  cfg.camera.clips.farClip = a.farClip;
  cfg.rig.baselineM = a.baselineM;
  cfg.tickRateHz = a.tickRateHz;
  cfg.engineDisparityS = a.engineDisparityS;
  cfg.minFeatureDisparityPx = a.minFeatureDisparityPx;
  cfg.writeImagery = !a.noImagery;
  return cfg;
}

int cmd_capture(const CaptureArgs& a) {
  tefs::ScenarioConfig scn = tefs::ScenarioConfig::parse_file(a.scenarioPath);
  if (a.cycles > 0) scn.cycles = a.cycles;
  if (a.speedKmh >= 0.0) scn.speedKmh = a.speedKmh;

  const tefs::CaptureConfig cfg = build_capture_config(a, scn);
  const std::string desc = describe_capture(scn, cfg, a.scenarioPath,
                                            a.outDir);
  std::cout << desc;

  const tefs::CaptureRun run = tefs::run_capture(scn, cfg, a.outDir);
  tefs::write_text_file(a.outDir + "/effective_config.txt", desc);

  char buf[200];
  std::snprintf(buf, sizeof buf,
                "captured %zu stereo pairs over %llu render ticks "
                "(%.3f in-game s); expected per-pair gap %.6f ms\n",
                run.pairs.size(),
                static_cast<unsigned long long>(run.ticksRun),
                run.inGameDuration, tefs::expected_pair_disparity(cfg) * 1e3);
  std::cout << buf;
  std::cout << "manifest:\n"
            << tefs::read_text_file(a.outDir + "/manifest.json");
  return 0;
}

int cmd_convert_depth(const std::string& inPath, const std::string& outPath,
                      const std::string& calibPath, const std::string& to,
                      const std::string& previewPath) {
  ConfigBlock b;
  b.kv("in", inPath).kv("out", outPath).kv("calib", calibPath).kv("to", to);
  if (!previewPath.empty()) b.kv("preview", previewPath);
  std::cout << b.str();

  const tefs::DepthBin bin = tefs::read_depth_bin(inPath);
  const tefs::CalibInfo calib = tefs::read_calib(calibPath);
  if (calib.width != bin.width || calib.height != bin.height) {
    throw tefs::IoError("calibration is for " + std::to_string(calib.width) +
                        "x" + std::to_string(calib.height) +
                        " but the depth buffer is " +
                        std::to_string(bin.width) + "x" +
                        std::to_string(bin.height));
  }
  const tefs::DepthSemantics target =
      tefs::depth_semantics_from_string(to.c_str());
  if (target != tefs::DepthSemantics::PlanarMeters &&
      target != tefs::DepthSemantics::RayMeters) {
    throw std::invalid_argument(
        "conversion target must be planarMeters or rayMeters");
  }

  const double fx = calib.fx, fy = calib.fy, cx = calib.cx, cy = calib.cy;
  tefs::DepthBin out;
  out.width = bin.width;
  out.height = bin.height;
  out.semantics = target;
  out.data.resize(bin.data.size());
  size_t invalid = 0;
  for (int y = 0; y < bin.height; ++y) {
    for (int x = 0; x < bin.width; ++x) {
      const size_t idx = static_cast<size_t>(y) * bin.width + x;
      const double xt = (x + 0.5 - cx) / fx;
      const double yt = (y + 0.5 - cy) / fy;
      const auto dec = tefs::decode_depth(bin.semantics, bin.data[idx], xt, yt,
                                          calib.clips);
      double meters = dec.meters;
      if (dec.valid && target == tefs::DepthSemantics::PlanarMeters) {
        meters = dec.meters / tefs::ray_factor(xt, yt);
      }
      if (!dec.valid) ++invalid;
      out.data[idx] = static_cast<float>(meters);
    }
  }
  tefs::write_depth_bin(outPath, out);
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "converted %s -> %s (%dx%d, %zu px outside the trusted "
                "range)\n",
                tefs::to_string(bin.semantics), tefs::to_string(target),
                bin.width, bin.height, invalid);
  std::cout << buf;

  if (!previewPath.empty()) {
    // Grayscale preview: near = bright, far clip/invalid = dark.
    tefs::Image img(bin.width, bin.height);
    float lo = std::numeric_limits<float>::infinity(), hi = 0;
    for (float v : out.data) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    const float span = (hi > lo) ? hi - lo : 1.0f;
    for (int y = 0; y < bin.height; ++y) {
      for (int x = 0; x < bin.width; ++x) {
        const float v = out.data[static_cast<size_t>(y) * bin.width + x];
        uint8_t g = 0;
        if (std::isfinite(v)) {
          g = static_cast<uint8_t>(
              std::clamp(255.0f * (1.0f - (v - lo) / span), 0.0f, 255.0f));
        }
        uint8_t* px = img.px(x, y);
        px[0] = px[1] = px[2] = g;
      }
    }
    tefs::write_ppm(previewPath, img);
    std::cout << "preview written to " << previewPath << "\n";
  }
  return 0;
}

int cmd_vo(const std::string& dataset, std::string outDir, double noisePx,
           uint64_t seed, size_t minCommon) {
  if (outDir.empty()) outDir = dataset + "/vo";
  ConfigBlock b;
  b.kv("dataset", dataset)
      .kv("out", outDir)
      .kv("noise_px", noisePx)
      .kv("seed", seed)
      .kv("min_common", minCommon);
  std::cout << b.str();

  tefs::ensure_dir(outDir);
  tefs::VoOptions opts;
  opts.noiseSigmaPx = noisePx;
  opts.seed = seed;
  opts.minCommonPoints = minCommon;
  const tefs::VoResult res = tefs::run_vo(dataset, opts);
  res.trajectory.save(outDir + "/est_poses.txt", outDir + "/est_times.txt");

  ordered_json j;
  j["dataset"] = dataset;
  j["frames"] = res.frames;
  j["holes"] = res.holes;
  j["partial"] = res.partial;
  j["noise_sigma_px"] = noisePx;
  j["seed"] = seed;
  j["est_path_length_m"] = res.trajectory.path_length();
  tefs::write_text_file(outDir + "/vo_report.json", j.dump(2) + "\n");

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "odometry over %zu frames (%zu holes%s), estimate written to "
                "%s\n",
                res.frames, res.holes, res.partial ? ", PARTIAL" : "",
                outDir.c_str());
  std::cout << buf;
  return 0;
}

double auto_assoc_tolerance(const std::vector<double>& times) {
  if (times.size() < 2) return 0.02;
  std::vector<double> dts;
  for (size_t i = 1; i < times.size(); ++i) {
    dts.push_back(times[i] - times[i - 1]);
  }
  std::sort(dts.begin(), dts.end());
  return 0.5 * dts[dts.size() / 2];
}

// A trajectory argument may be a VO output directory, a dataset directory,
// or a bare pose file (timestamps then default to the row index).
tefs::Trajectory resolve_trajectory(const std::string& path) {
  if (fs::is_directory(path)) {
    if (fs::exists(path + "/est_poses.txt")) {
      return tefs::Trajectory::load(path + "/est_poses.txt",
                                    path + "/est_times.txt");
    }
    if (fs::exists(path + "/poses.txt")) {
      return tefs::Trajectory::load(path + "/poses.txt", path + "/times.txt");
    }
    throw tefs::IoError("'" + path +
                        "' contains neither est_poses.txt nor poses.txt");
  }
  tefs::Trajectory t;
  t.poses = tefs::read_poses_kitti(path);
  t.times.resize(t.poses.size());
  for (size_t i = 0; i < t.times.size(); ++i) {
    t.times[i] = static_cast<double>(i);
  }
  return t;
}

void csv_stats(std::ostringstream& csv, const std::string& prefix,
               const tefs::ErrorStats& s) {
  char buf[64];
  auto row = [&](const char* stat, double v) {
    std::snprintf(buf, sizeof buf, "%.12g", v);
    csv << prefix << "." << stat << "," << buf << "\n";
  };
  row("rmse", s.rmse);
  row("mean", s.mean);
  row("median", s.median);
  row("min", s.min);
  row("max", s.max);
  csv << prefix << ".count," << s.count << "\n";
}

int cmd_evaluate(const std::string& estPath, const std::string& gtPath,
                 const std::string& alignArg, bool scaleCorrect, double maxDt,
                 const std::string& jsonPath, const std::string& csvPath) {
  tefs::Trajectory est = resolve_trajectory(estPath);
  const tefs::Trajectory gt = resolve_trajectory(gtPath);
  if (maxDt <= 0) maxDt = auto_assoc_tolerance(gt.times);

  ConfigBlock b;
  b.kv("est", estPath)
      .kv("gt", gtPath)
      .kv("align", alignArg)
      .kv("scale_correct", scaleCorrect)
      .kv("max_dt", maxDt);
  if (!jsonPath.empty()) b.kv("json", jsonPath);
  if (!csvPath.empty()) b.kv("csv", csvPath);
  std::cout << b.str();

  const bool all = alignArg == "all";
  if (!all) tefs::align_mode_from_string(alignArg);  // validates the name

  if (scaleCorrect) {
    est = tefs::scale_correct(est, gt);
    char buf[96];
    std::snprintf(buf, sizeof buf,
                  "scale correction applied: estimate length now %.6f m\n",
                  est.path_length());
    std::cout << buf;
  }

  if (all) {
    // The full report aligns every way; degenerate geometry (e.g. perfectly
    // straight paths) makes rigid/similarity alignment ill-posed, in which
    // case a single --align mode is the way to evaluate.
    const tefs::EvaluationReport rep =
        tefs::evaluate_trajectories(est, gt, maxDt);
    std::cout << tefs::evaluation_text(rep);
    if (!jsonPath.empty()) {
      tefs::write_text_file(jsonPath, tefs::evaluation_json(rep));
      std::cout << "report written to " << jsonPath << "\n";
    }
    if (!csvPath.empty()) {
      std::ostringstream csv;
      csv << "key,value\n";
      csv << "est_poses," << rep.estPoses << "\n";
      csv << "gt_poses," << rep.gtPoses << "\n";
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.12g", rep.estPathLength);
      csv << "est_path_length_m," << buf << "\n";
      std::snprintf(buf, sizeof buf, "%.12g", rep.gtPathLength);
      csv << "gt_path_length_m," << buf << "\n";
      auto apeBlock = [&](const char* name, const tefs::ApeResult& r) {
        csv_stats(csv, std::string("ape.") + name + ".translation_m",
                  r.translation);
        std::snprintf(buf, sizeof buf, "%.12g", r.rmsePercent);
        csv << "ape." << name << ".rmse_percent," << buf << "\n";
      };
      apeBlock("none", rep.apeNone);
      apeBlock("rigid", rep.apeRigid);
      apeBlock("similarity", rep.apeSim);
      std::snprintf(buf, sizeof buf, "%.12g", rep.apeSim.alignment.scale);
      csv << "ape.similarity.scale," << buf << "\n";
      csv_stats(csv, "rpe.frame1.translation_m", rep.rpeOneFrame.translationM);
      csv_stats(csv, "rpe.frame1.rotation_deg", rep.rpeOneFrame.rotationDeg);
      csv << "rpe.dist100m.valid," << (rep.rpeDistanceValid ? 1 : 0) << "\n";
      if (rep.rpeDistanceValid) {
        csv_stats(csv, "rpe.dist100m.translation_m",
                  rep.rpeDistance100m.translationM);
        csv_stats(csv, "rpe.dist100m.rotation_deg",
                  rep.rpeDistance100m.rotationDeg);
      }
      tefs::write_text_file(csvPath, csv.str());
      std::cout << "csv written to " << csvPath << "\n";
    }
    return 0;
  }

  // Single alignment mode: compute only what was asked for, so degenerate
  // geometry in an unrequested mode cannot fail the run.
  const tefs::AlignMode mode = tefs::align_mode_from_string(alignArg);
  const tefs::ApeResult r = tefs::ape(est, gt, mode, maxDt);
  const tefs::RpeResult rpe1 = tefs::rpe_frames(est, gt, 1, maxDt);
  char buf[192];
  std::cout << "absolute error, " << alignArg << " alignment:\n";
  std::snprintf(buf, sizeof buf,
                "  translation        rmse %.6f  mean %.6f  median %.6f  "
                "max %.6f m (n=%zu)\n",
                r.translation.rmse, r.translation.mean, r.translation.median,
                r.translation.max, r.translation.count);
  std::cout << buf;
  std::snprintf(buf, sizeof buf, "  rmse/length        %.6f %% of %.3f m\n",
                r.rmsePercent, r.gtPathLength);
  std::cout << buf;
  std::snprintf(buf, sizeof buf,
                "relative error, one-frame delta: trans rmse %.6f m, rot "
                "rmse %.6f deg\n",
                rpe1.translationM.rmse, rpe1.rotationDeg.rmse);
  std::cout << buf;

  if (!jsonPath.empty()) {
    ordered_json j;
    j["est_poses"] = est.size();
    j["gt_poses"] = gt.size();
    j["align"] = alignArg;
    j["ape"] = {{"rmse", r.translation.rmse},
                {"mean", r.translation.mean},
                {"median", r.translation.median},
                {"max", r.translation.max},
                {"rmse_percent", r.rmsePercent}};
    j["rpe_1frame"] = {{"trans_rmse_m", rpe1.translationM.rmse},
                       {"rot_rmse_deg", rpe1.rotationDeg.rmse}};
    tefs::write_text_file(jsonPath, j.dump(2) + "\n");
    std::cout << "report written to " << jsonPath << "\n";
  }
  if (!csvPath.empty()) {
    std::ostringstream csv;
    csv << "key,value\n";
    auto apePrefix = std::string("ape.") + alignArg + ".translation_m";
    csv_stats(csv, apePrefix, r.translation);
    std::snprintf(buf, sizeof buf, "%.12g", r.rmsePercent);
    csv << "ape." << alignArg << ".rmse_percent," << buf << "\n";
    csv_stats(csv, "rpe.frame1.translation_m", rpe1.translationM);
    csv_stats(csv, "rpe.frame1.rotation_deg", rpe1.rotationDeg);
    tefs::write_text_file(csvPath, csv.str());
    std::cout << "csv written to " << csvPath << "\n";
  }
  return 0;
}

struct ValidateArgs {
  std::string scenarioPath;  // empty: built-in loop
  std::string outDir = "tefs_validation";
  double speedKmh = -1.0;  // <0: scenario's own speed
  std::string method = "tefs";
  std::string condition = "extraSunny";
  int cycles = -1;
  uint64_t seed = 0;
  bool seedSet = false;
  double engineDisparityS = tefs::EngineConfig::kDisparityValidationS;
  double tickRateHz = 60.0;
  int width = 320, height = 180;
  bool imagery = false;
  double apeDeltaMaxPct = 0.2;
};

int cmd_validate_tefs(const ValidateArgs& a) {
  tefs::ScenarioConfig scn =
      a.scenarioPath.empty() ? tefs::default_validation_scenario()
                             : tefs::ScenarioConfig::parse_file(a.scenarioPath);
  if (a.speedKmh >= 0.0) scn.speedKmh = a.speedKmh;
  if (a.cycles > 0) scn.cycles = a.cycles;
  const uint64_t seed = a.seedSet ? a.seed : scn.defaultSeed;
  const tefs::CaptureMode offsetMethod =
      tefs::capture_mode_from_string(a.method);

  ConfigBlock b;
  b.kv("scenario_file",
       a.scenarioPath.empty() ? "<built-in>" : a.scenarioPath)
      .kv("scenario_name", scn.name)
      .kv("out_dir", a.outDir)
      .kv("speed_kmh", scn.speedKmh)
      .kv("cycles", scn.cycles)
      .kv("method", a.method)
      .kv("condition", a.condition)
      .kv("seed", seed)
      .kv("engine_disparity_s", a.engineDisparityS)
      .kv("tick_rate_hz", a.tickRateHz)
      .kv("camera.width", a.width)
      .kv("camera.height", a.height)
      .kv("write_imagery", a.imagery)
      .kv("ape_pct_delta_max", a.apeDeltaMaxPct);
  std::cout << b.str();

  std::vector<std::string> failures;

  // 1. Protocol self-checks.
  tefs::ensure_dir(a.outDir);
  const tefs::ValidationReport protocol =
      tefs::run_protocol_validation(a.outDir + "/protocol_scratch", seed);
  std::cout << "\nprotocol self-checks:\n" << tefs::validation_text(protocol);
  for (const auto& c : protocol.checks) {
    if (!c.pass) failures.push_back("protocol:" + c.name);
  }

  // 2. Capture the same scenario with the single-viewport protocol and with
  // the dual-viewport oracle.
  tefs::CaptureConfig cfg;
  cfg.seed = seed;
  cfg.condition = tefs::ConditionProfile::preset(a.condition);
  cfg.camera.width = a.width;
  cfg.camera.height = a.height;
  cfg.tickRateHz = a.tickRateHz;
  cfg.engineDisparityS = a.engineDisparityS;
  cfg.writeImagery = a.imagery;
  cfg.mode = tefs::CaptureMode::Tefs;
  const tefs::CaptureRun runT = tefs::run_capture(scn, cfg, a.outDir + "/tefs");
  cfg.mode = tefs::CaptureMode::DualViewport;
  const tefs::CaptureRun runD = tefs::run_capture(scn, cfg, a.outDir + "/dual");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "\ncaptured %zu pairs per method (tefs pair gap %.4f ms, "
                "dual pair gap 0 ms)\n",
                runT.pairs.size(), a.engineDisparityS * 1e3);
  std::cout << buf;

  // 3. Stereo odometry on both captures.
  tefs::VoOptions vopts;
  vopts.seed = seed;
  const tefs::VoResult voT = tefs::run_vo(a.outDir + "/tefs", vopts);
  const tefs::VoResult voD = tefs::run_vo(a.outDir + "/dual", vopts);
  tefs::ensure_dir(a.outDir + "/tefs/vo");
  tefs::ensure_dir(a.outDir + "/dual/vo");
  voT.trajectory.save(a.outDir + "/tefs/vo/est_poses.txt",
                      a.outDir + "/tefs/vo/est_times.txt");
  voD.trajectory.save(a.outDir + "/dual/vo/est_poses.txt",
                      a.outDir + "/dual/vo/est_times.txt");
  if (voT.holes || voD.holes) {
    std::snprintf(buf, sizeof buf,
                  "odometry holes: tefs %zu, dual %zu (of %zu frames)\n",
                  voT.holes, voD.holes, voT.frames);
    std::cout << buf;
  }

  // 4. Evaluate each estimate against its own capture's reference poses.
  const tefs::Trajectory gtT = tefs::Trajectory::load(
      a.outDir + "/tefs/poses.txt", a.outDir + "/tefs/times.txt");
  const tefs::Trajectory gtD = tefs::Trajectory::load(
      a.outDir + "/dual/poses.txt", a.outDir + "/dual/times.txt");
  const double maxDt = auto_assoc_tolerance(gtT.times);
  const tefs::EvaluationReport evT =
      tefs::evaluate_trajectories(voT.trajectory, gtT, maxDt);
  const tefs::EvaluationReport evD =
      tefs::evaluate_trajectories(voD.trajectory, gtD, maxDt);

  // 5. Side-by-side table.
  std::cout << "\nside-by-side odometry error (tefs capture vs dual-viewport "
               "oracle):\n";
  std::snprintf(buf, sizeof buf, "  %-28s %12s %12s %12s\n", "metric", "tefs",
                "dual", "|delta|");
  std::cout << buf;
  auto row = [&](const char* name, double t, double d) {
    std::snprintf(buf, sizeof buf, "  %-28s %12.6f %12.6f %12.6f\n", name, t,
                  d, std::abs(t - d));
    std::cout << buf;
  };
  row("APE rmse m (rigid)", evT.apeRigid.translation.rmse,
      evD.apeRigid.translation.rmse);
  row("APE rmse % (rigid)", evT.apeRigid.rmsePercent,
      evD.apeRigid.rmsePercent);
  row("APE rmse m (similarity)", evT.apeSim.translation.rmse,
      evD.apeSim.translation.rmse);
  row("APE rmse % (similarity)", evT.apeSim.rmsePercent,
      evD.apeSim.rmsePercent);
  row("RPE trans rmse m (d=1)", evT.rpeOneFrame.translationM.rmse,
      evD.rpeOneFrame.translationM.rmse);
  row("RPE rot rmse deg (d=1)", evT.rpeOneFrame.rotationDeg.rmse,
      evD.rpeOneFrame.rotationDeg.rmse);
  if (evT.rpeDistanceValid && evD.rpeDistanceValid) {
    row("RPE trans rmse m (d=100m)", evT.rpeDistance100m.translationM.rmse,
        evD.rpeDistance100m.translationM.rmse);
  }
  std::snprintf(buf, sizeof buf,
                "  trajectory length: %.3f m over %zu pairs\n",
                gtT.path_length(), gtT.size());
  std::cout << buf;

  // 6. Expected inter-eye offsets from the motion model.
  std::cout << "\nexpected inter-eye offsets (speed x temporal gap):\n";
  const struct {
    double kmh, gapS;
    const char* quoted;
  } offsetRows[] = {{10, 0.0005, "1.39 mm"},
                    {15, 0.0005, "2 mm"},
                    {25, 0.0005, "3.47 mm"},
                    {120, 0.0167, "56 cm"}};
  for (const auto& r : offsetRows) {
    std::snprintf(buf, sizeof buf,
                  "  %6.1f km/h x %5.2f ms -> %10.4f mm  (quoted %s)\n", r.kmh,
                  r.gapS * 1e3, tefs::spatial_offset_m(r.kmh, r.gapS) * 1e3,
                  r.quoted);
    std::cout << buf;
  }
  const double methodGap = offsetMethod == tefs::CaptureMode::Tefs
                               ? a.engineDisparityS
                           : offsetMethod == tefs::CaptureMode::NaiveSwap
                               ? 0.0167
                               : 0.0;
  std::snprintf(buf, sizeof buf,
                "reported offset (%s at %.4g km/h, %.4g ms gap): %.6f m\n",
                tefs::to_string(offsetMethod), scn.speedKmh, methodGap * 1e3,
                tefs::spatial_offset_m(scn.speedKmh, methodGap));
  std::cout << buf;

  // 7. Thresholds.
  const double deltaPct =
      std::abs(evT.apeRigid.rmsePercent - evD.apeRigid.rmsePercent);
  std::cout << "\nthresholds:\n";
  std::snprintf(buf, sizeof buf,
                "  %s  ape_pct_delta(rigid) %.6f <= %.3f\n",
                deltaPct <= a.apeDeltaMaxPct ? "PASS" : "FAIL", deltaPct,
                a.apeDeltaMaxPct);
  std::cout << buf;
  if (deltaPct > a.apeDeltaMaxPct) failures.push_back("ape_pct_delta(rigid)");
  std::snprintf(buf, sizeof buf, "  %s  protocol self-checks\n",
                protocol.all_pass() ? "PASS" : "FAIL");
  std::cout << buf;

  if (failures.empty()) {
    std::cout << "validate-tefs: all thresholds passed\n";
    return 0;
  }
  std::cout << "validate-tefs FAILED:";
  for (const auto& f : failures) std::cout << " " << f;
  std::cout << "\n";
  return 1;
}

void manifest_summary(const std::string& dataset, std::ostream& out,
                      std::ostringstream* csv) {
  const tefs::DatasetManifest m =
      tefs::read_manifest(dataset + "/manifest.json");
  out << "dataset " << dataset << "\n";
  out << "  scenario:    " << m.scenario << "\n";
  out << "  method:      " << m.method << "\n";
  out << "  condition:   " << m.conditionProfile << "\n";
  out << "  frames:      " << m.frameCount
      << (m.complete ? "" : "  (INCOMPLETE RUN)") << "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "  trajectory:  %.3f m\n",
                m.trajectoryLengthM);
  out << buf;
  out << "  seed:        " << m.seed << "\n";
  std::snprintf(buf, sizeof buf, "  in-game:     %.3f s over %llu ticks\n",
                m.inGameDurationS,
                static_cast<unsigned long long>(m.ticksRun));
  out << buf;
  std::snprintf(buf, sizeof buf, "  pair gap:    %.6f ms expected\n",
                m.expectedPairDisparityS * 1e3);
  out << buf;
  std::snprintf(buf, sizeof buf, "  features:    min %d / mean %.1f per pair\n",
                m.minFeaturesPerPair, m.meanFeaturesPerPair);
  out << buf;
  const double gameDay = tefs::game_to_real(m.inGameDurationS, 2880.0);
  std::snprintf(buf, sizeof buf,
                "  on a 2880 s game day this spans %.3f real s\n", gameDay);
  out << buf;
  if (csv) {
    *csv << "dataset," << dataset << "\n";
    *csv << "scenario," << m.scenario << "\n";
    *csv << "method," << m.method << "\n";
    *csv << "condition_profile," << m.conditionProfile << "\n";
    *csv << "frame_count," << m.frameCount << "\n";
    std::snprintf(buf, sizeof buf, "%.12g", m.trajectoryLengthM);
    *csv << "trajectory_length_m," << buf << "\n";
    *csv << "seed," << m.seed << "\n";
    *csv << "complete," << (m.complete ? 1 : 0) << "\n";
  }
}

// Side-by-side table over evaluation JSON files written by `evaluate --json`.
void eval_table(const std::vector<std::string>& evalPaths, std::ostream& out,
                std::ostringstream* csv) {
  std::vector<ordered_json> reports;
  for (const auto& p : evalPaths) {
    reports.push_back(ordered_json::parse(tefs::read_text_file(p)));
  }
  struct RowSpec {
    const char* label;
    const char* node;
    const char* stat;  // nullptr: node is scalar
    const char* sub;
  };
  const RowSpec rows[] = {
      {"APE rmse m (rigid)", "ape_rigid", "translation_m", "rmse"},
      {"APE mean m (rigid)", "ape_rigid", "translation_m", "mean"},
      {"APE max m (rigid)", "ape_rigid", "translation_m", "max"},
      {"APE rmse % (rigid)", "ape_rigid", nullptr, "rmse_percent"},
      {"APE rmse % (similarity)", "ape_sim", nullptr, "rmse_percent"},
      {"RPE trans rmse m (d=1)", "rpe_1frame", "translation_m", "rmse"},
      {"RPE rot rmse deg (d=1)", "rpe_1frame", "rotation_deg", "rmse"},
  };
  out << "side-by-side evaluation:\n";
  char buf[64];
  out << "  " << std::string(26, ' ');
  for (const auto& p : evalPaths) {
    std::string stem = fs::path(p).stem().string();
    if (stem.size() > 14) stem = stem.substr(0, 14);
    std::snprintf(buf, sizeof buf, " %14s", stem.c_str());
    out << buf;
  }
  out << "\n";
  if (csv) {
    *csv << "metric";
    for (const auto& p : evalPaths) *csv << "," << fs::path(p).stem().string();
    *csv << "\n";
  }
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "  %-26s", r.label);
    out << buf;
    if (csv) *csv << r.label;
    for (const auto& j : reports) {
      double v = std::numeric_limits<double>::quiet_NaN();
      if (j.contains(r.node)) {
        const auto& n = j[r.node];
        if (r.stat && n.contains(r.stat) && n[r.stat].contains(r.sub)) {
          v = n[r.stat][r.sub].get<double>();
        } else if (!r.stat && n.contains(r.sub)) {
          v = n[r.sub].get<double>();
        }
      }
      std::snprintf(buf, sizeof buf, " %14.6f", v);
      out << buf;
      if (csv) {
        std::snprintf(buf, sizeof buf, "%.12g", v);
        *csv << "," << buf;
      }
    }
    out << "\n";
    if (csv) *csv << "\n";
  }
}

int cmd_report(const std::string& dataset,
               const std::vector<std::string>& evalPaths,
               const std::string& csvPath) {
  ConfigBlock b;
  if (!dataset.empty()) b.kv("dataset", dataset);
  for (const auto& p : evalPaths) b.kv("eval", p);
  if (!csvPath.empty()) b.kv("csv", csvPath);
  std::cout << b.str();

  std::ostringstream csv;
  std::ostringstream* csvOut = csvPath.empty() ? nullptr : &csv;
  if (!dataset.empty()) manifest_summary(dataset, std::cout, csvOut);
  if (!evalPaths.empty()) eval_table(evalPaths, std::cout, csvOut);
  if (!csvPath.empty()) {
    tefs::write_text_file(csvPath, csv.str());
    std::cout << "csv written to " << csvPath << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Deterministic single-viewport stereo capture simulator and "
      "evaluation toolkit"};
  app.require_subcommand(1);

  CaptureArgs cap;
  auto* capture = app.add_subcommand(
      "capture", "Drive a scenario and write a stereo dataset");
  capture->add_option("--scenario", cap.scenarioPath, "scenario file")
      ->required();
  capture->add_option("--out", cap.outDir, "output dataset directory")
      ->required();
  capture->add_option("--method", cap.method, "tefs | naive | dual");
  capture->add_option("--condition", cap.condition,
                      "sunny | rain | storm (canonical profile names also "
                      "accepted)");
  capture->add_option("--depth-semantics", cap.depthSemantics,
                      "simNativeNdc | draftEq2 | cameraReadyInline | "
                      "planarMeters | rayMeters");
  capture->add_option("--schedule", cap.schedule, "standard | extended");
  capture->add_option("--cycle-length", cap.cycleLength,
                      "override: ticks per capture cycle");
  capture->add_option("--preset-tick", cap.presetTick,
                      "override: pseudo-pause after this tick");
  capture->add_option("--left-tick", cap.leftTick,
                      "override: left capture tick");
  capture->add_option("--right-tick", cap.rightTick,
                      "override: right capture tick");
  capture->add_option("--cycles", cap.cycles, "override: number of pairs");
  capture->add_option("--speed", cap.speedKmh,
                      "override: vehicle speed in km/h");
  auto* seedOpt = capture->add_option("--seed", cap.seed,
                                      "override the scenario seed");
  capture->add_option("--width", cap.width, "image width [320]");
  capture->add_option("--height", cap.height, "image height [180]");
  capture->add_option("--hfov-deg", cap.hfovDeg, "horizontal fov [90]");
  capture->add_option("--vfov-deg", cap.vfovDeg, "vertical fov [59]");
  capture->add_option("--near-clip", cap.nearClip, "near clip [0.01]");
  capture->add_option("--far-clip", cap.farClip, "far clip [600]");
  capture->add_option("--baseline-m", cap.baselineM, "stereo baseline [0.54]");
  capture->add_option("--tick-rate-hz", cap.tickRateHz, "render rate [60]");
  capture->add_option("--engine-disparity-s", cap.engineDisparityS,
                      "in-game seconds between the eyes of a pair [0.00025]");
  capture->add_option("--min-feature-disparity", cap.minFeatureDisparityPx,
                      "discard stereo features below this disparity [3 px]");
  capture->add_flag("--no-imagery", cap.noImagery,
                    "skip rasterization and image/depth files; poses, times "
                    "and features are still produced");

  std::string cdIn, cdOut, cdCalib, cdTo = "planarMeters", cdPreview;
  auto* convert = app.add_subcommand(
      "convert-depth", "Convert a stored depth buffer to metres");
  convert->add_option("--in", cdIn, "input .bin")->required();
  convert->add_option("--out", cdOut, "output .bin")->required();
  convert->add_option("--calib", cdCalib, "calib.txt of the dataset")
      ->required();
  convert->add_option("--to", cdTo, "planarMeters | rayMeters");
  convert->add_option("--preview", cdPreview, "optional grayscale .ppm");

  std::string voDataset, voOut;
  double voNoise = 0.0;
  uint64_t voSeed = 0;
  size_t voMinCommon = 3;
  auto* vo = app.add_subcommand(
      "vo", "Stereo odometry over a captured dataset");
  vo->add_option("--dataset", voDataset, "dataset directory")->required();
  vo->add_option("--out", voOut, "output directory [<dataset>/vo]");
  vo->add_option("--noise-px", voNoise, "feature noise sigma in pixels [0]");
  vo->add_option("--seed", voSeed, "noise seed [0]");
  vo->add_option("--min-common", voMinCommon,
                 "minimum shared landmarks per motion estimate [3]");

  std::string evEst, evGt, evAlign = "all", evJson, evCsv;
  bool evScaleCorrect = false;
  double evMaxDt = 0.0;
  auto* ev = app.add_subcommand(
      "evaluate", "Compare an odometry estimate against a reference");
  ev->add_option("--est", evEst,
                 "estimate: VO output dir, dataset dir, or pose file")
      ->required();
  ev->add_option("--gt,--ref", evGt,
                 "reference: dataset dir or pose file")
      ->required();
  ev->add_option("--align", evAlign, "none | rigid | similarity | all [all]");
  ev->add_flag("--scale-correct", evScaleCorrect,
               "rescale the estimate by length(gt)/length(est) first");
  ev->add_option("--max-dt", evMaxDt,
                 "association window in seconds [auto: half frame interval]");
  ev->add_option("--json", evJson, "also write a JSON report here");
  ev->add_option("--csv", evCsv, "also write a key,value CSV here");

  ValidateArgs va;
  auto* validate = app.add_subcommand(
      "validate-tefs",
      "Protocol self-checks plus an end-to-end capture comparison against "
      "the dual-viewport oracle");
  validate->add_option("--scenario", va.scenarioPath,
                       "scenario file [built-in validation loop]");
  validate->add_option("--out", va.outDir,
                       "output directory [tefs_validation]");
  validate->add_option("--speed", va.speedKmh,
                       "override: vehicle speed in km/h");
  validate->add_option("--method", va.method,
                       "offset row to report: tefs | naive | dual [tefs]");
  validate->add_option("--condition", va.condition,
                       "capture condition profile [extraSunny]");
  validate->add_option("--cycles", va.cycles, "override: number of pairs");
  auto* vaSeedOpt =
      validate->add_option("--seed", va.seed, "override the scenario seed");
  validate->add_option("--engine-disparity-s", va.engineDisparityS,
                       "tefs in-game eye gap in seconds [0.0005]");
  validate->add_option("--width", va.width, "image width [320]");
  validate->add_option("--height", va.height, "image height [180]");
  validate->add_flag("--imagery", va.imagery,
                     "also write images and depth (slower; odometry only "
                     "needs features)");
  validate->add_option("--max-ape-delta", va.apeDeltaMaxPct,
                       "APE_pct delta threshold [0.2]");

  std::string repDataset, repCsv;
  std::vector<std::string> repEvals;
  auto* rep = app.add_subcommand(
      "report", "Summarize a dataset and/or tabulate evaluation reports");
  rep->add_option("--dataset", repDataset, "dataset directory");
  rep->add_option("--eval", repEvals,
                  "evaluation JSON (repeatable, side-by-side columns)");
  rep->add_option("--csv", repCsv, "write the tables as CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (capture->parsed()) {
      cap.seedSet = seedOpt->count() > 0;
      return cmd_capture(cap);
    }
    if (convert->parsed()) {
      return cmd_convert_depth(cdIn, cdOut, cdCalib, cdTo, cdPreview);
    }
    if (vo->parsed()) return cmd_vo(voDataset, voOut, voNoise, voSeed,
                                    voMinCommon);
    if (ev->parsed()) {
      return cmd_evaluate(evEst, evGt, evAlign, evScaleCorrect, evMaxDt,
                          evJson, evCsv);
    }
    if (validate->parsed()) {
      va.seedSet = vaSeedOpt->count() > 0;
      return cmd_validate_tefs(va);
    }
    if (rep->parsed()) {
      if (repDataset.empty() && repEvals.empty()) {
        std::cerr << "report needs --dataset and/or --eval\n";
        return 2;
      }
      return cmd_report(repDataset, repEvals, repCsv);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
