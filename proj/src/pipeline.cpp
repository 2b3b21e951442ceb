#include "tefs/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

#include "tefs/errors.hpp"
#include "tefs/sim_engine.hpp"
#include "tefs/timebase.hpp"

using ordered_json = nlohmann::ordered_json;

namespace tefs {

EvaluationReport evaluate_trajectories(const Trajectory& est,
                                       const Trajectory& gt, double maxDt) {
  EvaluationReport r;
  r.estPoses = est.size();
  r.gtPoses = gt.size();
  r.estPathLength = est.path_length();
  r.gtPathLength = gt.path_length();
  r.apeNone = ape(est, gt, AlignMode::None, maxDt);
  r.apeRigid = ape(est, gt, AlignMode::Rigid, maxDt);
  r.apeSim = ape(est, gt, AlignMode::Similarity, maxDt);
  r.rpeOneFrame = rpe_frames(est, gt, 1, maxDt);
  try {
    r.rpeDistance100m = rpe_distance(est, gt, 100.0, maxDt);
    r.rpeDistanceValid = true;
  } catch (const DegenerateConfiguration&) {
    r.rpeDistanceValid = false;
  }
  return r;
}

namespace {

void stats_line(std::ostringstream& out, const char* label,
                const ErrorStats& s, const char* unit) {
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "  %-18s rmse %.6f  mean %.6f  median %.6f  max %.6f %s "
                "(n=%zu)\n",
                label, s.rmse, s.mean, s.median, s.max, unit, s.count);
  out << buf;
}

ordered_json stats_json(const ErrorStats& s) {
  return {{"rmse", s.rmse},   {"mean", s.mean}, {"median", s.median},
          {"min", s.min},     {"max", s.max},   {"count", s.count}};
}

}  // namespace

std::string evaluation_text(const EvaluationReport& r) {
  std::ostringstream out;
  char buf[192];
  std::snprintf(buf, sizeof buf,
                "trajectories: est %zu poses (%.3f m), ref %zu poses (%.3f "
                "m)\n",
                r.estPoses, r.estPathLength, r.gtPoses, r.gtPathLength);
  out << buf;
  out << "absolute error, no alignment:\n";
  stats_line(out, "translation", r.apeNone.translation, "m");
  std::snprintf(buf, sizeof buf, "  %-18s %.6f %% of %.3f m\n", "rmse/length",
                r.apeNone.rmsePercent, r.apeNone.gtPathLength);
  out << buf;
  out << "absolute error, rigid alignment:\n";
  stats_line(out, "translation", r.apeRigid.translation, "m");
  std::snprintf(buf, sizeof buf, "  %-18s %.6f %% of %.3f m\n", "rmse/length",
                r.apeRigid.rmsePercent, r.apeRigid.gtPathLength);
  out << buf;
  out << "absolute error, similarity alignment:\n";
  stats_line(out, "translation", r.apeSim.translation, "m");
  std::snprintf(buf, sizeof buf, "  %-18s %.6f %% (scale %.8f)\n",
                "rmse/length", r.apeSim.rmsePercent, r.apeSim.alignment.scale);
  out << buf;
  out << "relative error, one-frame delta:\n";
  stats_line(out, "translation", r.rpeOneFrame.translationM, "m");
  stats_line(out, "rotation", r.rpeOneFrame.rotationDeg, "deg");
  if (r.rpeDistanceValid) {
    out << "relative error, 100 m delta:\n";
    stats_line(out, "translation", r.rpeDistance100m.translationM, "m");
    stats_line(out, "rotation", r.rpeDistance100m.rotationDeg, "deg");
  } else {
    out << "relative error, 100 m delta: trajectory too short\n";
  }
  return out.str();
}

std::string evaluation_json(const EvaluationReport& r) {
  ordered_json j;
  j["est_poses"] = r.estPoses;
  j["gt_poses"] = r.gtPoses;
  j["est_path_length_m"] = r.estPathLength;
  j["gt_path_length_m"] = r.gtPathLength;
  j["ape_none"] = {{"translation_m", stats_json(r.apeNone.translation)},
                   {"rmse_percent", r.apeNone.rmsePercent},
                   {"matched", r.apeNone.matched}};
  j["ape_rigid"] = {{"translation_m", stats_json(r.apeRigid.translation)},
                    {"rmse_percent", r.apeRigid.rmsePercent},
                    {"matched", r.apeRigid.matched}};
  j["ape_sim"] = {{"translation_m", stats_json(r.apeSim.translation)},
                  {"rmse_percent", r.apeSim.rmsePercent},
                  {"scale", r.apeSim.alignment.scale},
                  {"matched", r.apeSim.matched}};
  j["rpe_1frame"] = {{"translation_m", stats_json(r.rpeOneFrame.translationM)},
                     {"rotation_deg", stats_json(r.rpeOneFrame.rotationDeg)}};
  if (r.rpeDistanceValid) {
    j["rpe_100m"] = {
        {"translation_m", stats_json(r.rpeDistance100m.translationM)},
        {"rotation_deg", stats_json(r.rpeDistance100m.rotationDeg)}};
  }
  return j.dump(2) + "\n";
}

bool ValidationReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

namespace {

ScenarioConfig validation_scenario(double speedKmh, int cycles,
                                   double leakFraction, int hardCodedBoxes) {
  ScenarioConfig c;
  c.name = "protocol_validation";
  c.speedKmh = speedKmh;
  c.cycles = cycles;
  c.defaultSeed = 77;
  c.leakFraction = leakFraction;
  PathSegment seg;
  seg.kind = PathSegment::Kind::Straight;
  seg.lengthM = 60.0;
  c.path.segments = {seg};
  c.scene.beaconSpacingM = 6.0;
  c.scene.beaconOverrunM = 30.0;
  c.scene.boxCount = 4;
  c.scene.hardCodedBoxCount = hardCodedBoxes;
  c.scene.hardCodedSpeedMps = 1.4;
  return c;
}

CaptureConfig small_capture(CaptureMode mode, double epsS, bool imagery) {
  CaptureConfig cfg;
  cfg.mode = mode;
  cfg.seed = 77;
  cfg.engineDisparityS = epsS;
  cfg.writeImagery = imagery;
  cfg.camera.width = 64;
  cfg.camera.height = 36;
  return cfg;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

ValidationCheck check_pause_soundness() {
  ValidationCheck c{"pseudo_pause_soundness", false, ""};
  World w = World::build(validation_scenario(10, 2, 0.0, 0), 77);
  SimEngine eng(std::move(w), EngineConfig{});
  for (int i = 0; i < 5; ++i) eng.tick();
  eng.set_time_scale(0.0);
  const uint64_t before = eng.world().state_hash();
  const uint64_t tickBefore = eng.uni_tick();
  bool stable = true;
  for (int i = 0; i < 8; ++i) {
    eng.tick();
    stable = stable && eng.world().state_hash() == before;
  }
  const bool rendererAlive = eng.uni_tick() == tickBefore + 8;
  c.pass = stable && rendererAlive;
  c.detail = stable ? "world digest constant over 8 pseudo-paused render ticks"
                    : "world digest drifted during pseudo-pause";
  return c;
}

ValidationCheck check_hard_coded_leak() {
  ValidationCheck c{"hard_coded_leak_detected", false, ""};
  World w = World::build(validation_scenario(10, 2, 0.5, 2), 77);
  SimEngine eng(std::move(w), EngineConfig{});
  for (int i = 0; i < 5; ++i) eng.tick();
  eng.set_time_scale(0.0);
  const uint64_t before = eng.world().state_hash();
  for (int i = 0; i < 8; ++i) eng.tick();
  c.pass = eng.world().state_hash() != before;
  c.detail = c.pass
                 ? "hard-coded props kept drifting while the world was "
                   "pseudo-paused, as expected"
                 : "expected leak did not show up in the world digest";
  return c;
}

ValidationCheck check_swap_latency() {
  ValidationCheck c{"swap_commits_next_frame", false, ""};
  World w = World::build(validation_scenario(10, 2, 0.0, 0), 77);
  SimEngine eng(std::move(w), EngineConfig{});
  eng.tick();
  const bool startsLeft = eng.active_side() == CameraSide::Left;
  eng.request_swap(CameraSide::Right);
  const bool unchangedOnRequest = eng.active_side() == CameraSide::Left;
  eng.tick();
  const bool committedNext = eng.active_side() == CameraSide::Right;
  c.pass = startsLeft && unchangedOnRequest && committedNext;
  c.detail = "viewport untouched on the request frame, switched on the next";
  return c;
}

ValidationCheck check_native_pause() {
  ValidationCheck c{"native_pause_stalls_engine", false, ""};
  World w = World::build(validation_scenario(10, 2, 0.0, 0), 77);
  SimEngine eng(std::move(w), EngineConfig{});
  eng.tick();
  eng.request_swap(CameraSide::Right);  // latched, commits on the next tick
  eng.set_native_pause(true);
  bool swapRejected = false;
  try {
    eng.request_swap(CameraSide::Left);
  } catch (const ProtocolError&) {
    swapRejected = true;
  }
  const uint64_t stateBefore = eng.world().state_hash();
  const uint64_t tickBefore = eng.uni_tick();
  for (int i = 0; i < 3; ++i) eng.tick();
  // Nothing runs while stalled: world untouched, pending swap still pending,
  // only the frame counter moves.
  const bool frozen = eng.world().state_hash() == stateBefore &&
                      eng.active_side() == CameraSide::Left &&
                      eng.uni_tick() == tickBefore + 3;
  eng.set_native_pause(false);
  eng.tick();
  const bool commitsAfterResume = eng.active_side() == CameraSide::Right;
  const bool resumed = eng.world().state_hash() != stateBefore;
  c.pass = swapRejected && frozen && commitsAfterResume && resumed;
  c.detail =
      "swap requests refused and world frozen while natively paused; the "
      "latched swap committed on the first tick after resume";
  return c;
}

ValidationCheck check_disparity_bookkeeping(const std::string& scratch) {
  ValidationCheck c{"pair_disparity_per_mode", false, ""};
  const double eps = 0.00025;
  const double dt = 1.0 / 60.0;
  double got[3] = {0, 0, 0};
  const CaptureMode modes[3] = {CaptureMode::Tefs, CaptureMode::NaiveSwap,
                                CaptureMode::DualViewport};
  for (int m = 0; m < 3; ++m) {
    auto cfg = small_capture(modes[m], eps, /*imagery=*/false);
    const auto run = run_capture(validation_scenario(10, 2, 0.0, 0), cfg,
                                 scratch + "/disparity_" + std::to_string(m));
    got[m] = run.pairs.back().rightTime - run.pairs.back().leftTime;
  }
  const bool ok = std::abs(got[0] - eps) < 1e-12 &&
                  std::abs(got[1] - dt) < 1e-12 && got[2] == 0.0;
  c.pass = ok;
  c.detail = fmt("in-game gap per pair: tefs %.6f ms, naive swap %.6f ms, "
                 "dual viewport %.6f ms",
                 got[0] * 1e3, got[1] * 1e3, got[2] * 1e3);
  return c;
}

ValidationCheck check_rest_equivalence(const std::string& scratch) {
  ValidationCheck c{"rest_equivalence_bitwise", false, ""};
  // Parked vehicle, no disparity, no leak: the single-viewport protocol must
  // reproduce the dual-viewport capture byte for byte (the manifest records
  // the mode and is excluded).
  auto scn = validation_scenario(0.0, 2, 0.0, 0);
  auto a = small_capture(CaptureMode::Tefs, 0.0, /*imagery=*/true);
  auto b = small_capture(CaptureMode::DualViewport, 0.0, /*imagery=*/true);
  run_capture(scn, a, scratch + "/rest_tefs");
  run_capture(scn, b, scratch + "/rest_dual");
  const uint64_t ha = tree_hash(scratch + "/rest_tefs", {"manifest.json"});
  const uint64_t hb = tree_hash(scratch + "/rest_dual", {"manifest.json"});
  c.pass = ha == hb;
  c.detail = "payload hashes " + hash_hex(ha) + " / " + hash_hex(hb);
  return c;
}

ValidationCheck check_naive_rest_rasters(const std::string& scratch) {
  ValidationCheck c{"naive_rest_raster_equivalence", false, ""};
  // A naive swap books different timestamps (the world keeps running), but
  // with the vehicle parked its pixels, poses, and positions must match the
  // oracle exactly.
  auto scn = validation_scenario(0.0, 2, 0.0, 0);
  auto a = small_capture(CaptureMode::NaiveSwap, 0.0, /*imagery=*/true);
  auto b = small_capture(CaptureMode::DualViewport, 0.0, /*imagery=*/true);
  run_capture(scn, a, scratch + "/naive_rest");
  run_capture(scn, b, scratch + "/dual_rest");
  // gps.txt rows are timestamped, so it differs for the same reason the
  // times files do: the naive world clock keeps running between the eyes.
  const std::vector<std::string> excl = {"manifest.json", "times.txt",
                                         "right_times.txt", "gps.txt"};
  const uint64_t ha = tree_hash(scratch + "/naive_rest", excl);
  const uint64_t hb = tree_hash(scratch + "/dual_rest", excl);
  c.pass = ha == hb;
  c.detail = "raster/pose/feature hashes " + hash_hex(ha) + " / " +
             hash_hex(hb) + " (timestamps excluded: they differ by design)";
  return c;
}

ValidationCheck check_offsets() {
  ValidationCheck c{"disparity_offset_model", false, ""};
  struct Row {
    double kmh, dtS, expectM;
  };
  // v * dt at the standard operating points.
  const Row rows[] = {{10, 0.0005, 1.389e-3},
                      {15, 0.0005, 2.083e-3},
                      {25, 0.0005, 3.472e-3},
                      {120, 0.0167, 0.5567}};
  bool ok = true;
  std::ostringstream detail;
  for (const Row& r : rows) {
    const double got = spatial_offset_m(r.kmh, r.dtS);
    ok = ok && std::abs(got - r.expectM) / r.expectM < 0.005;
    char buf[96];
    std::snprintf(buf, sizeof buf, "%g km/h x %g ms -> %.4f mm; ", r.kmh,
                  r.dtS * 1e3, got * 1e3);
    detail << buf;
  }
  c.pass = ok;
  c.detail = detail.str();
  return c;
}

ValidationCheck check_offset_dominance() {
  ValidationCheck c{"offset_dominance_ratio", false, ""};
  // Gap magnitudes as quoted at 0.1 ms precision: a full 60 Hz frame
  // (16.7 ms) for the naive swap against the tight 0.2 ms engine profile.
  // The offset model is linear in the gap, so the ratio holds at any speed.
  const double naive = spatial_offset_m(60.0, 0.0167);
  const double tefs = spatial_offset_m(60.0, EngineConfig::kDisparityTightS);
  const double ratio = naive / tefs;
  c.pass = std::abs(ratio - 83.5) <= 0.1;
  c.detail = fmt("naive 16.7 ms vs tefs 0.2 ms -> offset ratio %.2f "
                 "(roughly an 80x reduction)",
                 ratio);
  return c;
}

ValidationCheck check_swap_frequency() {
  ValidationCheck c{"swap_frequency_model", false, ""};
  const double realPerPair = game_to_real(2.5, 2880.0);
  const double freq = cam_freq(2.5, 2880.0);
  c.pass = std::abs(freq - 12.0) < 1e-12 &&
           std::abs(realPerPair - 2.5 * 2880.0 / 86400.0) < 1e-15;
  c.detail = fmt("2.5 in-game s between pairs on a 2880 s day -> %.6f real s "
                 "per pair, %.3f pairs/s",
                 realPerPair, freq);
  return c;
}

}  // namespace

ValidationReport run_protocol_validation(const std::string& scratchDir,
                                         uint64_t seed) {
  (void)seed;  // scenarios pin their own seeds so results are reproducible
  ensure_dir(scratchDir);
  ValidationReport r;
  r.checks.push_back(check_pause_soundness());
  r.checks.push_back(check_hard_coded_leak());
  r.checks.push_back(check_swap_latency());
  r.checks.push_back(check_native_pause());
  r.checks.push_back(check_disparity_bookkeeping(scratchDir));
  r.checks.push_back(check_rest_equivalence(scratchDir));
  r.checks.push_back(check_naive_rest_rasters(scratchDir));
  r.checks.push_back(check_offsets());
  r.checks.push_back(check_offset_dominance());
  r.checks.push_back(check_swap_frequency());
  return r;
}

ScenarioConfig default_validation_scenario() {
  ScenarioConfig c;
  c.name = "tefs_validation_loop";
  c.speedKmh = 10.0;
  c.cycles = 700;
  c.defaultSeed = 7;
  c.path.wrap = true;
  auto straight = [](double len) {
    PathSegment s;
    s.kind = PathSegment::Kind::Straight;
    s.lengthM = len;
    return s;
  };
  auto arcLeft = [](double radius, double deg) {
    PathSegment s;
    s.kind = PathSegment::Kind::Arc;
    s.radiusM = radius;
    s.angleRad = deg * M_PI / 180.0;
    s.turnDir = +1;
    return s;
  };
  c.path.segments = {straight(45), arcLeft(12, 90), straight(45),
                     arcLeft(12, 90), straight(45), arcLeft(12, 90),
                     straight(45), arcLeft(12, 90)};
  c.scene.boxCount = 16;
  return c;
}

std::string validation_text(const ValidationReport& r) {
  std::ostringstream out;
  for (const auto& c : r.checks) {
    out << (c.pass ? "PASS" : "FAIL") << "  " << c.name << ": " << c.detail
        << "\n";
  }
  out << (r.all_pass() ? "all protocol checks passed\n"
                       : "PROTOCOL CHECKS FAILED\n");
  return out.str();
}

}  // namespace tefs
