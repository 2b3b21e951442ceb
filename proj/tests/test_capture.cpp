#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tefs/capture.hpp"
#include "tefs/dataset_io.hpp"
#include "tefs/errors.hpp"
#include "tefs/geometry.hpp"
#include "tefs/scenario.hpp"
#include "tefs/sim_engine.hpp"

using namespace tefs;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path root;
  TempDir() {
    static int counter = 0;
    root = fs::temp_directory_path() /
           ("tefs_cap_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(root);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(root, ec); }
  std::string sub(const std::string& name) const { return (root / name).string(); }
};

ScenarioConfig loop_scenario(int cycles, double speedKmh = 10.0) {
  ScenarioConfig cfg;
  cfg.name = "capture_test_loop";
  cfg.speedKmh = speedKmh;
  cfg.cycles = cycles;
  cfg.path.wrap = true;
  PathSegment straight;
  straight.kind = PathSegment::Kind::Straight;
  straight.lengthM = 40.0;
  PathSegment turn;
  turn.kind = PathSegment::Kind::Arc;
  turn.radiusM = 10.0;
  turn.angleRad = kPi / 2.0;
  turn.turnDir = +1;
  for (int i = 0; i < 4; ++i) {
    cfg.path.segments.push_back(straight);
    cfg.path.segments.push_back(turn);
  }
  cfg.scene.boxCount = 6;
  cfg.scene.beaconSpacingM = 3.0;
  return cfg;
}

CaptureConfig small_config(CaptureMode mode, uint64_t seed = 11,
                           bool imagery = false) {
  CaptureConfig cfg;
  cfg.mode = mode;
  cfg.seed = seed;
  cfg.writeImagery = imagery;
  cfg.camera.width = 64;
  cfg.camera.height = 36;
  return cfg;
}

}  // namespace

TEST_CASE("capture mode names and their command-line aliases") {
  CHECK(capture_mode_from_string("tefs") == CaptureMode::Tefs);
  CHECK(capture_mode_from_string("naiveSwap") == CaptureMode::NaiveSwap);
  CHECK(capture_mode_from_string("naive") == CaptureMode::NaiveSwap);
  CHECK(capture_mode_from_string("dualViewport") == CaptureMode::DualViewport);
  CHECK(capture_mode_from_string("dual") == CaptureMode::DualViewport);
  CHECK_THROWS_AS(capture_mode_from_string("teleport"), std::invalid_argument);

  CHECK(std::string(to_string(CaptureMode::Tefs)) == "tefs");
  CHECK(std::string(to_string(CaptureMode::NaiveSwap)) == "naiveSwap");
  CHECK(std::string(to_string(CaptureMode::DualViewport)) == "dualViewport");
}

TEST_CASE("cycle schedules carry the documented tick layout") {
  const CycleSchedule std10 = CycleSchedule::standard();
  CHECK(std10.cycleLength == 10);
  CHECK(std10.presetTick == 7);
  CHECK(std10.leftCaptureTick == 8);
  CHECK(std10.rightCaptureTick == 10);
  const CycleSchedule ext12 = CycleSchedule::extended();
  CHECK(ext12.cycleLength == 12);
  CHECK(ext12.presetTick == 9);
  CHECK(ext12.leftCaptureTick == 10);
  CHECK(ext12.rightCaptureTick == 12);
  CHECK_NOTHROW(std10.validate(CaptureMode::Tefs));
  CHECK_NOTHROW(ext12.validate(CaptureMode::Tefs));
  CHECK_NOTHROW(std10.validate(CaptureMode::NaiveSwap));
  CHECK_NOTHROW(std10.validate(CaptureMode::DualViewport));
}

TEST_CASE("schedule validation enforces the swap-latency gap") {
  CycleSchedule s = CycleSchedule::standard();
  // The right capture needs the commit tick between request and exposure:
  // left at 8 means right can be no earlier than 10.
  s.rightCaptureTick = 9;
  CHECK_THROWS_AS(s.validate(CaptureMode::Tefs), ProtocolError);
  // The same layout is fine for a dual viewport (no swap involved).
  CHECK_NOTHROW(s.validate(CaptureMode::DualViewport));

  s = CycleSchedule::standard();
  s.presetTick = 0;
  CHECK_THROWS_AS(s.validate(CaptureMode::Tefs), ProtocolError);

  s = CycleSchedule::standard();
  s.leftCaptureTick = 7;  // not after the preset tick
  CHECK_THROWS_AS(s.validate(CaptureMode::Tefs), ProtocolError);

  s = CycleSchedule::standard();
  s.leftCaptureTick = 10;  // naive right eye would fall outside the cycle
  CHECK_THROWS_AS(s.validate(CaptureMode::NaiveSwap), ProtocolError);

  s = CycleSchedule::standard();
  s.rightCaptureTick = 11;
  CHECK_THROWS_AS(s.validate(CaptureMode::Tefs), ProtocolError);
}

TEST_CASE("expected pair disparity per capture method") {
  CaptureConfig cfg;
  cfg.engineDisparityS = 0.00025;
  cfg.tickRateHz = 60.0;
  cfg.mode = CaptureMode::Tefs;
  CHECK(expected_pair_disparity(cfg) == doctest::Approx(0.00025).epsilon(1e-15));
  cfg.mode = CaptureMode::NaiveSwap;
  CHECK(expected_pair_disparity(cfg) == doctest::Approx(1.0 / 60.0).epsilon(1e-15));
  cfg.mode = CaptureMode::DualViewport;
  CHECK(expected_pair_disparity(cfg) == 0.0);

  cfg.mode = CaptureMode::Tefs;
  cfg.engineDisparityS = 0.0005;
  CHECK(expected_pair_disparity(cfg) == doctest::Approx(0.0005).epsilon(1e-15));
}

TEST_CASE("temporal-swap timeline: frozen exposures separated by the engine gap") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(6);
  const CaptureConfig cfg = small_config(CaptureMode::Tefs);
  const CaptureRun run = run_capture(scenario, cfg, tmp.sub("tefs"));

  REQUIRE(run.pairs.size() == 6);
  const double dt = 1.0 / cfg.tickRateHz;
  for (size_t k = 0; k < run.pairs.size(); ++k) {
    const auto& p = run.pairs[k];
    // Right eye exposed exactly the engine disparity after the left.
    CHECK(p.rightTime - p.leftTime ==
          doctest::Approx(cfg.engineDisparityS).epsilon(1e-12));
    // Two engine frames between the exposures: commit + capture.
    CHECK(p.rightTick - p.leftTick == 2);
    if (k > 0) {
      // Per cycle the world advances presetTick live frames plus the gap.
      const double step = run.pairs[k].leftTime - run.pairs[k - 1].leftTime;
      CHECK(step == doctest::Approx(7.0 * dt + cfg.engineDisparityS).epsilon(1e-9));
    }
  }
  // 6 cycles x 10 ticks.
  CHECK(run.ticksRun == 60);
  // Per cycle the world advances through the 7 live frames plus the gap;
  // the paused tail of the cycle adds nothing.
  CHECK(run.inGameDuration ==
        doctest::Approx(6.0 * (7.0 * dt + cfg.engineDisparityS)).epsilon(1e-9));
}

TEST_CASE("naive-swap timeline: the world never stops") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(5);
  const CaptureConfig cfg = small_config(CaptureMode::NaiveSwap);
  const CaptureRun run = run_capture(scenario, cfg, tmp.sub("naive"));

  REQUIRE(run.pairs.size() == 5);
  const double dt = 1.0 / cfg.tickRateHz;
  for (size_t k = 0; k < run.pairs.size(); ++k) {
    const auto& p = run.pairs[k];
    // One full live frame between the eyes.
    CHECK(p.rightTime - p.leftTime == doctest::Approx(dt).epsilon(1e-12));
    CHECK(p.rightTick - p.leftTick == 1);
    if (k > 0) {
      const double step = run.pairs[k].leftTime - run.pairs[k - 1].leftTime;
      CHECK(step == doctest::Approx(10.0 * dt).epsilon(1e-9));
    }
  }
  // Unpaused throughout: in-game time equals ticks times dt.
  CHECK(run.inGameDuration == doctest::Approx(50.0 * dt).epsilon(1e-9));
}

TEST_CASE("dual-viewport timeline: both eyes at one instant, same cadence as the swap") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(6);
  const CaptureConfig cfg = small_config(CaptureMode::DualViewport);
  const CaptureRun run = run_capture(scenario, cfg, tmp.sub("dual"));

  REQUIRE(run.pairs.size() == 6);
  const double dt = 1.0 / cfg.tickRateHz;
  for (size_t k = 0; k < run.pairs.size(); ++k) {
    CHECK(run.pairs[k].rightTime == run.pairs[k].leftTime);
    if (k > 0) {
      const double step = run.pairs[k].leftTime - run.pairs[k - 1].leftTime;
      // The engine gap is still booked so the timeline matches a
      // temporal-swap run frame for frame.
      CHECK(step == doctest::Approx(7.0 * dt + cfg.engineDisparityS).epsilon(1e-9));
    }
  }

  // Matching capture instants with the temporal-swap method.
  const CaptureRun swapRun =
      run_capture(scenario, small_config(CaptureMode::Tefs), tmp.sub("tefs"));
  REQUIRE(swapRun.pairs.size() == run.pairs.size());
  for (size_t k = 0; k < run.pairs.size(); ++k) {
    CHECK(run.pairs[k].leftTime ==
          doctest::Approx(swapRun.pairs[k].leftTime).epsilon(1e-12));
  }
}

TEST_CASE("ground-truth files reproduce the engine poses at capture instants") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(8);
  CaptureConfig cfg = small_config(CaptureMode::Tefs, 23);
  cfg.camera.width = 320;  // enough resolution for features to pass the gate
  cfg.camera.height = 180;
  const std::string out = tmp.sub("gt");
  const CaptureRun run = run_capture(scenario, cfg, out);

  const auto times = read_scalar_column(out + "/times.txt");
  const auto rightTimes = read_scalar_column(out + "/right_times.txt");
  const auto poses = read_poses_kitti(out + "/poses.txt");
  const auto gps = read_gps(out + "/gps.txt");
  REQUIRE(times.size() == 8);
  REQUIRE(rightTimes.size() == 8);
  REQUIRE(poses.size() == 8);
  REQUIRE(gps.size() == 8);

  // Independent replay of the drive: pose at arclength speed * time.
  const World world = World::build(scenario, cfg.seed);
  for (size_t k = 0; k < 8; ++k) {
    CHECK(std::abs(times[k] - run.pairs[k].leftTime) < 5e-7);  // 1e-6 quantized
    const PoseSE3 vehicle = world.vehicle_pose_at_time(run.pairs[k].leftTime);
    const PoseSE3 leftCam = vehicle * cfg.rig.camera_from_vehicle(CameraSide::Left);
    CHECK((poses[k].translation - leftCam.translation).norm() < 1e-9);
    CHECK((poses[k].rotation - leftCam.rotation).norm() < 1e-9);
    CHECK((run.pairs[k].leftCamPose.translation - leftCam.translation).norm() < 1e-9);
    // GPS rows are the vehicle fix at the left exposure.
    CHECK(std::abs(gps[k].t - run.pairs[k].leftTime) < 5e-7);
    CHECK(std::abs(gps[k].x - vehicle.translation.x()) < 5e-7);
    CHECK(std::abs(gps[k].y - vehicle.translation.y()) < 5e-7);

    // The right eye pose belongs to the later instant (vehicle moved by
    // speed * gap between the exposures).
    const PoseSE3 vehicleR = world.vehicle_pose_at_time(run.pairs[k].rightTime);
    const PoseSE3 rightCam = vehicleR * cfg.rig.camera_from_vehicle(CameraSide::Right);
    CHECK((run.pairs[k].rightCamPose.translation - rightCam.translation).norm() < 1e-9);
  }

  const DatasetManifest m = read_manifest(out + "/manifest.json");
  CHECK(m.frameCount == 8);
  CHECK(m.complete);
  CHECK(m.method == "tefs");
  CHECK(m.scenario == "capture_test_loop");
  CHECK(m.seed == 23);
  CHECK(m.expectedPairDisparityS == doctest::Approx(cfg.engineDisparityS).epsilon(1e-15));
  CHECK(m.writeImagery == false);
  CHECK(m.inGameDurationS == doctest::Approx(run.inGameDuration).epsilon(1e-12));
  CHECK(m.ticksRun == run.ticksRun);
  CHECK(m.minFeaturesPerPair >= 3);
  CHECK(m.meanFeaturesPerPair >= m.minFeaturesPerPair);
}

TEST_CASE("features are exact stereo correspondences, sorted and disparity-gated") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(4);
  CaptureConfig cfg = small_config(CaptureMode::Tefs, 31);
  cfg.camera.width = 320;  // realistic intrinsics for the geometry check
  cfg.camera.height = 180;
  cfg.minFeatureDisparityPx = 3.0;
  const std::string out = tmp.sub("feat");
  const CaptureRun run = run_capture(scenario, cfg, out);

  const World world = World::build(scenario, cfg.seed);
  CameraModel cam = cfg.camera;
  int checked = 0;
  for (size_t k = 0; k < run.pairs.size(); ++k) {
    const auto feats =
        read_features(out + "/features/" + frame_name(int(k)) + ".txt");
    CHECK(int(feats.size()) == run.pairs[k].featureCount);
    uint16_t prevId = 0;
    bool first = true;
    for (const auto& f : feats) {
      if (!first) CHECK(f.id > prevId);  // strictly sorted by identity
      prevId = f.id;
      first = false;
      // The disparity gate.
      CHECK(f.uL - f.uR >= cfg.minFeatureDisparityPx);

      // Each row is the exact projection of one surveyed landmark into the
      // two (time-shifted) eyes.
      REQUIRE(f.id < world.beacons.size());
      const Eigen::Vector3d P = world.beacons[f.id].position;
      const auto pl = project_point(cam, run.pairs[k].leftCamPose, P);
      const auto pr = project_point(cam, run.pairs[k].rightCamPose, P);
      REQUIRE(pl.has_value());
      REQUIRE(pr.has_value());
      CHECK(std::abs(pl->u - f.uL) < 5e-8);
      CHECK(std::abs(pl->v - f.vL) < 5e-8);
      CHECK(std::abs(pr->u - f.uR) < 5e-8);
      CHECK(std::abs(pr->v - f.vR) < 5e-8);
      ++checked;
    }
  }
  CHECK(checked > 20);
}

TEST_CASE("parked captures are identical across methods except for timestamps") {
  TempDir tmp;
  ScenarioConfig scenario = loop_scenario(3, /*speedKmh=*/0.0);
  const uint64_t seed = 77;
  run_capture(scenario, small_config(CaptureMode::Tefs, seed, true), tmp.sub("t"));
  run_capture(scenario, small_config(CaptureMode::DualViewport, seed, true), tmp.sub("d"));
  run_capture(scenario, small_config(CaptureMode::NaiveSwap, seed, true), tmp.sub("n"));

  // At rest the three protocols expose the same frozen world, so all pixels,
  // depths and features agree bit for bit; only the clock bookkeeping
  // (manifest, time columns, timestamped fixes) differs.
  const std::vector<std::string> excl{"manifest.json", "times.txt",
                                      "right_times.txt", "gps.txt"};
  const uint64_t ht = tree_hash(tmp.sub("t"), excl);
  const uint64_t hd = tree_hash(tmp.sub("d"), excl);
  const uint64_t hn = tree_hash(tmp.sub("n"), excl);
  CHECK(ht == hd);
  CHECK(ht == hn);
}

TEST_CASE("identical configuration and seed reproduce a capture byte for byte") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(3);
  CaptureConfig cfg = small_config(CaptureMode::Tefs, 55, true);
  cfg.condition = ConditionProfile::preset("nightThunderstorm");
  run_capture(scenario, cfg, tmp.sub("a"));
  run_capture(scenario, cfg, tmp.sub("b"));
  CHECK(tree_hash(tmp.sub("a")) == tree_hash(tmp.sub("b")));

  // A different seed is a different world and different sensor noise.
  cfg.seed = 56;
  run_capture(scenario, cfg, tmp.sub("c"));
  CHECK(tree_hash(tmp.sub("a")) != tree_hash(tmp.sub("c")));
}

TEST_CASE("imagery toggle controls rasters but never the measurement files") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(3);
  run_capture(scenario, small_config(CaptureMode::Tefs, 5, true), tmp.sub("img"));
  run_capture(scenario, small_config(CaptureMode::Tefs, 5, false), tmp.sub("lean"));

  CHECK(fs::exists(tmp.sub("img") + "/image_L/000000.ppm"));
  CHECK(fs::exists(tmp.sub("img") + "/depth_R/000002.bin"));
  CHECK_FALSE(fs::exists(tmp.sub("lean") + "/image_L"));
  CHECK_FALSE(fs::exists(tmp.sub("lean") + "/depth_R"));

  // Features, poses and times are unaffected by the imagery switch.
  for (const char* f :
       {"/features/000000.txt", "/poses.txt", "/times.txt", "/calib.txt"}) {
    CHECK(read_text_file(tmp.sub("img") + f) == read_text_file(tmp.sub("lean") + f));
  }

  // Written depth buffers decode to the advertised semantics.
  const DepthBin bin = read_depth_bin(tmp.sub("img") + "/depth_L/000000.bin");
  CHECK(bin.semantics == DepthSemantics::SimNativeNdc);
  CHECK(bin.width == 64);
  CHECK(bin.height == 36);
}

TEST_CASE("an invalid schedule aborts before any files are touched") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(3);
  CaptureConfig cfg = small_config(CaptureMode::Tefs);
  cfg.schedule.rightCaptureTick = 9;  // violates the swap-latency gap
  const std::string out = tmp.sub("never");
  CHECK_THROWS_AS(run_capture(scenario, cfg, out), ProtocolError);
  CHECK_FALSE(fs::exists(out + "/manifest.json"));
}

TEST_CASE("the calibration written next to the data matches the camera model") {
  TempDir tmp;
  const ScenarioConfig scenario = loop_scenario(3);
  CaptureConfig cfg = small_config(CaptureMode::DualViewport, 9);
  cfg.camera.width = 320;
  cfg.camera.height = 180;
  const std::string out = tmp.sub("calib");
  const CaptureRun run = run_capture(scenario, cfg, out);

  const CalibInfo calib = read_calib(out + "/calib.txt");
  CHECK(calib.fx == doctest::Approx(cfg.camera.fx()).epsilon(1e-12));
  CHECK(calib.fy == doctest::Approx(cfg.camera.fy()).epsilon(1e-12));
  CHECK(calib.cx == doctest::Approx(160.0).epsilon(1e-12));
  CHECK(calib.cy == doctest::Approx(90.0).epsilon(1e-12));
  CHECK(calib.baselineM == doctest::Approx(0.54).epsilon(1e-12));
  CHECK(calib.width == 320);
  CHECK(calib.height == 180);
  CHECK(run.calib.fx == doctest::Approx(calib.fx).epsilon(1e-12));
}
