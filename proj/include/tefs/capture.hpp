#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tefs/dataset_io.hpp"
#include "tefs/render.hpp"
#include "tefs/sim_engine.hpp"

namespace tefs {

// How a stereo pair is obtained from the engine.
//  - Tefs (temporal-controlled frame swap): pseudo-pause the world, capture
//    the active eye, swap the single viewport to the other eye (one-frame
//    commit latency plus one safety frame), capture again, resume. Residual
//    in-game disparity equals the configured engine disparity.
//  - NaiveSwap: swap without touching time; the eyes end up one full frame
//    apart in-game.
//  - DualViewport: oracle rig that renders both eyes at the left-capture
//    instant. It follows the same cycle and clock bookkeeping as Tefs, so
//    the two produce identical timelines and differ only in how the right
//    eye is obtained.
enum class CaptureMode { Tefs, NaiveSwap, DualViewport };

const char* to_string(CaptureMode m);
// Accepts the canonical names (tefs, naiveSwap, dualViewport) and the short
// command-line aliases (naive, dual).
CaptureMode capture_mode_from_string(const std::string& name);

// One capture cycle, ticks numbered 1..cycleLength.
//  presetTick:       after this tick the world is pseudo-paused
//  leftCaptureTick:  frame captured for the left eye
//  rightCaptureTick: frame captured for the right eye (Tefs leaves at
//                    least one un-captured frame after the swap commits)
struct CycleSchedule {
  int cycleLength = 10;
  int presetTick = 7;
  int leftCaptureTick = 8;
  int rightCaptureTick = 10;

  static CycleSchedule standard() { return {10, 7, 8, 10}; }
  static CycleSchedule extended() { return {12, 9, 10, 12}; }

  void validate(CaptureMode mode) const;  // throws on an unusable schedule
};

struct CaptureConfig {
  CaptureMode mode = CaptureMode::Tefs;
  CycleSchedule schedule;
  CameraModel camera;
  StereoRig rig;
  ConditionProfile condition;
  DepthSemantics depthSemantics = DepthSemantics::SimNativeNdc;
  uint64_t seed = 1;
  double tickRateHz = 60.0;
  double engineDisparityS = 0.00025;
  // When false, no pixels are rasterized and no image/depth files are
  // written; poses, timestamps, and exact feature correspondences still are.
  // The protocol timeline is unchanged: render ticks still run, swaps still
  // commit with the same latency.
  bool writeImagery = true;
  // Detector realism: a stereo pair is exported as a feature only when its
  // column disparity is at least this many pixels. Sub-2 px disparities put
  // a landmark beyond ~80 stereo baselines, where production odometry stacks
  // (ORB-SLAM and kin discard stereo points past ~40 baselines) treat the
  // depth as unobservable. Depth error grows as Z^2, so these far points
  // would dominate pose fits with noise no real matcher could resolve.
  double minFeatureDisparityPx = 3.0;
};

struct FramePairMeta {
  int index = 0;
  double leftTime = 0.0;   // in-game seconds at the left capture
  double rightTime = 0.0;  // in-game seconds at the right capture
  uint64_t leftTick = 0;
  uint64_t rightTick = 0;
  PoseSE3 leftCamPose;   // camera-to-world at the left capture
  PoseSE3 rightCamPose;  // camera-to-world at the right capture
  PoseSE3 vehiclePose;   // at the left capture
  int featureCount = 0;
};

struct CaptureRun {
  std::vector<FramePairMeta> pairs;
  CalibInfo calib;
  double inGameDuration = 0.0;  // world clock advance over the whole run
  uint64_t ticksRun = 0;
};

// Drive the engine through `scenario.cycles` capture cycles and write a
// dataset directory (see docs/formats.md for the layout).
CaptureRun run_capture(const ScenarioConfig& scenario,
                       const CaptureConfig& config, const std::string& outDir);

// In-game seconds between the members of one pair, as produced by each mode.
double expected_pair_disparity(const CaptureConfig& config);

}  // namespace tefs
