#include "tefs/capture.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>

#include "tefs/errors.hpp"

namespace fs = std::filesystem;

namespace tefs {

const char* to_string(CaptureMode m) {
  switch (m) {
    case CaptureMode::Tefs: return "tefs";
    case CaptureMode::NaiveSwap: return "naiveSwap";
    case CaptureMode::DualViewport: return "dualViewport";
  }
  return "unknown";
}

CaptureMode capture_mode_from_string(const std::string& name) {
  if (name == "tefs") return CaptureMode::Tefs;
  if (name == "naiveSwap" || name == "naive") return CaptureMode::NaiveSwap;
  if (name == "dualViewport" || name == "dual") {
    return CaptureMode::DualViewport;
  }
  throw std::invalid_argument("unknown capture method '" + name +
                              "' (expected tefs, naive, or dual)");
}

void CycleSchedule::validate(CaptureMode mode) const {
  auto fail = [](const std::string& what) {
    throw ProtocolError("schedule", what);
  };
  if (cycleLength < 2) fail("cycle length must be at least 2 ticks");
  if (presetTick < 1 || presetTick >= cycleLength) {
    fail("preset tick must lie inside the cycle, before its last tick");
  }
  if (leftCaptureTick <= presetTick || leftCaptureTick > cycleLength) {
    fail("left capture must come after the preset tick, inside the cycle");
  }
  if (mode == CaptureMode::NaiveSwap) {
    if (leftCaptureTick + 1 > cycleLength) {
      fail("a naive swap captures the right eye one tick after the left; the "
           "cycle is too short for that");
    }
    return;
  }
  if (rightCaptureTick > cycleLength) {
    fail("right capture tick lies outside the cycle");
  }
  if (mode == CaptureMode::Tefs && rightCaptureTick < leftCaptureTick + 2) {
    fail("the swap commits one frame after it is requested and one further "
         "frame is left un-captured for safety, so the right capture must "
         "be at least two ticks after the left");
  }
  if (mode == CaptureMode::DualViewport && rightCaptureTick < leftCaptureTick) {
    fail("right capture tick precedes the left capture tick");
  }
}

double expected_pair_disparity(const CaptureConfig& config) {
  switch (config.mode) {
    case CaptureMode::Tefs: return config.engineDisparityS;
    case CaptureMode::NaiveSwap: return 1.0 / config.tickRateHz;
    case CaptureMode::DualViewport: return 0.0;
  }
  return 0.0;
}

namespace {

struct ProjectedBeacon {
  uint16_t id;
  double u, v;
};

// Segment test camera -> beacon against every prop box at the current world
// state; a blocked segment means the landmark is not visible.
bool segment_blocked(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                     const std::vector<Eigen::Vector3d>& lo,
                     const std::vector<Eigen::Vector3d>& hi) {
  const Eigen::Vector3d d = to - from;
  for (size_t i = 0; i < lo.size(); ++i) {
    double tmin = 0.0, tmax = 1.0 - 1e-9;
    bool miss = false;
    for (int a = 0; a < 3 && !miss; ++a) {
      if (std::abs(d[a]) < 1e-15) {
        if (from[a] < lo[i][a] || from[a] > hi[i][a]) miss = true;
        continue;
      }
      double t1 = (lo[i][a] - from[a]) / d[a];
      double t2 = (hi[i][a] - from[a]) / d[a];
      if (t1 > t2) std::swap(t1, t2);
      tmin = std::max(tmin, t1);
      tmax = std::min(tmax, t2);
      if (tmin > tmax) miss = true;
    }
    if (!miss) return true;
  }
  return false;
}

std::vector<ProjectedBeacon> visible_beacons(const World& world,
                                             const PoseSE3& camPose,
                                             const CameraModel& cam) {
  std::vector<Eigen::Vector3d> lo(world.boxes.size()), hi(world.boxes.size());
  for (size_t i = 0; i < world.boxes.size(); ++i) {
    const Eigen::Vector3d c = world.box_position(i);
    lo[i] = c - world.boxes[i].halfExtents;
    hi[i] = c + world.boxes[i].halfExtents;
  }
  std::vector<ProjectedBeacon> out;
  for (const Beacon& b : world.beacons) {
    const auto prj = project_point(cam, camPose, b.position);
    if (!prj || prj->planarZ > cam.clips.farClip) continue;
    if (prj->u < 1.0 || prj->u > cam.width - 1.0 || prj->v < 1.0 ||
        prj->v > cam.height - 1.0) {
      continue;  // keep the whole splat footprint inside the image
    }
    if (segment_blocked(camPose.translation, b.position, lo, hi)) continue;
    out.push_back({b.id, prj->u, prj->v});
  }
  return out;
}

DepthBin encode_raster_depth(const FrameRaster& raster, const CameraModel& cam,
                             DepthSemantics sem) {
  DepthBin bin;
  bin.width = cam.width;
  bin.height = cam.height;
  bin.semantics = sem;
  bin.data.resize(raster.planarDepth.size());
  for (int iy = 0; iy < cam.height; ++iy) {
    for (int ix = 0; ix < cam.width; ++ix) {
      const size_t idx = static_cast<size_t>(iy) * cam.width + ix;
      double xt, yt;
      cam.pixel_to_tangents(ix + 0.5, iy + 0.5, xt, yt);
      double planar = raster.planarDepth[idx];
      // Pixels with no geometry are stored at the far clip by convention.
      if (!std::isfinite(planar)) planar = cam.clips.farClip;
      bin.data[idx] = static_cast<float>(
          encode_depth(sem, planar, xt, yt, cam.clips));
    }
  }
  return bin;
}

// Buffers one eye of a pair until the other eye arrives.
struct EyeState {
  double time = 0.0;
  uint64_t tick = 0;
  PoseSE3 camPose;
  PoseSE3 vehiclePose;
  std::vector<ProjectedBeacon> beacons;
};

class CaptureSession {
 public:
  CaptureSession(const ScenarioConfig& scenario, const CaptureConfig& cfg,
                 std::string outDir)
      : cfg_(cfg), outDir_(std::move(outDir)) {
    cfg_.schedule.validate(cfg_.mode);
    World world = World::build(scenario, cfg_.seed);
    world.rig = cfg_.rig;
    engine_.emplace(std::move(world),
                    EngineConfig{cfg_.tickRateHz, cfg_.engineDisparityS});
    ensure_dir(outDir_);
    ensure_dir(outDir_ + "/features");
    if (cfg_.writeImagery) {
      ensure_dir(outDir_ + "/image_L");
      ensure_dir(outDir_ + "/image_R");
      ensure_dir(outDir_ + "/depth_L");
      ensure_dir(outDir_ + "/depth_R");
    }
  }

  CaptureRun run(int cycles) {
    try {
      for (int c = 0; c < cycles; ++c) run_cycle();
    } catch (const ProtocolError&) {
      // The session is unusable past this point. Drop the uncommitted
      // half-pair, flag the dataset incomplete, and let the violation
      // propagate.
      discard_pending_left();
      finish(/*complete=*/false);
      throw;
    }
    finish(/*complete=*/true);
    CaptureRun out;
    out.pairs = std::move(pairs_);
    out.calib = calib();
    out.inGameDuration = engine_->world().worldTime;
    out.ticksRun = engine_->uni_tick();
    return out;
  }

 private:
  SimEngine& eng() { return *engine_; }

  void run_cycle() {
    const CycleSchedule& s = cfg_.schedule;
    for (int k = 1; k <= s.cycleLength; ++k) {
      eng().tick();
      switch (cfg_.mode) {
        case CaptureMode::Tefs:
          if (k == s.presetTick) eng().set_time_scale(0.0);
          if (k == s.leftCaptureTick) {
            expect_scale_zero("left_capture");
            capture_eye(CameraSide::Left);
            eng().advance_world_time(cfg_.engineDisparityS);
            eng().request_swap(CameraSide::Right);
          }
          if (k == s.rightCaptureTick) {
            expect_scale_zero("right_capture");
            capture_eye(CameraSide::Right);
            eng().request_swap(CameraSide::Left);
            eng().set_time_scale(1.0);
          }
          break;
        case CaptureMode::NaiveSwap:
          if (k == s.leftCaptureTick) {
            capture_eye(CameraSide::Left);
            eng().request_swap(CameraSide::Right);
          }
          if (k == s.leftCaptureTick + 1) {
            capture_eye(CameraSide::Right);
            eng().request_swap(CameraSide::Left);
          }
          break;
        case CaptureMode::DualViewport:
          if (k == s.presetTick) eng().set_time_scale(0.0);
          if (k == s.leftCaptureTick) {
            // Both eyes from the same instant; no swap is ever needed. The
            // engine disparity is still booked afterwards so the timeline
            // matches a temporal-swap run tick for tick.
            capture_eye(CameraSide::Left, /*checkRouting=*/false);
            capture_eye(CameraSide::Right, /*checkRouting=*/false);
            eng().advance_world_time(cfg_.engineDisparityS);
          }
          if (k == s.rightCaptureTick) eng().set_time_scale(1.0);
          break;
      }
    }
  }

  void expect_scale_zero(const char* phase) {
    if (eng().time_scale() != 0.0) {
      throw ProtocolError(phase, "world is not pseudo-paused at a capture "
                                 "tick; the preset step was skipped");
    }
  }

  void capture_eye(CameraSide side, bool checkRouting = true) {
    if (checkRouting && eng().active_side() != side) {
      throw ProtocolError(side == CameraSide::Left ? "left_capture"
                                                   : "right_capture",
                          std::string("viewport is routed to the ") +
                              to_string(eng().active_side()) +
                              " camera, expected " + to_string(side));
    }
    const World& w = eng().world();
    EyeState st;
    st.time = w.worldTime;
    st.tick = eng().uni_tick();
    st.camPose = w.camera_pose(side);
    st.vehiclePose = w.vehicle_pose();
    st.beacons = visible_beacons(w, st.camPose, cfg_.camera);

    if (cfg_.writeImagery) {
      FrameRaster raster;
      if (checkRouting) {
        // Production path: read the single viewport, which is known to be
        // routed to `side` at this point.
        FrameBuffer fb = view_.render_view(eng(), cfg_.camera);
        if (fb.stale) {
          throw ProtocolError(side == CameraSide::Left ? "left_capture"
                                                       : "right_capture",
                              "renderer is stalled (native pause); a stale "
                              "frame cannot be captured");
        }
        raster = std::move(fb.raster);
      } else {
        // Oracle path: the dual-viewport rig renders either eye directly,
        // which a single-viewport engine cannot do.
        raster = render_frame(w, st.camPose, cfg_.camera);
      }
      apply_condition(raster.image, cfg_.condition, cfg_.seed,
                      static_cast<uint64_t>(pairs_.size()), side);
      const std::string stem = frame_name(static_cast<int>(pairs_.size()));
      const char* sub = side == CameraSide::Left ? "L" : "R";
      write_ppm(outDir_ + "/image_" + sub + "/" + stem + ".ppm", raster.image);
      write_depth_bin(outDir_ + "/depth_" + sub + "/" + stem + ".bin",
                      encode_raster_depth(raster, cfg_.camera,
                                          cfg_.depthSemantics));
    }

    if (side == CameraSide::Left) {
      if (pendingLeft_) {
        throw ProtocolError("left_capture",
                            "previous pair is missing its right eye");
      }
      pendingLeft_ = std::move(st);
    } else {
      if (!pendingLeft_) {
        throw ProtocolError("right_capture",
                            "right eye captured with no left eye pending");
      }
      commit_pair(*pendingLeft_, st);
      pendingLeft_.reset();
    }
  }

  void commit_pair(const EyeState& left, const EyeState& right) {
    std::map<uint16_t, const ProjectedBeacon*> leftById;
    for (const auto& pb : left.beacons) leftById[pb.id] = &pb;
    std::vector<FeatureRecord> features;
    for (const auto& pb : right.beacons) {
      auto it = leftById.find(pb.id);
      if (it == leftById.end()) continue;
      if (it->second->u - pb.u < cfg_.minFeatureDisparityPx) continue;
      features.push_back({pb.id, it->second->u, it->second->v, pb.u, pb.v});
    }
    std::sort(features.begin(), features.end(),
              [](const FeatureRecord& a, const FeatureRecord& b) {
                return a.id < b.id;
              });
    const int index = static_cast<int>(pairs_.size());
    write_features(outDir_ + "/features/" + frame_name(index) + ".txt",
                   features);

    FramePairMeta meta;
    meta.index = index;
    meta.leftTime = left.time;
    meta.rightTime = right.time;
    meta.leftTick = left.tick;
    meta.rightTick = right.tick;
    meta.leftCamPose = left.camPose;
    meta.rightCamPose = right.camPose;
    meta.vehiclePose = left.vehiclePose;
    meta.featureCount = static_cast<int>(features.size());
    pairs_.push_back(meta);
  }

  CalibInfo calib() const {
    CalibInfo c;
    c.fx = cfg_.camera.fx();
    c.fy = cfg_.camera.fy();
    c.cx = cfg_.camera.cx();
    c.cy = cfg_.camera.cy();
    c.baselineM = cfg_.rig.baselineM;
    c.width = cfg_.camera.width;
    c.height = cfg_.camera.height;
    c.clips = cfg_.camera.clips;
    c.depthSemantics = cfg_.depthSemantics;
    return c;
  }

  // Remove the half-captured pair left behind by an aborted session, so the
  // files on disk describe exactly the committed pairs.
  void discard_pending_left() {
    if (!pendingLeft_) return;
    pendingLeft_.reset();
    if (cfg_.writeImagery) {
      const std::string stem = frame_name(static_cast<int>(pairs_.size()));
      fs::remove(outDir_ + "/image_L/" + stem + ".ppm");
      fs::remove(outDir_ + "/depth_L/" + stem + ".bin");
    }
  }

  void finish(bool complete) {
    if (complete && pendingLeft_) {
      throw ProtocolError("capture",
                          "run ended with a left eye waiting for its pair");
    }
    std::vector<double> times, rightTimes;
    std::vector<PoseSE3> poses;
    std::vector<GpsRecord> gps;
    for (const auto& p : pairs_) {
      times.push_back(p.leftTime);
      rightTimes.push_back(p.rightTime);
      poses.push_back(p.leftCamPose);
      gps.push_back({p.leftTime, p.vehiclePose.translation.x(),
                     p.vehiclePose.translation.y()});
    }
    write_scalar_column(outDir_ + "/times.txt", times);
    write_scalar_column(outDir_ + "/right_times.txt", rightTimes);
    write_poses_kitti(outDir_ + "/poses.txt", poses);
    write_gps(outDir_ + "/gps.txt", gps);
    write_calib(outDir_ + "/calib.txt", calib());
    write_manifest(complete, poses);
  }

  void write_manifest(bool complete, const std::vector<PoseSE3>& poses) {
    const World& w = eng().world();
    DatasetManifest m;
    m.version = 1;
    m.scenario = w.scenario.name;
    m.method = to_string(cfg_.mode);
    m.conditionProfile = cfg_.condition.name;
    m.baselineM = cfg_.rig.baselineM;
    m.camHeightM = cfg_.rig.camHeightM;
    m.camForwardM = cfg_.rig.camForwardM;
    m.frameCount = static_cast<int>(pairs_.size());
    double length = 0.0;
    for (size_t i = 1; i < poses.size(); ++i) {
      length += (poses[i].translation - poses[i - 1].translation).norm();
    }
    m.trajectoryLengthM = length;
    m.seed = cfg_.seed;
    m.complete = complete;
    m.cycles = static_cast<uint64_t>(w.scenario.cycles);
    m.tickRateHz = cfg_.tickRateHz;
    m.engineDisparityS = cfg_.engineDisparityS;
    m.expectedPairDisparityS = expected_pair_disparity(cfg_);
    m.speedKmh = w.scenario.speedKmh;
    m.writeImagery = cfg_.writeImagery;
    m.cycleLength = cfg_.schedule.cycleLength;
    m.presetTick = cfg_.schedule.presetTick;
    m.leftCaptureTick = cfg_.schedule.leftCaptureTick;
    m.rightCaptureTick = cfg_.schedule.rightCaptureTick;
    m.width = cfg_.camera.width;
    m.height = cfg_.camera.height;
    m.hfovDeg = cfg_.camera.hfovDeg;
    m.vfovDeg = cfg_.camera.vfovDeg;
    m.nearClip = cfg_.camera.clips.nearClip;
    m.farClip = cfg_.camera.clips.farClip;
    m.depthSemantics = to_string(cfg_.depthSemantics);
    m.inGameDurationS = w.worldTime;
    m.ticksRun = eng().uni_tick();
    int minFeat = std::numeric_limits<int>::max();
    double meanFeat = 0.0;
    for (const auto& p : pairs_) {
      minFeat = std::min(minFeat, p.featureCount);
      meanFeat += p.featureCount;
    }
    if (!pairs_.empty()) meanFeat /= static_cast<double>(pairs_.size());
    m.minFeaturesPerPair = pairs_.empty() ? 0 : minFeat;
    m.meanFeaturesPerPair = meanFeat;
    tefs::write_manifest(outDir_ + "/manifest.json", m);
  }

  CaptureConfig cfg_;
  std::string outDir_;
  std::optional<SimEngine> engine_;
  ViewService view_;
  std::optional<EyeState> pendingLeft_;
  std::vector<FramePairMeta> pairs_;
};

}  // namespace

CaptureRun run_capture(const ScenarioConfig& scenario,
                       const CaptureConfig& config,
                       const std::string& outDir) {
  CaptureSession session(scenario, config, outDir);
  return session.run(scenario.cycles);
}

}  // namespace tefs
