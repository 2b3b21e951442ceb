#include "tefs/sim_engine.hpp"

#include <cmath>
#include <stdexcept>

#include "tefs/errors.hpp"
#include "tefs/rng.hpp"

namespace tefs {

Eigen::Vector3d WorldObject::position(double worldTime,
                                      double hardCodedTime) const {
  switch (motion) {
    case Motion::Static:
      return basePos;
    case Motion::Scripted:
      return basePos + driftDir * (speedMps * worldTime);
    case Motion::HardCoded:
      return basePos + driftDir * (speedMps * hardCodedTime);
  }
  return basePos;
}

PoseSE3 StereoRig::camera_from_vehicle(CameraSide side) const {
  // Columns are the camera axes expressed in the vehicle frame:
  // cam +X (right) = vehicle -Y, cam +Y (down) = vehicle -Z,
  // cam +Z (forward) = vehicle +X.
  PoseSE3 p;
  p.rotation << 0, 0, 1,  //
      -1, 0, 0,           //
      0, -1, 0;
  const double lat = (side == CameraSide::Left ? +0.5 : -0.5) * baselineM;
  p.translation = Eigen::Vector3d(camForwardM, lat, camHeightM);
  return p;
}

namespace {

// Pose at arclength s, extrapolating straight past the end of an open path so
// a scene corridor can overrun the drivable section.
PoseSE3 pose_with_overrun(const ScenarioPath& path, double s) {
  const double total = path.total_length();
  if (path.wrap || s <= total) return path.pose_at_arclength(s);
  PoseSE3 end = path.pose_at_arclength(total);
  const Eigen::Vector3d fwd = end.rotation.col(0);
  end.translation += fwd * (s - total);
  return end;
}

}  // namespace

World World::build(const ScenarioConfig& cfg, uint64_t seed) {
  World w;
  w.scenario = cfg;
  Rng rng = Rng::stream(seed, 0x5343454eULL /* scene stream */);

  const double pathLen = cfg.path.total_length();
  const double corridorLen =
      cfg.path.wrap ? pathLen : pathLen + cfg.scene.beaconOverrunM;
  const auto& sp = cfg.scene;

  uint16_t nextId = 0;
  for (double s = 0.0; s <= corridorLen + 1e-9; s += sp.beaconSpacingM) {
    const PoseSE3 base = pose_with_overrun(cfg.path, s);
    for (int sideSign : {+1, -1}) {
      const double lat =
          sideSign * rng.uniform(sp.beaconLateralMinM, sp.beaconLateralMaxM);
      const double h = rng.uniform(sp.beaconHeightMinM, sp.beaconHeightMaxM);
      Beacon b;
      b.id = nextId++;
      b.position = base * Eigen::Vector3d(0.0, lat, h);
      w.beacons.push_back(b);
    }
    if (nextId >= 4000) break;  // identity encoding carries 12 bits
  }

  for (int i = 0; i < sp.boxCount; ++i) {
    const double s = rng.uniform(0.0, pathLen);
    const int sideSign = rng.uniform01() < 0.5 ? +1 : -1;
    const double lat =
        sideSign * rng.uniform(sp.boxLateralMinM, sp.boxLateralMaxM);
    const PoseSE3 base = cfg.path.pose_at_arclength(s);
    WorldObject box;
    box.halfExtents = Eigen::Vector3d(rng.uniform(0.5, 1.5),
                                      rng.uniform(0.5, 1.5),
                                      rng.uniform(0.5, 1.5));
    Eigen::Vector3d center = base * Eigen::Vector3d(0.0, lat, 0.0);
    center.z() = box.halfExtents.z();  // rests on the ground plane
    box.basePos = center;
    const double ang = rng.uniform(0.0, 2.0 * kPi);
    box.driftDir = Eigen::Vector3d(std::cos(ang), std::sin(ang), 0.0);
    // Colors stay outside the beacon identity band on the red channel and
    // bright enough that a flash-gain frame saturates them.
    box.color = {static_cast<uint8_t>(rng.uniform_int(64, 180)),
                 static_cast<uint8_t>(rng.uniform_int(64, 180)),
                 static_cast<uint8_t>(rng.uniform_int(64, 180))};
    if (i < sp.hardCodedBoxCount) {
      box.motion = WorldObject::Motion::HardCoded;
      box.speedMps = sp.hardCodedSpeedMps;
    } else if (i < sp.hardCodedBoxCount + sp.scriptedBoxCount) {
      box.motion = WorldObject::Motion::Scripted;
      box.speedMps = sp.scriptedSpeedMps;
    }
    w.boxes.push_back(box);
  }
  return w;
}

PoseSE3 World::vehicle_pose() const { return vehicle_pose_at_time(worldTime); }

PoseSE3 World::vehicle_pose_at_time(double t) const {
  return scenario.path.pose_at_arclength(scenario.speed_mps() * t);
}

PoseSE3 World::camera_pose(CameraSide side) const {
  return vehicle_pose() * rig.camera_from_vehicle(side);
}

Eigen::Vector3d World::box_position(size_t i) const {
  return boxes[i].position(worldTime, hardCodedTime);
}

uint64_t World::state_hash() const {
  Fnv1a h;
  h.update_double(worldTime);
  h.update_double(hardCodedTime);
  const PoseSE3 v = vehicle_pose();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) h.update_double(v.rotation(r, c));
  }
  for (int r = 0; r < 3; ++r) h.update_double(v.translation(r));
  for (size_t i = 0; i < boxes.size(); ++i) {
    const Eigen::Vector3d p = box_position(i);
    h.update_double(p.x());
    h.update_double(p.y());
    h.update_double(p.z());
  }
  return h.digest();
}

SimEngine::SimEngine(World world, EngineConfig cfg)
    : world_(std::move(world)), cfg_(cfg) {
  if (cfg_.tickRateHz <= 0.0) {
    throw std::invalid_argument("tick rate must be positive");
  }
  if (cfg_.engineDisparityS < 0.0) {
    throw std::invalid_argument("engine disparity must be non-negative");
  }
}

void SimEngine::tick() {
  // Under a native pause the engine still steps its counter, but the
  // renderer is stalled: nothing in the world moves and a pending camera
  // swap stays pending until the first un-paused frame.
  if (nativePaused_) {
    ++uniTick_;
    return;
  }
  // A pending camera swap becomes visible at the start of this frame — never
  // on the frame during which it was requested.
  if (pendingSwap_) {
    activeSide_ = *pendingSwap_;
    pendingSwap_.reset();
  }
  const double dt = cfg_.tick_duration();
  world_.worldTime += timeScale_ * dt;
  world_.hardCodedTime += dt * world_.scenario.leakFraction;
  ++uniTick_;
}

void SimEngine::set_time_scale(double scale) {
  if (!(scale >= 0.0)) {
    throw std::invalid_argument("time scale must be non-negative");
  }
  timeScale_ = scale;
}

void SimEngine::set_native_pause(bool paused) { nativePaused_ = paused; }

void SimEngine::request_swap(CameraSide side) {
  if (nativePaused_) {
    throw ProtocolError("camera_swap",
                        "swap requests are not serviced during a native pause");
  }
  // Asking for the side that is already live costs nothing: no latency
  // frame is consumed and any in-flight request is superseded only when the
  // target actually differs.
  if (side == activeSide_ && !pendingSwap_) return;
  pendingSwap_ = side;
}

void SimEngine::advance_world_time(double dt) {
  if (dt < 0.0) throw std::invalid_argument("cannot rewind in-game time");
  world_.worldTime += dt;
}

uint64_t SimEngine::full_hash() const {
  Fnv1a h;
  h.update_u64(world_.state_hash());
  h.update_u64(uniTick_);
  h.update_u64(static_cast<uint64_t>(activeSide_));
  h.update_u64(pendingSwap_ ? 2 + static_cast<uint64_t>(*pendingSwap_) : 0);
  h.update_double(timeScale_);
  return h.digest();
}

double spatial_offset_m(double speedKmh, double dtSeconds) {
  return (speedKmh / 3.6) * dtSeconds;
}

}  // namespace tefs
