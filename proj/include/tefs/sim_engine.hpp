#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "tefs/geometry.hpp"
#include "tefs/scenario.hpp"

namespace tefs {

enum class CameraSide : int { Left = 0, Right = 1 };

inline const char* to_string(CameraSide s) {
  return s == CameraSide::Left ? "left" : "right";
}

// A box-shaped prop. Scripted props follow world time (and therefore freeze
// under a zero time scale); hard-coded props follow the render clock and keep
// drifting while the world is pseudo-paused — the leak the protocol has to
// tolerate. Static props never move.
struct WorldObject {
  enum class Motion { Static, Scripted, HardCoded };
  Motion motion = Motion::Static;
  Eigen::Vector3d basePos{0, 0, 0};
  Eigen::Vector3d driftDir{1, 0, 0};  // unit, world frame
  double speedMps = 0.0;
  Eigen::Vector3d halfExtents{1, 1, 1};
  std::array<uint8_t, 3> color{128, 128, 128};

  Eigen::Vector3d position(double worldTime, double hardCodedTime) const;
};

// Point landmark used for exact stereo correspondences. The identity is
// painted into the rasterized splat so it can be recovered from pixels alone.
struct Beacon {
  uint16_t id = 0;
  Eigen::Vector3d position{0, 0, 0};
};

// Stereo rig mounted on the vehicle. Vehicle frame: +X forward, +Y left,
// +Z up. Camera frame: +Z forward, +X right, +Y down. The left camera sits
// half a baseline to the vehicle's left, the right camera half to the right.
struct StereoRig {
  double baselineM = 0.54;
  double camHeightM = 1.65;
  double camForwardM = 0.0;

  PoseSE3 camera_from_vehicle(CameraSide side) const;
};

struct World {
  ScenarioConfig scenario;
  StereoRig rig;
  std::vector<Beacon> beacons;
  std::vector<WorldObject> boxes;
  double worldTime = 0.0;      // in-game seconds, obeys the time scale
  double hardCodedTime = 0.0;  // render-clock seconds, ignores the time scale

  static World build(const ScenarioConfig& cfg, uint64_t seed);

  double arclength() const { return scenario.speed_mps() * worldTime; }
  PoseSE3 vehicle_pose() const;
  PoseSE3 vehicle_pose_at_time(double t) const;
  PoseSE3 camera_pose(CameraSide side) const;
  Eigen::Vector3d box_position(size_t i) const;

  // Digest of everything scripted objects and leaked animations can change:
  // clocks, vehicle pose, prop positions. Deliberately excludes the render
  // tick counter and camera routing, so a sound pseudo-pause leaves it
  // unchanged tick after tick.
  uint64_t state_hash() const;
};

struct EngineConfig {
  double tickRateHz = 60.0;
  double engineDisparityS = 0.00025;  // residual in-game time between the two
                                      // captures of a pair; cannot be removed,
                                      // only injected explicitly
  double tick_duration() const { return 1.0 / tickRateHz; }

  // Disparity operating points: the engine's own residual (default), the
  // tightest residual the swap machinery reaches, and the wider residual
  // used when validating against dual-viewport oracles.
  static constexpr double kDisparityDefaultS = 0.00025;
  static constexpr double kDisparityTightS = 0.0002;
  static constexpr double kDisparityValidationS = 0.0005;
};

// Single-viewport engine core. One tick() is one render frame. A camera swap
// request never takes effect on the frame it was issued: it commits at the
// start of the next tick. A zero time scale pseudo-pauses the world while the
// renderer keeps running; a native pause stalls the renderer itself: ticks
// only count, nothing moves, and swap requests are refused outright.
class SimEngine {
 public:
  SimEngine(World world, EngineConfig cfg);

  void tick();
  void set_time_scale(double scale);  // any value >= 0
  void set_native_pause(bool paused);
  void request_swap(CameraSide side);

  // Direct in-game clock advance, used to model the engine-level temporal
  // disparity between the members of a stereo pair.
  void advance_world_time(double dt);

  CameraSide active_side() const { return activeSide_; }
  std::optional<CameraSide> pending_swap() const { return pendingSwap_; }
  bool native_paused() const { return nativePaused_; }
  double time_scale() const { return timeScale_; }
  uint64_t uni_tick() const { return uniTick_; }
  const World& world() const { return world_; }
  const EngineConfig& config() const { return cfg_; }
  PoseSE3 camera_pose(CameraSide side) const { return world_.camera_pose(side); }

  // state_hash() plus the render tick counter and camera routing.
  uint64_t full_hash() const;

 private:
  World world_;
  EngineConfig cfg_;
  double timeScale_ = 1.0;
  bool nativePaused_ = false;
  CameraSide activeSide_ = CameraSide::Left;
  std::optional<CameraSide> pendingSwap_;
  uint64_t uniTick_ = 0;
};

// In-game metres an object moving at `speedKmh` covers in `dtSeconds`:
// the spatial offset a temporal disparity of dtSeconds induces.
double spatial_offset_m(double speedKmh, double dtSeconds);

}  // namespace tefs
