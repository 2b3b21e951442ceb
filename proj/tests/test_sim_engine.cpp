#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "tefs/errors.hpp"
#include "tefs/geometry.hpp"
#include "tefs/scenario.hpp"
#include "tefs/sim_engine.hpp"

using tefs::CameraSide;
using tefs::EngineConfig;
using tefs::PathSegment;
using tefs::PoseSE3;
using tefs::ProtocolError;
using tefs::ScenarioConfig;
using tefs::SimEngine;
using tefs::spatial_offset_m;
using tefs::World;

namespace {

ScenarioConfig straight_scenario(double speedKmh = 10.0) {
  ScenarioConfig cfg;
  cfg.name = "engine_test";
  cfg.speedKmh = speedKmh;
  PathSegment seg;
  seg.kind = PathSegment::Kind::Straight;
  seg.lengthM = 500.0;
  cfg.path.segments.push_back(seg);
  cfg.scene.boxCount = 4;
  return cfg;
}

SimEngine make_engine(const ScenarioConfig& cfg, uint64_t seed = 1,
                      EngineConfig ecfg = EngineConfig{}) {
  return SimEngine(World::build(cfg, seed), ecfg);
}

}  // namespace

TEST_CASE("spatial offset is speed times exposure gap") {
  // speed [km/h] / 3.6 * gap [s]; all four operating points, against values
  // computed longhand.
  CHECK(spatial_offset_m(10.0, 0.0005) ==
        doctest::Approx(10.0 / 3.6 * 0.0005).epsilon(1e-15));
  CHECK(spatial_offset_m(10.0, 0.0005) == doctest::Approx(1.3889e-3).epsilon(1e-4));
  CHECK(spatial_offset_m(15.0, 0.0005) == doctest::Approx(2.0833e-3).epsilon(1e-4));
  CHECK(spatial_offset_m(25.0, 0.0005) == doctest::Approx(3.4722e-3).epsilon(1e-4));
  CHECK(spatial_offset_m(120.0, 0.0167) == doctest::Approx(0.55667).epsilon(1e-4));
  CHECK(spatial_offset_m(0.0, 0.0167) == 0.0);
  CHECK(spatial_offset_m(60.0, 0.0) == 0.0);
}

TEST_CASE("engine config validation") {
  const ScenarioConfig cfg = straight_scenario();
  EngineConfig bad;
  bad.tickRateHz = 0.0;
  CHECK_THROWS_AS(make_engine(cfg, 1, bad), std::invalid_argument);
  bad = EngineConfig{};
  bad.engineDisparityS = -1e-6;
  CHECK_THROWS_AS(make_engine(cfg, 1, bad), std::invalid_argument);
  CHECK(EngineConfig{}.tick_duration() == doctest::Approx(1.0 / 60.0).epsilon(1e-15));
}

TEST_CASE("world time integrates tick duration scaled by time scale") {
  SimEngine eng = make_engine(straight_scenario());
  const double dt = eng.config().tick_duration();

  for (int i = 0; i < 30; ++i) eng.tick();
  CHECK(eng.world().worldTime == doctest::Approx(30.0 * dt).epsilon(1e-12));
  CHECK(eng.uni_tick() == 30);

  eng.set_time_scale(2.0);
  for (int i = 0; i < 10; ++i) eng.tick();
  CHECK(eng.world().worldTime == doctest::Approx(50.0 * dt).epsilon(1e-12));

  eng.set_time_scale(0.25);
  for (int i = 0; i < 8; ++i) eng.tick();
  CHECK(eng.world().worldTime == doctest::Approx(52.0 * dt).epsilon(1e-12));
  CHECK(eng.uni_tick() == 48);

  CHECK_THROWS_AS(eng.set_time_scale(-0.5), std::invalid_argument);
}

TEST_CASE("vehicle drives the path at the configured speed") {
  SimEngine eng = make_engine(straight_scenario(36.0));  // 10 m/s
  const double dt = eng.config().tick_duration();
  for (int i = 0; i < 60; ++i) eng.tick();
  // One second of world time at 10 m/s on a straight from the origin.
  const PoseSE3 v = eng.world().vehicle_pose();
  CHECK(eng.world().worldTime == doctest::Approx(60.0 * dt).epsilon(1e-12));
  CHECK(v.translation.x() == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(v.translation.y() == doctest::Approx(0.0).epsilon(1e-12));

  // vehicle_pose_at_time matches the live pose without mutating anything.
  const PoseSE3 replay = eng.world().vehicle_pose_at_time(eng.world().worldTime);
  CHECK((replay.translation - v.translation).norm() < 1e-12);
}

TEST_CASE("zero time scale freezes scripted state while the engine keeps ticking") {
  ScenarioConfig cfg = straight_scenario();
  cfg.scene.scriptedBoxCount = 2;  // scripted props must freeze too
  SimEngine eng = make_engine(cfg);
  for (int i = 0; i < 10; ++i) eng.tick();

  eng.set_time_scale(0.0);
  const uint64_t frozen = eng.world().state_hash();
  const uint64_t tickBefore = eng.uni_tick();
  for (int i = 0; i < 25; ++i) {
    eng.tick();
    CHECK(eng.world().state_hash() == frozen);
  }
  CHECK(eng.uni_tick() == tickBefore + 25);

  // Resuming picks the world back up.
  eng.set_time_scale(1.0);
  eng.tick();
  CHECK(eng.world().state_hash() != frozen);
}

TEST_CASE("hard-coded animations leak through a zero time scale") {
  ScenarioConfig cfg = straight_scenario();
  cfg.scene.boxCount = 3;
  cfg.scene.hardCodedBoxCount = 1;
  cfg.leakFraction = 1.0;
  SimEngine eng = make_engine(cfg);
  eng.set_time_scale(0.0);

  const Eigen::Vector3d before = eng.world().box_position(0);
  const PoseSE3 vehicleBefore = eng.world().vehicle_pose();
  const uint64_t hashBefore = eng.world().state_hash();
  for (int i = 0; i < 12; ++i) eng.tick();

  // The hard-coded prop crawled away while the vehicle stayed parked.
  CHECK((eng.world().box_position(0) - before).norm() > 1e-6);
  CHECK((eng.world().vehicle_pose().translation - vehicleBefore.translation).norm() < 1e-12);
  CHECK(eng.world().state_hash() != hashBefore);

  // With no leaking props the same drive is bitwise clean.
  ScenarioConfig clean = straight_scenario();
  clean.leakFraction = 0.0;
  SimEngine eng2 = make_engine(clean);
  eng2.set_time_scale(0.0);
  const uint64_t h2 = eng2.world().state_hash();
  for (int i = 0; i < 12; ++i) eng2.tick();
  CHECK(eng2.world().state_hash() == h2);
}

TEST_CASE("camera swap becomes visible one frame after the request") {
  SimEngine eng = make_engine(straight_scenario());
  CHECK(eng.active_side() == CameraSide::Left);

  eng.request_swap(CameraSide::Right);
  // Still the old eye for the remainder of this frame.
  CHECK(eng.active_side() == CameraSide::Left);
  CHECK(eng.pending_swap().has_value());

  eng.tick();  // commit happens at the start of the next frame
  CHECK(eng.active_side() == CameraSide::Right);
  CHECK_FALSE(eng.pending_swap().has_value());

  // Swap back the same way.
  eng.request_swap(CameraSide::Left);
  CHECK(eng.active_side() == CameraSide::Right);
  eng.tick();
  CHECK(eng.active_side() == CameraSide::Left);
}

TEST_CASE("requesting the already-active side consumes nothing") {
  SimEngine eng = make_engine(straight_scenario());
  eng.request_swap(CameraSide::Left);
  CHECK_FALSE(eng.pending_swap().has_value());
  eng.tick();
  CHECK(eng.active_side() == CameraSide::Left);

  // A pending request can be superseded before it commits.
  eng.request_swap(CameraSide::Right);
  eng.request_swap(CameraSide::Left);
  eng.tick();
  CHECK(eng.active_side() == CameraSide::Left);
}

TEST_CASE("native pause stalls the world but not the tick counter") {
  SimEngine eng = make_engine(straight_scenario());
  for (int i = 0; i < 5; ++i) eng.tick();
  const uint64_t frozen = eng.world().state_hash();
  const double tBefore = eng.world().worldTime;

  eng.set_native_pause(true);
  CHECK(eng.native_paused());
  const uint64_t tickBefore = eng.uni_tick();
  for (int i = 0; i < 9; ++i) eng.tick();
  CHECK(eng.uni_tick() == tickBefore + 9);
  CHECK(eng.world().state_hash() == frozen);
  CHECK(eng.world().worldTime == tBefore);

  // Swap requests are refused outright while natively paused.
  CHECK_THROWS_AS(eng.request_swap(CameraSide::Right), ProtocolError);
  try {
    eng.request_swap(CameraSide::Right);
  } catch (const ProtocolError& e) {
    CHECK(std::string(e.what()).find("camera_swap") != std::string::npos);
  }

  eng.set_native_pause(false);
  eng.tick();
  CHECK(eng.world().state_hash() != frozen);
}

TEST_CASE("a swap requested before a native pause stays latched across it") {
  SimEngine eng = make_engine(straight_scenario());
  eng.request_swap(CameraSide::Right);
  eng.set_native_pause(true);
  for (int i = 0; i < 4; ++i) eng.tick();
  // Paused frames do not service the routing change.
  CHECK(eng.active_side() == CameraSide::Left);
  CHECK(eng.pending_swap().has_value());

  eng.set_native_pause(false);
  eng.tick();
  CHECK(eng.active_side() == CameraSide::Right);
  CHECK_FALSE(eng.pending_swap().has_value());
}

TEST_CASE("advance_world_time injects exposure gaps without a tick") {
  SimEngine eng = make_engine(straight_scenario(10.0));
  eng.set_time_scale(0.0);
  const double t0 = eng.world().worldTime;
  const PoseSE3 p0 = eng.world().vehicle_pose();

  eng.advance_world_time(0.0005);
  CHECK(eng.world().worldTime == doctest::Approx(t0 + 0.0005).epsilon(1e-15));
  // The vehicle moved by exactly speed * gap.
  const double moved =
      (eng.world().vehicle_pose().translation - p0.translation).norm();
  CHECK(moved == doctest::Approx(spatial_offset_m(10.0, 0.0005)).epsilon(1e-9));
  CHECK(eng.uni_tick() == 0);

  CHECK_THROWS_AS(eng.advance_world_time(-1e-9), std::invalid_argument);
}

TEST_CASE("stereo rig geometry places the eyes half a baseline apart") {
  SimEngine eng = make_engine(straight_scenario());
  const auto& rig = eng.world().rig;
  CHECK(rig.baselineM == doctest::Approx(0.54).epsilon(1e-15));

  const PoseSE3 left = eng.world().camera_pose(CameraSide::Left);
  const PoseSE3 right = eng.world().camera_pose(CameraSide::Right);
  // Vehicle at origin, heading +X: the left eye sits at +Y, eyes split by
  // the full baseline, both at camera height.
  CHECK(left.translation.y() == doctest::Approx(+0.27).epsilon(1e-12));
  CHECK(right.translation.y() == doctest::Approx(-0.27).epsilon(1e-12));
  CHECK((left.translation - right.translation).norm() ==
        doctest::Approx(0.54).epsilon(1e-12));
  CHECK(left.translation.z() == doctest::Approx(rig.camHeightM).epsilon(1e-12));

  // Optical axis (camera +Z) points along the vehicle heading (+X), and
  // camera rows (+X, to the right) point along vehicle -Y.
  CHECK((left.rotation.col(2) - Eigen::Vector3d::UnitX()).norm() < 1e-12);
  CHECK((left.rotation.col(0) + Eigen::Vector3d::UnitY()).norm() < 1e-12);
  CHECK((left.rotation.col(1) + Eigen::Vector3d::UnitZ()).norm() < 1e-12);
  CHECK(left.rotation_orthonormal());

  // Heading +Y (quarter turn): left eye swings to world -X.
  ScenarioConfig turned = straight_scenario();
  turned.path.startYawRad = tefs::deg2rad(90.0);
  SimEngine eng2 = make_engine(turned);
  const PoseSE3 left2 = eng2.world().camera_pose(CameraSide::Left);
  CHECK(left2.translation.x() == doctest::Approx(-0.27).epsilon(1e-12));
  CHECK(std::abs(left2.translation.y()) < 1e-12);
}

TEST_CASE("world construction is seed-deterministic") {
  const ScenarioConfig cfg = straight_scenario();
  const World a = World::build(cfg, 42);
  const World b = World::build(cfg, 42);
  const World c = World::build(cfg, 43);
  CHECK(a.state_hash() == b.state_hash());
  CHECK(a.state_hash() != c.state_hash());
  REQUIRE(a.beacons.size() == b.beacons.size());
  REQUIRE(!a.beacons.empty());
  for (size_t i = 0; i < a.beacons.size(); ++i) {
    CHECK(a.beacons[i].id == b.beacons[i].id);
    CHECK((a.beacons[i].position - b.beacons[i].position).norm() == 0.0);
  }
  // Beacon identities stay within the 12-bit splat-encoding budget.
  for (const auto& bc : a.beacons) CHECK(bc.id < 4096);
}

TEST_CASE("routing state is part of the full configuration digest") {
  SimEngine eng = make_engine(straight_scenario());
  const uint64_t base = eng.full_hash();

  eng.request_swap(CameraSide::Right);
  const uint64_t pending = eng.full_hash();
  CHECK(pending != base);

  eng.tick();
  SimEngine ref = make_engine(straight_scenario());
  ref.tick();
  // Same world state after one tick, but the active eye differs.
  CHECK(eng.world().state_hash() == ref.world().state_hash());
  CHECK(eng.full_hash() != ref.full_hash());
}
