#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tefs/geometry.hpp"

namespace tefs {

// Piecewise C1 ground path: straights and constant-radius arcs, driven at
// constant speed. Arc-length parameterization keeps displacement exactly
// linear in time on straight segments.
struct PathSegment {
  enum class Kind { Straight, Arc };
  Kind kind = Kind::Straight;
  double lengthM = 0.0;    // straight
  double radiusM = 0.0;    // arc
  double angleRad = 0.0;   // arc sweep, > 0
  int turnDir = +1;        // +1 left, -1 right

  double arc_length() const {
    return kind == Kind::Straight ? lengthM : radiusM * angleRad;
  }
};

struct ScenarioPath {
  double startX = 0.0, startY = 0.0, startZ = 0.0;
  double startYawRad = 0.0;
  std::vector<PathSegment> segments;
  bool wrap = false;  // evaluate arclength modulo total length (laps)

  double total_length() const;
  // Pose at arclength s along the path. Throws std::out_of_range when s is
  // outside [0, total_length()] and wrap is off.
  PoseSE3 pose_at_arclength(double s) const;
};

// Procedural scene layout parameters. Beacons line the path corridor;
// boxes sit further out so they do not occlude the beacon lines.
struct SceneParams {
  double beaconSpacingM = 4.0;
  double beaconLateralMinM = 5.0;
  double beaconLateralMaxM = 9.0;
  double beaconHeightMinM = 0.5;
  double beaconHeightMaxM = 5.0;
  double beaconOverrunM = 70.0;  // extend corridor past an open path's end
  int boxCount = 20;
  double boxLateralMinM = 12.0;
  double boxLateralMaxM = 25.0;
  int hardCodedBoxCount = 0;     // boxes that keep drifting under pseudo-pause
  double hardCodedSpeedMps = 1.4;
  int scriptedBoxCount = 0;      // boxes that drift with world time
  double scriptedSpeedMps = 1.0;
};

struct ScenarioConfig {
  std::string name = "unnamed";
  double speedKmh = 10.0;
  ScenarioPath path;
  SceneParams scene;
  int cycles = 60;
  uint64_t defaultSeed = 1;
  double leakFraction = 0.0;  // hard-coded motion step per tick, as a fraction
                              // of an unscaled tick

  double speed_mps() const { return speedKmh / 3.6; }
  double duration_s() const {
    return speed_mps() > 0 ? path.total_length() / speed_mps() : 0.0;
  }

  // Key-value text format with one `segment` line per path piece; see
  // docs/formats.md.
  static ScenarioConfig parse(std::istream& in, const std::string& originName);
  static ScenarioConfig parse_file(const std::string& path);
  std::string serialize() const;
};

}  // namespace tefs
