#include "tefs/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "tefs/errors.hpp"

namespace tefs {

double ScenarioPath::total_length() const {
  double total = 0.0;
  for (const auto& seg : segments) total += seg.arc_length();
  return total;
}

PoseSE3 ScenarioPath::pose_at_arclength(double s) const {
  const double total = total_length();
  if (wrap && total > 0.0) {
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
  }
  if (s < -1e-9 || s > total + 1e-9) {
    throw std::out_of_range("arclength " + std::to_string(s) +
                            " outside path of length " + std::to_string(total));
  }
  s = std::min(std::max(s, 0.0), total);

  double x = startX, y = startY, yaw = startYawRad;
  for (const auto& seg : segments) {
    const double len = seg.arc_length();
    const double take = std::min(s, len);
    if (seg.kind == PathSegment::Kind::Straight) {
      x += take * std::cos(yaw);
      y += take * std::sin(yaw);
    } else {
      // Constant-radius arc; exact closed form so pose sampling is
      // resolution-independent.
      const double phi = (take / seg.radiusM) * seg.turnDir;
      if (seg.turnDir > 0) {
        x += seg.radiusM * (std::sin(yaw + phi) - std::sin(yaw));
        y -= seg.radiusM * (std::cos(yaw + phi) - std::cos(yaw));
      } else {
        x -= seg.radiusM * (std::sin(yaw + phi) - std::sin(yaw));
        y += seg.radiusM * (std::cos(yaw + phi) - std::cos(yaw));
      }
      yaw += phi;
    }
    s -= take;
    if (s <= 0.0) break;
  }
  return PoseSE3::planar(x, y, startZ, yaw);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    throw IoError("bad numeric value '" + v + "' for key '" + key + "'");
  }
}

long parse_long(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing junk");
    return d;
  } catch (const std::exception&) {
    throw IoError("bad integer value '" + v + "' for key '" + key + "'");
  }
}

PathSegment parse_segment(const std::string& body, const std::string& origin,
                          int lineNo) {
  std::istringstream ss(body);
  std::string kind;
  ss >> kind;
  PathSegment seg;
  if (kind == "straight") {
    seg.kind = PathSegment::Kind::Straight;
    if (!(ss >> seg.lengthM) || seg.lengthM <= 0.0) {
      throw IoError(origin + ":" + std::to_string(lineNo) +
                    ": straight segment needs a positive length");
    }
  } else if (kind == "arc") {
    seg.kind = PathSegment::Kind::Arc;
    std::string dir;
    double angleDeg = 0.0;
    if (!(ss >> dir >> seg.radiusM >> angleDeg) || seg.radiusM <= 0.0 ||
        angleDeg <= 0.0 || (dir != "left" && dir != "right")) {
      throw IoError(origin + ":" + std::to_string(lineNo) +
                    ": arc segment needs 'left|right <radius> <degrees>'");
    }
    seg.turnDir = (dir == "left") ? +1 : -1;
    seg.angleRad = deg2rad(angleDeg);
  } else {
    throw IoError(origin + ":" + std::to_string(lineNo) +
                  ": unknown segment kind '" + kind + "'");
  }
  std::string extra;
  if (ss >> extra) {
    throw IoError(origin + ":" + std::to_string(lineNo) +
                  ": unexpected trailing token '" + extra + "'");
  }
  return seg;
}

}  // namespace

ScenarioConfig ScenarioConfig::parse(std::istream& in,
                                     const std::string& originName) {
  ScenarioConfig cfg;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.rfind("segment ", 0) == 0) {
      cfg.path.segments.push_back(
          parse_segment(trim(t.substr(8)), originName, lineNo));
      continue;
    }
    size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw IoError(originName + ":" + std::to_string(lineNo) +
                    ": expected 'key = value' or 'segment ...', got '" + t +
                    "'");
    }
    std::string key = trim(t.substr(0, eq));
    std::string val = trim(t.substr(eq + 1));
    if (key == "name") {
      cfg.name = val;
    } else if (key == "speed_kmh") {
      cfg.speedKmh = parse_double(val, key);
    } else if (key == "cycles") {
      cfg.cycles = static_cast<int>(parse_long(val, key));
    } else if (key == "seed") {
      cfg.defaultSeed = static_cast<uint64_t>(parse_long(val, key));
    } else if (key == "leak_fraction") {
      cfg.leakFraction = parse_double(val, key);
    } else if (key == "start_x") {
      cfg.path.startX = parse_double(val, key);
    } else if (key == "start_y") {
      cfg.path.startY = parse_double(val, key);
    } else if (key == "start_z") {
      cfg.path.startZ = parse_double(val, key);
    } else if (key == "start_yaw_deg") {
      cfg.path.startYawRad = deg2rad(parse_double(val, key));
    } else if (key == "wrap") {
      cfg.path.wrap = (val == "true" || val == "1");
    } else if (key == "beacon_spacing_m") {
      cfg.scene.beaconSpacingM = parse_double(val, key);
    } else if (key == "beacon_lateral_min_m") {
      cfg.scene.beaconLateralMinM = parse_double(val, key);
    } else if (key == "beacon_lateral_max_m") {
      cfg.scene.beaconLateralMaxM = parse_double(val, key);
    } else if (key == "beacon_height_min_m") {
      cfg.scene.beaconHeightMinM = parse_double(val, key);
    } else if (key == "beacon_height_max_m") {
      cfg.scene.beaconHeightMaxM = parse_double(val, key);
    } else if (key == "beacon_overrun_m") {
      cfg.scene.beaconOverrunM = parse_double(val, key);
    } else if (key == "box_count") {
      cfg.scene.boxCount = static_cast<int>(parse_long(val, key));
    } else if (key == "box_lateral_min_m") {
      cfg.scene.boxLateralMinM = parse_double(val, key);
    } else if (key == "box_lateral_max_m") {
      cfg.scene.boxLateralMaxM = parse_double(val, key);
    } else if (key == "hard_coded_box_count") {
      cfg.scene.hardCodedBoxCount = static_cast<int>(parse_long(val, key));
    } else if (key == "hard_coded_speed_mps") {
      cfg.scene.hardCodedSpeedMps = parse_double(val, key);
    } else if (key == "scripted_box_count") {
      cfg.scene.scriptedBoxCount = static_cast<int>(parse_long(val, key));
    } else if (key == "scripted_speed_mps") {
      cfg.scene.scriptedSpeedMps = parse_double(val, key);
    } else {
      throw IoError(originName + ":" + std::to_string(lineNo) +
                    ": unknown key '" + key + "'");
    }
  }
  if (cfg.speedKmh < 0.0) {
    throw IoError(originName + ": speed_kmh must be non-negative");
  }
  if (cfg.cycles <= 0) {
    throw IoError(originName + ": cycles must be positive");
  }
  if (cfg.path.segments.empty()) {
    throw IoError(originName + ": scenario has no path segments");
  }
  return cfg;
}

ScenarioConfig ScenarioConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario file '" + path + "'");
  return parse(in, path);
}

std::string ScenarioConfig::serialize() const {
  std::ostringstream out;
  char buf[128];
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s = %.10g\n", key, v);
    out << buf;
  };
  out << "name = " << name << "\n";
  kv("speed_kmh", speedKmh);
  out << "cycles = " << cycles << "\n";
  out << "seed = " << defaultSeed << "\n";
  kv("leak_fraction", leakFraction);
  kv("start_x", path.startX);
  kv("start_y", path.startY);
  kv("start_z", path.startZ);
  kv("start_yaw_deg", rad2deg(path.startYawRad));
  out << "wrap = " << (path.wrap ? "true" : "false") << "\n";
  kv("beacon_spacing_m", scene.beaconSpacingM);
  kv("beacon_lateral_min_m", scene.beaconLateralMinM);
  kv("beacon_lateral_max_m", scene.beaconLateralMaxM);
  kv("beacon_height_min_m", scene.beaconHeightMinM);
  kv("beacon_height_max_m", scene.beaconHeightMaxM);
  kv("beacon_overrun_m", scene.beaconOverrunM);
  out << "box_count = " << scene.boxCount << "\n";
  kv("box_lateral_min_m", scene.boxLateralMinM);
  kv("box_lateral_max_m", scene.boxLateralMaxM);
  out << "hard_coded_box_count = " << scene.hardCodedBoxCount << "\n";
  kv("hard_coded_speed_mps", scene.hardCodedSpeedMps);
  out << "scripted_box_count = " << scene.scriptedBoxCount << "\n";
  kv("scripted_speed_mps", scene.scriptedSpeedMps);
  for (const auto& seg : path.segments) {
    if (seg.kind == PathSegment::Kind::Straight) {
      std::snprintf(buf, sizeof buf, "segment straight %.10g\n", seg.lengthM);
    } else {
      std::snprintf(buf, sizeof buf, "segment arc %s %.10g %.10g\n",
                    seg.turnDir > 0 ? "left" : "right", seg.radiusM,
                    rad2deg(seg.angleRad));
    }
    out << buf;
  }
  return out.str();
}

}  // namespace tefs
