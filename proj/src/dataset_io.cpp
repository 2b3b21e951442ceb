#include "tefs/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/LU>

#include "json.hpp"

#include "tefs/errors.hpp"
#include "tefs/rng.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace tefs {

namespace {

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void put_u32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) |
         (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

std::string frame_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", index);
  return buf;
}

void write_ppm(const std::string& path, const Image& image) {
  auto out = open_out(path, true);
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()),
            static_cast<std::streamsize>(image.rgb.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

Image read_ppm(const std::string& path) {
  auto in = open_in(path, true);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || maxval != 255) {
    throw IoError("'" + path + "' is not an 8-bit P6 image");
  }
  in.get();  // single whitespace after the header
  Image img(w, h);
  in.read(reinterpret_cast<char*>(img.rgb.data()),
          static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw IoError("truncated pixel data in '" + path + "'");
  }
  return img;
}

void write_depth_bin(const std::string& path, const DepthBin& bin) {
  if (bin.data.size() !=
      static_cast<size_t>(bin.width) * static_cast<size_t>(bin.height)) {
    throw IoError("depth buffer size does not match its dimensions");
  }
  auto out = open_out(path, true);
  out.write("TFSD", 4);
  put_u32(out, static_cast<uint32_t>(bin.width));
  put_u32(out, static_cast<uint32_t>(bin.height));
  put_u32(out, static_cast<uint32_t>(bin.semantics));
  static_assert(sizeof(float) == 4);
  out.write(reinterpret_cast<const char*>(bin.data.data()),
            static_cast<std::streamsize>(bin.data.size() * 4));
  if (!out) throw IoError("short write to '" + path + "'");
}

DepthBin read_depth_bin(const std::string& path) {
  auto in = open_in(path, true);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "TFSD", 4) != 0) {
    throw IoError("'" + path + "' is not a depth container (bad magic)");
  }
  DepthBin bin;
  bin.width = static_cast<int>(get_u32(in));
  bin.height = static_cast<int>(get_u32(in));
  const uint32_t sem = get_u32(in);
  if (!in || bin.width <= 0 || bin.height <= 0 || sem > 4) {
    throw IoError("'" + path + "' has a corrupt depth header");
  }
  bin.semantics = static_cast<DepthSemantics>(sem);
  const size_t n = static_cast<size_t>(bin.width) * bin.height;
  bin.data.resize(n);
  in.read(reinterpret_cast<char*>(bin.data.data()),
          static_cast<std::streamsize>(n * 4));
  if (in.gcount() != static_cast<std::streamsize>(n * 4)) {
    throw IoError("truncated depth data in '" + path + "'");
  }
  return bin;
}

void write_poses_kitti(const std::string& path,
                       const std::vector<PoseSE3>& poses) {
  auto out = open_out(path, false);
  char buf[32];
  for (const PoseSE3& p : poses) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 4; ++c) {
        const double v = c < 3 ? p.rotation(r, c) : p.translation(r);
        std::snprintf(buf, sizeof buf, "%.16e", v);
        out << buf;
        if (!(r == 2 && c == 3)) out << ' ';
      }
    }
    out << '\n';
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

std::vector<PoseSE3> read_poses_kitti(const std::string& path) {
  auto in = open_in(path, false);
  std::vector<PoseSE3> poses;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (line.empty()) continue;
    std::istringstream ss(line);
    double v[12];
    for (int i = 0; i < 12; ++i) {
      if (!(ss >> v[i])) {
        throw IoError(path + ":" + std::to_string(lineNo) +
                      ": expected 12 numbers per pose line");
      }
    }
    PoseSE3 p;
    p.rotation << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    p.translation << v[3], v[7], v[11];
    const double ortho =
        (p.rotation.transpose() * p.rotation - Eigen::Matrix3d::Identity())
            .cwiseAbs()
            .maxCoeff();
    const double det = p.rotation.determinant();
    if (ortho > 1e-6 || std::abs(det - 1.0) > 1e-6) {
      throw IoError(path + ":" + std::to_string(lineNo) +
                    ": rotation block is not orthonormal (deviation " +
                    std::to_string(ortho) + ", determinant " +
                    std::to_string(det) + ")");
    }
    poses.push_back(p);
  }
  return poses;
}

void write_scalar_column(const std::string& path,
                         const std::vector<double>& values) {
  auto out = open_out(path, false);
  char buf[32];
  for (double v : values) {
    std::snprintf(buf, sizeof buf, "%.6f\n", v);
    out << buf;
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

std::vector<double> read_scalar_column(const std::string& path) {
  auto in = open_in(path, false);
  std::vector<double> values;
  double v;
  while (in >> v) values.push_back(v);
  return values;
}

void write_gps(const std::string& path, const std::vector<GpsRecord>& fixes) {
  auto out = open_out(path, false);
  char buf[96];
  for (const auto& g : fixes) {
    std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f\n", g.t, g.x, g.y);
    out << buf;
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

std::vector<GpsRecord> read_gps(const std::string& path) {
  auto in = open_in(path, false);
  std::vector<GpsRecord> out;
  GpsRecord g;
  while (in >> g.t >> g.x >> g.y) out.push_back(g);
  return out;
}

void write_features(const std::string& path,
                    const std::vector<FeatureRecord>& features) {
  auto out = open_out(path, false);
  char buf[160];
  for (const auto& f : features) {
    std::snprintf(buf, sizeof buf, "%u %.10e %.10e %.10e %.10e\n",
                  static_cast<unsigned>(f.id), f.uL, f.vL, f.uR, f.vR);
    out << buf;
  }
  if (!out) throw IoError("short write to '" + path + "'");
}

std::vector<FeatureRecord> read_features(const std::string& path) {
  auto in = open_in(path, false);
  std::vector<FeatureRecord> out;
  unsigned id;
  double uL, vL, uR, vR;
  while (in >> id >> uL >> vL >> uR >> vR) {
    out.push_back({static_cast<uint16_t>(id), uL, vL, uR, vR});
  }
  return out;
}

void write_calib(const std::string& path, const CalibInfo& c) {
  std::ostringstream out;
  char buf[96];
  auto kv = [&](const char* key, double v) {
    std::snprintf(buf, sizeof buf, "%s %.16e\n", key, v);
    out << buf;
  };
  kv("fx", c.fx);
  kv("fy", c.fy);
  kv("cx", c.cx);
  kv("cy", c.cy);
  kv("baseline_m", c.baselineM);
  out << "width " << c.width << "\n";
  out << "height " << c.height << "\n";
  kv("near_clip", c.clips.nearClip);
  kv("far_clip", c.clips.farClip);
  out << "depth_semantics " << to_string(c.depthSemantics) << "\n";
  write_text_file(path, out.str());
}

CalibInfo read_calib(const std::string& path) {
  auto in = open_in(path, false);
  CalibInfo c;
  std::string key;
  while (in >> key) {
    if (key == "fx") in >> c.fx;
    else if (key == "fy") in >> c.fy;
    else if (key == "cx") in >> c.cx;
    else if (key == "cy") in >> c.cy;
    else if (key == "baseline_m") in >> c.baselineM;
    else if (key == "width") in >> c.width;
    else if (key == "height") in >> c.height;
    else if (key == "near_clip") in >> c.clips.nearClip;
    else if (key == "far_clip") in >> c.clips.farClip;
    else if (key == "depth_semantics") {
      std::string name;
      in >> name;
      c.depthSemantics = depth_semantics_from_string(name.c_str());
    } else {
      throw IoError(path + ": unknown calibration key '" + key + "'");
    }
    if (!in) throw IoError(path + ": bad value for key '" + key + "'");
  }
  return c;
}

void write_manifest(const std::string& path, const DatasetManifest& m) {
  ordered_json j;
  j["version"] = m.version;
  j["scenario"] = m.scenario;
  j["method"] = m.method;
  j["condition_profile"] = m.conditionProfile;
  j["rig"] = {{"baseline_m", m.baselineM},
              {"cam_height_m", m.camHeightM},
              {"cam_forward_m", m.camForwardM}};
  j["frame_count"] = m.frameCount;
  j["trajectory_length_m"] = m.trajectoryLengthM;
  j["seed"] = m.seed;
  j["complete"] = m.complete;
  j["cycles"] = m.cycles;
  j["tick_rate_hz"] = m.tickRateHz;
  j["engine_disparity_s"] = m.engineDisparityS;
  j["expected_pair_disparity_s"] = m.expectedPairDisparityS;
  j["speed_kmh"] = m.speedKmh;
  j["write_imagery"] = m.writeImagery;
  j["schedule"] = {{"cycle_length", m.cycleLength},
                   {"preset_tick", m.presetTick},
                   {"left_capture_tick", m.leftCaptureTick},
                   {"right_capture_tick", m.rightCaptureTick}};
  j["camera"] = {{"width", m.width},
                 {"height", m.height},
                 {"hfov_deg", m.hfovDeg},
                 {"vfov_deg", m.vfovDeg},
                 {"near_clip", m.nearClip},
                 {"far_clip", m.farClip}};
  j["depth_semantics"] = m.depthSemantics;
  j["in_game_duration_s"] = m.inGameDurationS;
  j["ticks_run"] = m.ticksRun;
  j["features"] = {{"min_per_pair", m.minFeaturesPerPair},
                   {"mean_per_pair", m.meanFeaturesPerPair}};
  write_text_file(path, j.dump(2) + "\n");
}

DatasetManifest read_manifest(const std::string& path) {
  DatasetManifest m;
  try {
    const ordered_json j = ordered_json::parse(read_text_file(path));
    m.version = j.at("version").get<int>();
    m.scenario = j.at("scenario").get<std::string>();
    m.method = j.at("method").get<std::string>();
    m.conditionProfile = j.at("condition_profile").get<std::string>();
    const auto& rig = j.at("rig");
    m.baselineM = rig.at("baseline_m").get<double>();
    m.camHeightM = rig.at("cam_height_m").get<double>();
    m.camForwardM = rig.at("cam_forward_m").get<double>();
    m.frameCount = j.at("frame_count").get<int>();
    m.trajectoryLengthM = j.at("trajectory_length_m").get<double>();
    m.seed = j.at("seed").get<uint64_t>();
    m.complete = j.at("complete").get<bool>();
    m.cycles = j.at("cycles").get<uint64_t>();
    m.tickRateHz = j.at("tick_rate_hz").get<double>();
    m.engineDisparityS = j.at("engine_disparity_s").get<double>();
    m.expectedPairDisparityS = j.at("expected_pair_disparity_s").get<double>();
    m.speedKmh = j.at("speed_kmh").get<double>();
    m.writeImagery = j.at("write_imagery").get<bool>();
    const auto& sch = j.at("schedule");
    m.cycleLength = sch.at("cycle_length").get<int>();
    m.presetTick = sch.at("preset_tick").get<int>();
    m.leftCaptureTick = sch.at("left_capture_tick").get<int>();
    m.rightCaptureTick = sch.at("right_capture_tick").get<int>();
    const auto& cam = j.at("camera");
    m.width = cam.at("width").get<int>();
    m.height = cam.at("height").get<int>();
    m.hfovDeg = cam.at("hfov_deg").get<double>();
    m.vfovDeg = cam.at("vfov_deg").get<double>();
    m.nearClip = cam.at("near_clip").get<double>();
    m.farClip = cam.at("far_clip").get<double>();
    m.depthSemantics = j.at("depth_semantics").get<std::string>();
    m.inGameDurationS = j.at("in_game_duration_s").get<double>();
    m.ticksRun = j.at("ticks_run").get<uint64_t>();
    const auto& feat = j.at("features");
    m.minFeaturesPerPair = feat.at("min_per_pair").get<int>();
    m.meanFeaturesPerPair = feat.at("mean_per_pair").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path + ": " + e.what());
  }
  return m;
}

uint64_t tree_hash(const std::string& dir,
                   const std::vector<std::string>& exclude) {
  if (!fs::is_directory(dir)) {
    throw IoError("'" + dir + "' is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::vector<std::string> rel;
  rel.reserve(files.size());
  for (const auto& p : files) {
    std::string r = fs::relative(p, dir).generic_string();
    if (std::find(exclude.begin(), exclude.end(), r) == exclude.end()) {
      rel.push_back(std::move(r));
    }
  }
  std::sort(rel.begin(), rel.end());

  Fnv1a h;
  for (const std::string& r : rel) {
    h.update(r.data(), r.size());
    h.update("\0", 1);
    auto in = open_in((fs::path(dir) / r).string(), true);
    char buf[1 << 16];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
      h.update(buf, static_cast<size_t>(in.gcount()));
      if (!in) break;
    }
    h.update("\x01", 1);
  }
  return h.digest();
}

std::string hash_hex(uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec && !fs::is_directory(dir)) {
    throw IoError("cannot create directory '" + dir + "': " + ec.message());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path, true);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("short write to '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path, true);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace tefs
