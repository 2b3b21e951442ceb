#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tefs/depth.hpp"
#include "tefs/geometry.hpp"
#include "tefs/render.hpp"

namespace tefs {

// Zero-padded six-digit frame stem, e.g. 17 -> "000017".
std::string frame_name(int index);

// Binary PPM (P6), 8-bit RGB.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

// Depth buffer container: 16-byte header ("TFSD", u32 width, u32 height,
// u32 semantics), then row-major float32, little-endian throughout.
struct DepthBin {
  int width = 0;
  int height = 0;
  DepthSemantics semantics = DepthSemantics::PlanarMeters;
  std::vector<float> data;
};
void write_depth_bin(const std::string& path, const DepthBin& bin);
DepthBin read_depth_bin(const std::string& path);

// Pose files: one 3x4 row-major camera-to-world matrix per line, full
// precision. The reader reports the line number of any malformed row and
// rejects rotation blocks that deviate from orthonormality (or from unit
// determinant) by more than 1e-6. Scalar columns (timestamps) carry six
// decimals.
void write_poses_kitti(const std::string& path,
                       const std::vector<PoseSE3>& poses);
std::vector<PoseSE3> read_poses_kitti(const std::string& path);
void write_scalar_column(const std::string& path,
                         const std::vector<double>& values);
std::vector<double> read_scalar_column(const std::string& path);

// GPS log: one "t x y" row per frame, six decimals each. Positions are
// planar map coordinates (flat-earth); elevation is not part of the fix.
struct GpsRecord {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};
void write_gps(const std::string& path, const std::vector<GpsRecord>& fixes);
std::vector<GpsRecord> read_gps(const std::string& path);

// Exact stereo correspondences for one frame pair: the landmark id and its
// projection in each member (which may have been captured a short in-game
// interval apart).
struct FeatureRecord {
  uint16_t id = 0;
  double uL = 0, vL = 0, uR = 0, vR = 0;
};
void write_features(const std::string& path,
                    const std::vector<FeatureRecord>& features);
std::vector<FeatureRecord> read_features(const std::string& path);

struct CalibInfo {
  double fx = 0, fy = 0, cx = 0, cy = 0;
  double baselineM = 0;
  int width = 0, height = 0;
  DepthClips clips;
  DepthSemantics depthSemantics = DepthSemantics::SimNativeNdc;
};
void write_calib(const std::string& path, const CalibInfo& calib);
CalibInfo read_calib(const std::string& path);

// Session manifest. `complete` is true only when the session ran to its
// planned end; a run aborted by a protocol violation leaves a manifest with
// complete=false describing the pairs committed so far. write -> read ->
// write reproduces the file byte for byte.
struct DatasetManifest {
  int version = 1;
  std::string scenario;
  std::string method;             // tefs | naiveSwap | dualViewport
  std::string conditionProfile;   // extraSunny | cloudyRain | nightThunderstorm
  double baselineM = 0.0;         // stereo rig geometry
  double camHeightM = 0.0;
  double camForwardM = 0.0;
  int frameCount = 0;             // committed stereo pairs on disk
  double trajectoryLengthM = 0.0; // left-camera path length over those pairs
  uint64_t seed = 0;
  bool complete = true;
  // Provenance of the run, enough to reproduce it exactly.
  uint64_t cycles = 0;
  double tickRateHz = 0.0;
  double engineDisparityS = 0.0;
  double expectedPairDisparityS = 0.0;
  double speedKmh = 0.0;
  bool writeImagery = true;
  int cycleLength = 0;
  int presetTick = 0;
  int leftCaptureTick = 0;
  int rightCaptureTick = 0;
  int width = 0;
  int height = 0;
  double hfovDeg = 0.0;
  double vfovDeg = 0.0;
  double nearClip = 0.0;
  double farClip = 0.0;
  std::string depthSemantics;
  double inGameDurationS = 0.0;
  uint64_t ticksRun = 0;
  int minFeaturesPerPair = 0;
  double meanFeaturesPerPair = 0.0;
};
void write_manifest(const std::string& path, const DatasetManifest& m);
DatasetManifest read_manifest(const std::string& path);

// Order-insensitive digest of a directory tree: sorted relative paths plus
// file bytes. Two captures are byte-identical iff their hashes match.
// Relative paths listed in `exclude` are skipped.
uint64_t tree_hash(const std::string& dir,
                   const std::vector<std::string>& exclude = {});
std::string hash_hex(uint64_t h);

void ensure_dir(const std::string& dir);
void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace tefs
