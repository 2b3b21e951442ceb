#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tefs/depth.hpp"
#include "tefs/geometry.hpp"
#include "tefs/sim_engine.hpp"

namespace tefs {

// Pinhole camera with pixel centers at (i + 0.5, j + 0.5). Horizontal and
// vertical fields of view are independent, so the intrinsics need not be
// square-pixel.
struct CameraModel {
  int width = 320;
  int height = 180;
  double hfovDeg = 90.0;
  double vfovDeg = 59.0;
  DepthClips clips;

  // 1920x1080 profile matching the full-resolution rig this models.
  static CameraModel full_scale() {
    CameraModel c;
    c.width = 1920;
    c.height = 1080;
    return c;
  }

  double fx() const;
  double fy() const;
  double cx() const { return 0.5 * width; }
  double cy() const { return 0.5 * height; }
  // Ray tangents of a continuous pixel coordinate (u, v).
  void pixel_to_tangents(double u, double v, double& xTan, double& yTan) const;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> rgb;  // 3 * width * height, row-major

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(3u * w * h, 0) {}
  uint8_t* px(int x, int y) { return rgb.data() + 3 * (y * width + x); }
  const uint8_t* px(int x, int y) const {
    return rgb.data() + 3 * (y * width + x);
  }
};

// Projection of a world point into a camera at `camPose` (camera-to-world).
// Returns pixel coordinates and the planar depth; nullopt when behind the
// near clip.
struct Projection {
  double u = 0.0, v = 0.0;
  double planarZ = 0.0;
};
std::optional<Projection> project_point(const CameraModel& cam,
                                        const PoseSE3& camPose,
                                        const Eigen::Vector3d& worldPoint);

// Beacon splats paint identity into the pixels: the red channel carries the
// high id bits inside a reserved band, green the low bits, and blue the
// bilinear footprint weight, which lets a reader recover the projected
// center to a small fraction of a pixel.
constexpr uint8_t kBeaconRedBase = 192;  // band 192..207 -> 12-bit ids
constexpr int kBeaconIdBits = 12;
inline bool is_beacon_pixel(uint8_t r) {
  return r >= kBeaconRedBase && r < kBeaconRedBase + 16;
}
inline uint16_t beacon_id_from_rgb(uint8_t r, uint8_t g) {
  return static_cast<uint16_t>(((r - kBeaconRedBase) << 8) | g);
}

struct FrameRaster {
  Image image;
  std::vector<float> planarDepth;  // row-major, +inf where nothing was hit
};

// Ray-cast the world (ground plane, sky, boxes) and splat beacons with a
// depth test. Exact planar depth per pixel.
FrameRaster render_frame(const World& world, const PoseSE3& camPose,
                         const CameraModel& cam);

// Centroid of one beacon's splat recovered from pixels alone.
struct SplatMeasurement {
  uint16_t id = 0;
  double u = 0.0, v = 0.0;  // weight-averaged center
  int pixels = 0;           // footprint pixels found (4 = fully visible)
};
std::vector<SplatMeasurement> measure_splats(const Image& image);

// Photometric condition applied to finished frames, in order: an occasional
// full-frame overexposure flash (gain on raw values), then a darkening gamma
// curve, then additive Gaussian noise. extraSunny is the identity.
struct ConditionProfile {
  std::string name = "extraSunny";
  double gaussianNoiseSigma = 0.0;  // 8-bit units
  double gammaDarken = 1.0;
  double flashProbability = 0.0;  // per-pair chance of an overexposure flash
  double flashGain = 1.0;

  // Presets: extraSunny (identity), cloudyRain (darkened, noisy),
  // nightThunderstorm (heavily darkened, noisier, lightning flashes).
  static ConditionProfile preset(const std::string& name);
  bool is_identity() const {
    return gaussianNoiseSigma == 0.0 && gammaDarken == 1.0 &&
           (flashProbability == 0.0 || flashGain == 1.0);
  }
};

// Deterministic: the flash decision is drawn per frame pair (both eyes see
// the same lightning) and the noise stream per (seed, frame, side). The
// depth raster is never touched, only pixels.
void apply_condition(Image& image, const ConditionProfile& cond, uint64_t seed,
                     uint64_t frameIndex, CameraSide side);

// One rendered view with its stamps, as handed out by the view service.
struct FrameBuffer {
  FrameRaster raster;
  uint64_t uniTick = 0;
  double inGameTime = 0.0;
  PoseSE3 cameraPose;
  bool stale = false;  // true when served from cache during a native pause
};

// Render entry point that honours the engine's service state: a live engine
// yields a fresh frame of whatever camera the viewport is routed to; a
// natively paused engine has a stalled renderer, so the last committed frame
// comes back unchanged, flagged stale.
class ViewService {
 public:
  FrameBuffer render_view(const SimEngine& engine, const CameraModel& cam);

 private:
  std::optional<FrameBuffer> last_;
};

}  // namespace tefs
