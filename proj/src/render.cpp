#include "tefs/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "tefs/rng.hpp"

namespace tefs {

namespace {

constexpr uint8_t kSky[3] = {150, 160, 170};
constexpr uint8_t kGroundA[3] = {90, 96, 84};
constexpr uint8_t kGroundB[3] = {77, 82, 71};  // kGroundA dimmed by 0.85
constexpr double kCheckerSizeM = 2.0;

}  // namespace

double CameraModel::fx() const {
  return (0.5 * width) / std::tan(0.5 * deg2rad(hfovDeg));
}

double CameraModel::fy() const {
  return (0.5 * height) / std::tan(0.5 * deg2rad(vfovDeg));
}

void CameraModel::pixel_to_tangents(double u, double v, double& xTan,
                                    double& yTan) const {
  xTan = (u - cx()) / fx();
  yTan = (v - cy()) / fy();
}

std::optional<Projection> project_point(const CameraModel& cam,
                                        const PoseSE3& camPose,
                                        const Eigen::Vector3d& worldPoint) {
  const Eigen::Vector3d p =
      camPose.rotation.transpose() * (worldPoint - camPose.translation);
  if (p.z() < cam.clips.nearClip) return std::nullopt;
  Projection prj;
  prj.planarZ = p.z();
  prj.u = cam.cx() + cam.fx() * p.x() / p.z();
  prj.v = cam.cy() + cam.fy() * p.y() / p.z();
  return prj;
}

namespace {

struct Aabb {
  Eigen::Vector3d lo, hi;
};

// Distance along the ray to the box entry, measured in planar depth because
// the direction vector has unit camera-z.
bool intersect_aabb(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                    const Aabb& b, double& tHit) {
  double tmin = -std::numeric_limits<double>::infinity();
  double tmax = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d[a]) < 1e-15) {
      if (o[a] < b.lo[a] || o[a] > b.hi[a]) return false;
      continue;
    }
    double t1 = (b.lo[a] - o[a]) / d[a];
    double t2 = (b.hi[a] - o[a]) / d[a];
    if (t1 > t2) std::swap(t1, t2);
    tmin = std::max(tmin, t1);
    tmax = std::min(tmax, t2);
    if (tmin > tmax) return false;
  }
  if (tmax < 0.0) return false;
  tHit = tmin;
  return tmin > 0.0;
}

}  // namespace

FrameRaster render_frame(const World& world, const PoseSE3& camPose,
                         const CameraModel& cam) {
  FrameRaster out;
  out.image = Image(cam.width, cam.height);
  out.planarDepth.assign(static_cast<size_t>(cam.width) * cam.height,
                         std::numeric_limits<float>::infinity());

  std::vector<Aabb> boxes(world.boxes.size());
  for (size_t i = 0; i < world.boxes.size(); ++i) {
    const Eigen::Vector3d c = world.box_position(i);
    boxes[i] = {c - world.boxes[i].halfExtents, c + world.boxes[i].halfExtents};
  }

  const Eigen::Vector3d origin = camPose.translation;
  const double nearClip = cam.clips.nearClip;
  const double farClip = cam.clips.farClip;

  for (int iy = 0; iy < cam.height; ++iy) {
    for (int ix = 0; ix < cam.width; ++ix) {
      double xt, yt;
      cam.pixel_to_tangents(ix + 0.5, iy + 0.5, xt, yt);
      // Unit camera-z direction: ray parameter equals planar depth.
      const Eigen::Vector3d dir =
          camPose.rotation * Eigen::Vector3d(xt, yt, 1.0);

      double bestT = std::numeric_limits<double>::infinity();
      const uint8_t* color = kSky;

      if (dir.z() < -1e-12) {
        const double t = -origin.z() / dir.z();
        if (t >= nearClip && t <= farClip) {
          bestT = t;
          const Eigen::Vector3d hit = origin + t * dir;
          const long px = static_cast<long>(
              std::floor(hit.x() / kCheckerSizeM));
          const long py = static_cast<long>(
              std::floor(hit.y() / kCheckerSizeM));
          color = ((px + py) & 1) ? kGroundB : kGroundA;
        }
      }
      for (size_t i = 0; i < boxes.size(); ++i) {
        double t;
        if (intersect_aabb(origin, dir, boxes[i], t) && t >= nearClip &&
            t <= farClip && t < bestT) {
          bestT = t;
          color = world.boxes[i].color.data();
        }
      }

      uint8_t* px = out.image.px(ix, iy);
      px[0] = color[0];
      px[1] = color[1];
      px[2] = color[2];
      if (std::isfinite(bestT)) {
        out.planarDepth[static_cast<size_t>(iy) * cam.width + ix] =
            static_cast<float>(bestT);
      }
    }
  }

  // Beacon splats, depth-tested against the raster so scene geometry
  // occludes them per pixel.
  for (const Beacon& b : world.beacons) {
    const auto prj = project_point(cam, camPose, b.position);
    if (!prj || prj->planarZ > farClip) continue;
    const double uc = prj->u - 0.5;  // into pixel-index space
    const double vc = prj->v - 0.5;
    const int ix = static_cast<int>(std::floor(uc));
    const int iy = static_cast<int>(std::floor(vc));
    const double fu = uc - ix;
    const double fv = vc - iy;
    if (ix < 0 || iy < 0 || ix + 1 >= cam.width || iy + 1 >= cam.height) {
      continue;
    }
    const double w[4] = {(1 - fu) * (1 - fv), fu * (1 - fv), (1 - fu) * fv,
                         fu * fv};
    const int px4[4] = {ix, ix + 1, ix, ix + 1};
    const int py4[4] = {iy, iy, iy + 1, iy + 1};
    for (int k = 0; k < 4; ++k) {
      const uint8_t wq = static_cast<uint8_t>(
          std::lround(255.0 * std::clamp(w[k], 0.0, 1.0)));
      if (wq == 0) continue;
      const size_t idx =
          static_cast<size_t>(py4[k]) * cam.width + px4[k];
      if (prj->planarZ >= out.planarDepth[idx]) continue;  // occluded
      uint8_t* px = out.image.px(px4[k], py4[k]);
      px[0] = static_cast<uint8_t>(kBeaconRedBase + (b.id >> 8));
      px[1] = static_cast<uint8_t>(b.id & 0xff);
      px[2] = wq;
      out.planarDepth[idx] = static_cast<float>(prj->planarZ);
    }
  }
  return out;
}

std::vector<SplatMeasurement> measure_splats(const Image& image) {
  struct Acc {
    double sw = 0, su = 0, sv = 0;
    int n = 0;
  };
  std::map<uint16_t, Acc> accs;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const uint8_t* px = image.px(x, y);
      if (!is_beacon_pixel(px[0])) continue;
      const double w = px[2] / 255.0;
      if (w <= 0.0) continue;
      Acc& a = accs[beacon_id_from_rgb(px[0], px[1])];
      a.sw += w;
      a.su += w * (x + 0.5);
      a.sv += w * (y + 0.5);
      a.n += 1;
    }
  }
  std::vector<SplatMeasurement> out;
  out.reserve(accs.size());
  for (const auto& [id, a] : accs) {
    if (a.sw <= 0.0) continue;
    out.push_back({id, a.su / a.sw, a.sv / a.sw, a.n});
  }
  return out;
}

ConditionProfile ConditionProfile::preset(const std::string& name) {
  // Short command-line aliases map onto the canonical profile names, which
  // are the only ones that appear in manifests.
  std::string canon = name;
  if (name == "sunny") canon = "extraSunny";
  if (name == "rain") canon = "cloudyRain";
  if (name == "storm") canon = "nightThunderstorm";
  ConditionProfile p;
  p.name = canon;
  if (canon == "extraSunny") return p;
  if (canon == "cloudyRain") {
    p.gaussianNoiseSigma = 2.0;
    p.gammaDarken = 1.6;
    return p;
  }
  if (canon == "nightThunderstorm") {
    // Heavy darkening and noise, with occasional lightning frames whose gain
    // saturates the palette (every albedo is >= 64, so 4x reaches 255).
    p.gaussianNoiseSigma = 4.0;
    p.gammaDarken = 2.2;
    p.flashProbability = 0.05;
    p.flashGain = 4.0;
    return p;
  }
  throw std::invalid_argument(
      "unknown condition profile '" + name +
      "' (expected sunny, rain, or storm, or a canonical profile name)");
}

void apply_condition(Image& image, const ConditionProfile& cond, uint64_t seed,
                     uint64_t frameIndex, CameraSide side) {
  if (cond.is_identity()) return;
  // Lightning is a world event: one draw per frame pair, shared by the eyes.
  double gain = 1.0;
  if (cond.flashProbability > 0.0) {
    Rng flashRng =
        Rng::stream(seed, 0x464c5348ULL /* flash stream */, frameIndex);
    if (flashRng.uniform01() < cond.flashProbability) gain = cond.flashGain;
  }
  uint8_t lut[256];
  for (int v = 0; v < 256; ++v) {
    const double flashed = std::min(255.0, v * gain);
    const double toned = 255.0 * std::pow(flashed / 255.0, cond.gammaDarken);
    lut[v] = static_cast<uint8_t>(std::clamp<long>(std::lround(toned), 0, 255));
  }
  if (cond.gaussianNoiseSigma <= 0.0) {
    for (uint8_t& v : image.rgb) v = lut[v];
    return;
  }
  Rng rng = Rng::stream(seed, 0x434f4e44ULL /* condition stream */, frameIndex,
                        static_cast<uint64_t>(side));
  for (uint8_t& v : image.rgb) {
    const double flashed = std::min(255.0, v * gain);
    const double toned = 255.0 * std::pow(flashed / 255.0, cond.gammaDarken);
    const double noisy = toned + cond.gaussianNoiseSigma * rng.gaussian();
    v = static_cast<uint8_t>(std::clamp<long>(std::lround(noisy), 0, 255));
  }
}

FrameBuffer ViewService::render_view(const SimEngine& engine,
                                     const CameraModel& cam) {
  if (engine.native_paused()) {
    FrameBuffer fb = last_ ? *last_ : FrameBuffer{};
    fb.stale = true;
    return fb;
  }
  FrameBuffer fb;
  fb.uniTick = engine.uni_tick();
  fb.inGameTime = engine.world().worldTime;
  fb.cameraPose = engine.camera_pose(engine.active_side());
  fb.raster = render_frame(engine.world(), fb.cameraPose, cam);
  fb.stale = false;
  last_ = fb;
  return fb;
}

}  // namespace tefs
