#include "tefs/depth.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "tefs/errors.hpp"

namespace tefs {

const char* to_string(DepthSemantics s) {
  switch (s) {
    case DepthSemantics::PlanarMeters: return "planarMeters";
    case DepthSemantics::SimNativeNdc: return "simNativeNdc";
    case DepthSemantics::DraftEq2: return "draftEq2";
    case DepthSemantics::CameraReadyInline: return "cameraReadyInline";
    case DepthSemantics::RayMeters: return "rayMeters";
  }
  return "unknown";
}

DepthSemantics depth_semantics_from_string(const char* name) {
  const std::string n(name);
  if (n == "planarMeters") return DepthSemantics::PlanarMeters;
  if (n == "simNativeNdc") return DepthSemantics::SimNativeNdc;
  if (n == "draftEq2") return DepthSemantics::DraftEq2;
  if (n == "cameraReadyInline") return DepthSemantics::CameraReadyInline;
  if (n == "rayMeters") return DepthSemantics::RayMeters;
  throw std::invalid_argument("unknown depth semantics '" + n + "'");
}

namespace {

void check_clips(const DepthClips& c) {
  if (!(c.nearClip > 0.0) || !(c.farClip > c.nearClip)) {
    throw std::invalid_argument("depth clips must satisfy 0 < near < far");
  }
}

}  // namespace

double ndc_from_planar(double planarZ, const DepthClips& c) {
  check_clips(c);
  if (!(planarZ > 0.0)) {
    throw std::invalid_argument("planar depth must be positive");
  }
  return c.farClip * (planarZ - c.nearClip) /
         (planarZ * (c.farClip - c.nearClip));
}

double planar_from_ndc(double ndc, const DepthClips& c) {
  check_clips(c);
  const double denom = c.farClip - ndc * (c.farClip - c.nearClip);
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return c.farClip * c.nearClip / denom;
}

double ray_factor(double xTan, double yTan) {
  return std::sqrt(1.0 + xTan * xTan + yTan * yTan);
}

double map_uv(double xTan, double yTan, const DepthClips& c) {
  check_clips(c);
  return c.nearClip * ray_factor(xTan, yTan);
}

double encode_depth(DepthSemantics sem, double planarZ, double xTan,
                    double yTan, const DepthClips& c) {
  check_clips(c);
  if (!(planarZ > 0.0)) {
    throw std::invalid_argument("planar depth must be positive");
  }
  const double rf = ray_factor(xTan, yTan);
  const double m = c.nearClip * rf;
  switch (sem) {
    case DepthSemantics::PlanarMeters:
      return planarZ;
    case DepthSemantics::RayMeters:
      return planarZ * rf;
    case DepthSemantics::SimNativeNdc:
      return ndc_from_planar(planarZ, c);
    case DepthSemantics::DraftEq2:
      // Inverse of depth = m / (1 - v * near / (2 far)), depth measured along
      // the ray. Note m / depth == near / planar.
      return (1.0 - c.nearClip / planarZ) * (2.0 * c.farClip / c.nearClip);
    case DepthSemantics::CameraReadyInline:
      // Inverse of depth = m / (v + m * near / (2 far)).
      return c.nearClip / planarZ - m * c.nearClip / (2.0 * c.farClip);
  }
  throw std::invalid_argument("unknown depth semantics");
}

DepthDecode decode_depth(DepthSemantics sem, double stored, double xTan,
                         double yTan, const DepthClips& c) {
  check_clips(c);
  const double rf = ray_factor(xTan, yTan);
  const double m = c.nearClip * rf;
  double ray = std::numeric_limits<double>::infinity();
  switch (sem) {
    case DepthSemantics::PlanarMeters:
      ray = stored * rf;
      break;
    case DepthSemantics::RayMeters:
      ray = stored;
      break;
    case DepthSemantics::SimNativeNdc: {
      const double planar = planar_from_ndc(stored, c);
      ray = planar * rf;
      break;
    }
    case DepthSemantics::DraftEq2: {
      const double denom = 1.0 - stored * c.nearClip / (2.0 * c.farClip);
      if (denom > 0.0) ray = m / denom;
      break;
    }
    case DepthSemantics::CameraReadyInline: {
      const double denom = stored + m * c.nearClip / (2.0 * c.farClip);
      if (denom > 0.0) ray = m / denom;
      break;
    }
  }
  DepthDecode out;
  // An encoding is only trusted where the geometry it implies sits between
  // the clip planes; anything else is reported as an open-range sentinel.
  const double planar = ray / rf;
  const double tol = 1e-6;
  if (std::isfinite(ray) && planar >= c.nearClip * (1.0 - tol) &&
      planar <= c.farClip * (1.0 + tol)) {
    out.meters = ray;
    out.valid = true;
  }
  return out;
}

}  // namespace tefs
