#pragma once

#include <cstdint>
#include <limits>

namespace tefs {

// On-disk depth encodings. PlanarMeters and RayMeters are plain metric
// buffers; the other three are the encodings a capture can store, each with
// an exact algebraic decode back to metres.
enum class DepthSemantics : uint32_t {
  PlanarMeters = 0,       // z along the optical axis
  SimNativeNdc = 1,       // projective depth in [0,1], standard sim output
  DraftEq2 = 2,           // early published mapping (limited validity)
  CameraReadyInline = 3,  // revised published mapping
  RayMeters = 4,          // Euclidean distance along the pixel ray
};

const char* to_string(DepthSemantics s);
DepthSemantics depth_semantics_from_string(const char* name);

struct DepthClips {
  double nearClip = 0.01;
  double farClip = 600.0;
};

// Projective depth of a planar z, and its inverse. ndc is 0 at the near clip
// and 1 at the far clip.
double ndc_from_planar(double planarZ, const DepthClips& clips);
double planar_from_ndc(double ndc, const DepthClips& clips);

// Per-pixel ray-length factor: a point at planar depth z seen through a pixel
// whose ray has tangents (x, y) lies at Euclidean distance z * sqrt(1+x²+y²).
// map_uv is that factor scaled to the near plane.
double ray_factor(double xTan, double yTan);
double map_uv(double xTan, double yTan, const DepthClips& clips);

struct DepthDecode {
  double meters = std::numeric_limits<double>::infinity();  // ray distance
  bool valid = false;  // implied planar depth fell inside [near, far]
};

// stored-value <-> ray-distance conversions for each encoding.
double encode_depth(DepthSemantics sem, double planarZ, double xTan,
                    double yTan, const DepthClips& clips);
DepthDecode decode_depth(DepthSemantics sem, double stored, double xTan,
                         double yTan, const DepthClips& clips);

}  // namespace tefs
