#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tefs/dataset_io.hpp"
#include "tefs/geometry.hpp"
#include "tefs/traj_eval.hpp"

namespace tefs {

struct TriangulatedPoint {
  uint16_t id = 0;
  Eigen::Vector3d pCam{0, 0, 0};  // left-camera frame
};

// Classical stereo triangulation: Z = fx * baseline / disparity, with the
// disparity read straight off the correspondence (so any temporal skew
// between the eyes lands directly in the depth). Non-positive disparities
// are rejected.
std::vector<TriangulatedPoint> triangulate(
    const std::vector<FeatureRecord>& features, const CalibInfo& calib,
    double minDisparityPx = 1e-9);

// Rigid motion from matched 3D points of consecutive frames: returns T with
// p_prev = T * p_curr, or nullopt when fewer than minCommon ids match or the
// geometry is degenerate.
std::optional<PoseSE3> estimate_motion(
    const std::vector<TriangulatedPoint>& prev,
    const std::vector<TriangulatedPoint>& curr, size_t minCommon = 3);

struct VoOptions {
  double noiseSigmaPx = 0.0;  // Gaussian noise added to every pixel coordinate
  uint64_t seed = 0;
  size_t minCommonPoints = 3;
};

struct VoResult {
  Trajectory trajectory;  // left-camera poses, anchored at the reference start
  size_t frames = 0;
  size_t holes = 0;  // frames whose motion could not be estimated
  bool partial = false;
};

// Feature-based stereo odometry over a captured dataset directory. The first
// pose is taken from the dataset's reference so absolute errors are
// attributable to the chained motion alone.
VoResult run_vo(const std::string& datasetDir, const VoOptions& opts);

// Noise injection used by run_vo, exposed for analysis: perturbs every
// coordinate with N(0, sigma^2) from a stream derived per frame.
void perturb_features(std::vector<FeatureRecord>& features, double sigmaPx,
                      uint64_t seed, uint64_t frameIndex);

}  // namespace tefs
