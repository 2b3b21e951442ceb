#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "tefs/geometry.hpp"

namespace tefs {

struct Trajectory {
  std::vector<double> times;
  std::vector<PoseSE3> poses;

  size_t size() const { return poses.size(); }
  // Sum of consecutive translation distances (0 for an empty or single-pose
  // trajectory; use traj_length when that should be an error).
  double path_length() const;

  static Trajectory load(const std::string& posesPath,
                         const std::string& timesPath);
  void save(const std::string& posesPath, const std::string& timesPath) const;
};

// Path length as a metric: requires at least 2 poses.
double traj_length(const Trajectory& traj);

// Similarity (or rigid, when withScale is false) transform mapping src onto
// dst in the least-squares sense: dst ~= scale * rotation * src + translation.
struct Alignment {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double scale = 1.0;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const {
    return scale * (rotation * p) + translation;
  }
};

// Throws DegenerateConfiguration for fewer than 3 points or a point spread
// whose second singular value vanishes (collinear or coincident sets).
Alignment umeyama_align(const std::vector<Eigen::Vector3d>& src,
                        const std::vector<Eigen::Vector3d>& dst,
                        bool withScale);

// Index pairs (est, gt) associated by nearest timestamp within maxDt.
std::vector<std::pair<size_t, size_t>> associate(
    const std::vector<double>& estTimes, const std::vector<double>& gtTimes,
    double maxDt);

struct ErrorStats {
  double rmse = 0, mean = 0, median = 0, min = 0, max = 0;
  size_t count = 0;

  static ErrorStats of(std::vector<double> values);
};

// How the estimate is registered to the reference before measuring
// absolute error.
enum class AlignMode { None, Rigid, Similarity };
const char* to_string(AlignMode m);
AlignMode align_mode_from_string(const std::string& name);

struct ApeResult {
  ErrorStats translation;  // metres, after alignment
  double gtPathLength = 0;
  double rmsePercent = 0;  // translation.rmse / gtPathLength * 100
  Alignment alignment;
  size_t matched = 0;
};

// Absolute pose error of est against gt after the chosen least-squares
// alignment (identity for AlignMode::None).
ApeResult ape(const Trajectory& est, const Trajectory& gt, AlignMode align,
              double maxDt);

struct RpeResult {
  ErrorStats translationM;
  ErrorStats rotationDeg;
  size_t pairCount = 0;
};

// Relative pose error over a fixed frame delta, or over a fixed travelled
// distance along the reference.
RpeResult rpe_frames(const Trajectory& est, const Trajectory& gt,
                     size_t deltaFrames, double maxDt);
RpeResult rpe_distance(const Trajectory& est, const Trajectory& gt,
                       double deltaMeters, double maxDt);

// est with its translations multiplied by length(gt) / length(est), so the
// corrected path length equals the reference's. Rotations and timestamps are
// untouched. Errors when either length is zero.
Trajectory scale_correct(const Trajectory& est, const Trajectory& gt);

}  // namespace tefs
