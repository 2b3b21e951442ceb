#include "tefs/traj_eval.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "tefs/dataset_io.hpp"
#include "tefs/errors.hpp"

namespace tefs {

double Trajectory::path_length() const {
  double len = 0.0;
  for (size_t i = 1; i < poses.size(); ++i) {
    len += (poses[i].translation - poses[i - 1].translation).norm();
  }
  return len;
}

double traj_length(const Trajectory& traj) {
  if (traj.size() < 2) {
    throw std::invalid_argument(
        "trajectory length needs at least 2 poses, got " +
        std::to_string(traj.size()));
  }
  return traj.path_length();
}

const char* to_string(AlignMode m) {
  switch (m) {
    case AlignMode::None: return "none";
    case AlignMode::Rigid: return "rigid";
    case AlignMode::Similarity: return "similarity";
  }
  return "unknown";
}

AlignMode align_mode_from_string(const std::string& name) {
  if (name == "none") return AlignMode::None;
  if (name == "rigid") return AlignMode::Rigid;
  if (name == "similarity") return AlignMode::Similarity;
  throw std::invalid_argument("unknown alignment mode '" + name +
                              "' (expected none, rigid, or similarity)");
}

Trajectory Trajectory::load(const std::string& posesPath,
                            const std::string& timesPath) {
  Trajectory t;
  t.poses = read_poses_kitti(posesPath);
  t.times = read_scalar_column(timesPath);
  if (t.poses.size() != t.times.size()) {
    throw IoError("trajectory has " + std::to_string(t.poses.size()) +
                  " poses but " + std::to_string(t.times.size()) +
                  " timestamps");
  }
  return t;
}

void Trajectory::save(const std::string& posesPath,
                      const std::string& timesPath) const {
  write_poses_kitti(posesPath, poses);
  write_scalar_column(timesPath, times);
}

Alignment umeyama_align(const std::vector<Eigen::Vector3d>& src,
                        const std::vector<Eigen::Vector3d>& dst,
                        bool withScale) {
  if (src.size() != dst.size()) {
    throw std::invalid_argument("point sets differ in size");
  }
  const size_t n = src.size();
  if (n < 3) {
    throw DegenerateConfiguration(
        "alignment needs at least 3 point pairs, got " + std::to_string(n));
  }
  Eigen::Matrix3Xd s(3, n), d(3, n);
  for (size_t i = 0; i < n; ++i) {
    s.col(i) = src[i];
    d.col(i) = dst[i];
  }
  // Spread check: a covariance with a vanishing second singular value means
  // the sets are coincident or collinear and the rotation is not observable.
  const Eigen::Vector3d sMean = s.rowwise().mean();
  const Eigen::Vector3d dMean = d.rowwise().mean();
  const Eigen::Matrix3d cov = (d.colwise() - dMean) *
                              (s.colwise() - sMean).transpose() /
                              static_cast<double>(n);
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov);
  const Eigen::Vector3d sv = svd.singularValues();
  if (sv(1) < 1e-9 * std::max(sv(0), 1.0)) {
    throw DegenerateConfiguration(
        "point spread is rank-deficient; rotation is not observable");
  }
  const Eigen::Matrix4d T = Eigen::umeyama(s, d, withScale);
  Alignment a;
  const double scale = T.block<3, 3>(0, 0).colwise().norm().mean();
  a.scale = withScale ? scale : 1.0;
  a.rotation = T.block<3, 3>(0, 0) / a.scale;
  a.translation = T.block<3, 1>(0, 3);
  return a;
}

std::vector<std::pair<size_t, size_t>> associate(
    const std::vector<double>& estTimes, const std::vector<double>& gtTimes,
    double maxDt) {
  std::vector<std::pair<size_t, size_t>> out;
  if (gtTimes.empty()) return out;
  for (size_t i = 0; i < estTimes.size(); ++i) {
    const auto it =
        std::lower_bound(gtTimes.begin(), gtTimes.end(), estTimes[i]);
    size_t j = static_cast<size_t>(it - gtTimes.begin());
    if (j == gtTimes.size()) {
      j = gtTimes.size() - 1;
    } else if (j > 0 && estTimes[i] - gtTimes[j - 1] < gtTimes[j] - estTimes[i]) {
      j = j - 1;
    }
    if (std::abs(estTimes[i] - gtTimes[j]) <= maxDt) out.emplace_back(i, j);
  }
  return out;
}

ErrorStats ErrorStats::of(std::vector<double> values) {
  ErrorStats st;
  st.count = values.size();
  if (values.empty()) return st;
  double sum = 0, sumSq = 0;
  st.min = values.front();
  st.max = values.front();
  for (double v : values) {
    sum += v;
    sumSq += v * v;
    st.min = std::min(st.min, v);
    st.max = std::max(st.max, v);
  }
  st.mean = sum / static_cast<double>(values.size());
  st.rmse = std::sqrt(sumSq / static_cast<double>(values.size()));
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  st.median = (n % 2 == 1) ? values[n / 2]
                           : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  return st;
}

ApeResult ape(const Trajectory& est, const Trajectory& gt, AlignMode align,
              double maxDt) {
  const auto matches = associate(est.times, gt.times, maxDt);
  const size_t minMatches = align == AlignMode::None ? 1 : 3;
  if (matches.size() < minMatches) {
    throw DegenerateConfiguration(
        "too few associated poses for absolute error: " +
        std::to_string(matches.size()));
  }
  std::vector<Eigen::Vector3d> src, dst;
  src.reserve(matches.size());
  dst.reserve(matches.size());
  for (const auto& [i, j] : matches) {
    src.push_back(est.poses[i].translation);
    dst.push_back(gt.poses[j].translation);
  }
  ApeResult r;
  if (align != AlignMode::None) {
    r.alignment = umeyama_align(src, dst, align == AlignMode::Similarity);
  }
  std::vector<double> errs;
  errs.reserve(matches.size());
  for (size_t k = 0; k < matches.size(); ++k) {
    errs.push_back((dst[k] - r.alignment.apply(src[k])).norm());
  }
  r.translation = ErrorStats::of(std::move(errs));
  double len = 0.0;
  for (size_t k = 1; k < dst.size(); ++k) len += (dst[k] - dst[k - 1]).norm();
  r.gtPathLength = len;
  r.rmsePercent = len > 0 ? r.translation.rmse / len * 100.0 : 0.0;
  r.matched = matches.size();
  return r;
}

namespace {

RpeResult rpe_over_pairs(
    const Trajectory& est, const Trajectory& gt,
    const std::vector<std::pair<size_t, size_t>>& matches,
    const std::vector<std::pair<size_t, size_t>>& pairIdx) {
  std::vector<double> tErr, rErr;
  tErr.reserve(pairIdx.size());
  rErr.reserve(pairIdx.size());
  for (const auto& [a, b] : pairIdx) {
    const auto& [ia, ja] = matches[a];
    const auto& [ib, jb] = matches[b];
    const PoseSE3 relEst = est.poses[ia].inverse() * est.poses[ib];
    const PoseSE3 relGt = gt.poses[ja].inverse() * gt.poses[jb];
    tErr.push_back((relEst.translation - relGt.translation).norm());
    rErr.push_back(rotation_angle_deg(relEst.rotation.transpose() *
                                      relGt.rotation));
  }
  RpeResult r;
  r.translationM = ErrorStats::of(std::move(tErr));
  r.rotationDeg = ErrorStats::of(std::move(rErr));
  r.pairCount = pairIdx.size();
  return r;
}

}  // namespace

RpeResult rpe_frames(const Trajectory& est, const Trajectory& gt,
                     size_t deltaFrames, double maxDt) {
  if (deltaFrames == 0) throw std::invalid_argument("frame delta must be > 0");
  const auto matches = associate(est.times, gt.times, maxDt);
  std::vector<std::pair<size_t, size_t>> pairIdx;
  for (size_t a = 0; a + deltaFrames < matches.size(); ++a) {
    pairIdx.emplace_back(a, a + deltaFrames);
  }
  if (pairIdx.empty()) {
    throw DegenerateConfiguration("no pose pairs at the requested delta");
  }
  return rpe_over_pairs(est, gt, matches, pairIdx);
}

RpeResult rpe_distance(const Trajectory& est, const Trajectory& gt,
                       double deltaMeters, double maxDt) {
  if (deltaMeters <= 0) {
    throw std::invalid_argument("distance delta must be > 0");
  }
  const auto matches = associate(est.times, gt.times, maxDt);
  // Cumulative distance along the matched reference poses.
  std::vector<double> cum(matches.size(), 0.0);
  for (size_t k = 1; k < matches.size(); ++k) {
    cum[k] = cum[k - 1] + (gt.poses[matches[k].second].translation -
                           gt.poses[matches[k - 1].second].translation)
                              .norm();
  }
  std::vector<std::pair<size_t, size_t>> pairIdx;
  size_t b = 0;
  for (size_t a = 0; a < matches.size(); ++a) {
    if (b < a + 1) b = a + 1;
    while (b < matches.size() && cum[b] - cum[a] < deltaMeters) ++b;
    if (b == matches.size()) break;
    pairIdx.emplace_back(a, b);
  }
  if (pairIdx.empty()) {
    throw DegenerateConfiguration(
        "reference trajectory is shorter than the distance delta");
  }
  return rpe_over_pairs(est, gt, matches, pairIdx);
}

Trajectory scale_correct(const Trajectory& est, const Trajectory& gt) {
  const double lenEst = est.path_length();
  const double lenGt = gt.path_length();
  if (lenEst <= 0.0) {
    throw DegenerateConfiguration(
        "estimated trajectory has zero length; scale is undefined");
  }
  if (lenGt <= 0.0) {
    throw DegenerateConfiguration(
        "reference trajectory has zero length; scale is undefined");
  }
  const double ratio = lenGt / lenEst;
  Trajectory out = est;
  for (PoseSE3& p : out.poses) p.translation *= ratio;
  return out;
}

}  // namespace tefs
