#include "tefs/vo_baseline.hpp"

#include <map>

#include "tefs/errors.hpp"
#include "tefs/rng.hpp"

namespace tefs {

std::vector<TriangulatedPoint> triangulate(
    const std::vector<FeatureRecord>& features, const CalibInfo& calib,
    double minDisparityPx) {
  std::vector<TriangulatedPoint> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    const double d = f.uL - f.uR;
    if (!(d > minDisparityPx)) continue;
    const double z = calib.fx * calib.baselineM / d;
    TriangulatedPoint p;
    p.id = f.id;
    p.pCam = Eigen::Vector3d((f.uL - calib.cx) * z / calib.fx,
                             (f.vL - calib.cy) * z / calib.fy, z);
    out.push_back(p);
  }
  return out;
}

std::optional<PoseSE3> estimate_motion(
    const std::vector<TriangulatedPoint>& prev,
    const std::vector<TriangulatedPoint>& curr, size_t minCommon) {
  std::map<uint16_t, const TriangulatedPoint*> prevById;
  for (const auto& p : prev) prevById[p.id] = &p;
  std::vector<Eigen::Vector3d> src, dst;  // src = current, dst = previous
  for (const auto& c : curr) {
    auto it = prevById.find(c.id);
    if (it == prevById.end()) continue;
    src.push_back(c.pCam);
    dst.push_back(it->second->pCam);
  }
  if (src.size() < std::max<size_t>(minCommon, 3)) return std::nullopt;
  try {
    const Alignment a = umeyama_align(src, dst, /*withScale=*/false);
    PoseSE3 t;
    t.rotation = a.rotation;
    t.translation = a.translation;
    return t;
  } catch (const DegenerateConfiguration&) {
    return std::nullopt;
  }
}

void perturb_features(std::vector<FeatureRecord>& features, double sigmaPx,
                      uint64_t seed, uint64_t frameIndex) {
  if (sigmaPx <= 0.0) return;
  Rng rng = Rng::stream(seed, 0x564f4e53ULL /* vo noise stream */, frameIndex);
  for (auto& f : features) {
    f.uL += sigmaPx * rng.gaussian();
    f.vL += sigmaPx * rng.gaussian();
    f.uR += sigmaPx * rng.gaussian();
    f.vR += sigmaPx * rng.gaussian();
  }
}

VoResult run_vo(const std::string& datasetDir, const VoOptions& opts) {
  const CalibInfo calib = read_calib(datasetDir + "/calib.txt");
  const Trajectory ref = Trajectory::load(datasetDir + "/poses.txt",
                                          datasetDir + "/times.txt");
  if (ref.size() == 0) throw IoError("dataset has no reference poses");

  VoResult result;
  result.frames = ref.size();
  result.trajectory.times = ref.times;
  result.trajectory.poses.reserve(ref.size());
  result.trajectory.poses.push_back(ref.poses.front());

  std::vector<TriangulatedPoint> prevPts;
  {
    auto feats = read_features(datasetDir + "/features/" + frame_name(0) +
                               ".txt");
    perturb_features(feats, opts.noiseSigmaPx, opts.seed, 0);
    prevPts = triangulate(feats, calib);
  }

  for (size_t i = 1; i < ref.size(); ++i) {
    auto feats = read_features(datasetDir + "/features/" +
                               frame_name(static_cast<int>(i)) + ".txt");
    perturb_features(feats, opts.noiseSigmaPx, opts.seed, i);
    auto currPts = triangulate(feats, calib);

    const auto motion =
        estimate_motion(prevPts, currPts, opts.minCommonPoints);
    if (motion) {
      result.trajectory.poses.push_back(result.trajectory.poses.back() *
                                        *motion);
    } else {
      // Hole: carry the previous pose so the trajectory stays associable.
      result.trajectory.poses.push_back(result.trajectory.poses.back());
      result.holes += 1;
      result.partial = true;
    }
    prevPts = std::move(currPts);
  }
  return result;
}

}  // namespace tefs
