#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tefs/capture.hpp"
#include "tefs/traj_eval.hpp"

namespace tefs {

struct EvaluationReport {
  ApeResult apeNone;      // raw, no alignment
  ApeResult apeRigid;     // aligned without scale
  ApeResult apeSim;       // aligned with scale
  RpeResult rpeOneFrame;  // consecutive pairs
  bool rpeDistanceValid = false;
  RpeResult rpeDistance100m;
  double estPathLength = 0;
  double gtPathLength = 0;
  size_t estPoses = 0;
  size_t gtPoses = 0;
};

// Full odometry evaluation of an estimate against a reference. maxDt bounds
// the timestamp association window.
EvaluationReport evaluate_trajectories(const Trajectory& est,
                                       const Trajectory& gt, double maxDt);

std::string evaluation_text(const EvaluationReport& r);
std::string evaluation_json(const EvaluationReport& r);

// Self-checks of the capture protocol semantics, each reported as a named
// pass/fail with a one-line detail. scratchDir receives small temporary
// datasets (a few KB).
struct ValidationCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_pass() const;
};

ValidationReport run_protocol_validation(const std::string& scratchDir,
                                         uint64_t seed);
std::string validation_text(const ValidationReport& r);

// Built-in end-to-end validation scenario: a wrapped rounded-rectangle loop
// (~255 m per lap) driven at 10 km/h for roughly 230 m of trajectory. Used
// when no scenario file is given.
ScenarioConfig default_validation_scenario();

}  // namespace tefs
