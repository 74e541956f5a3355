// Copyright 2026 The drivecue Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "drivecue/kinematics.hpp"

#include <cmath>
#include <string>

#include "drivecue/error.hpp"

namespace drivecue::kinematics {

Trajectory integrate(const parser::SpeedCurvatureSequence& seq, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::kInvalidArgument, "integrate: dt must be positive");
  }
  if (seq.speeds.size() != seq.curvatures.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "integrate: speed and curvature lists differ in length");
  }
  Trajectory out;
  out.frame = Frame::kEgo;
  out.points.reserve(seq.speeds.size());
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  for (std::size_t t = 0; t < seq.speeds.size(); ++t) {
    const double v = seq.speeds[t];
    const double k = seq.curvatures[t];
    const double ds = v * dt;
    if (std::fabs(k) < kStraightCurvature) {
      x += ds * std::cos(theta);
      y += ds * std::sin(theta);
    } else {
      // Chord of the arc; avoids the cancellation in sin(next) - sin(theta).
      const double half = 0.5 * ds * k;
      const double chord = 2.0 * std::sin(half) / k;
      x += chord * std::cos(theta + half);
      y += chord * std::sin(theta + half);
      theta += ds * k;
    }
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(theta)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "integrate: non-finite state at step " + std::to_string(t + 1));
    }
    out.points.push_back({x, y});
  }
  return out;
}

Trajectory to_global(const Trajectory& ego, const Pose& start) {
  const double c = std::cos(start.heading);
  const double s = std::sin(start.heading);
  Trajectory out;
  out.frame = Frame::kGlobal;
  out.points.reserve(ego.points.size());
  for (const Vec2& p : ego.points) {
    out.points.push_back({start.position.x + c * p.x - s * p.y,
                          start.position.y + s * p.x + c * p.y});
  }
  return out;
}

Pose initial_pose_from_history(std::span<const dataset::EgoState> history) {
  if (history.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ego history is empty");
  }
  const auto& last = history.back();
  return {last.position, normalize_angle(last.heading)};
}

}  // namespace drivecue::kinematics
