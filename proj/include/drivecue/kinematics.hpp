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

#pragma once

#include <span>
#include <vector>

#include "drivecue/dataset.hpp"
#include "drivecue/geometry.hpp"
#include "drivecue/parser.hpp"

namespace drivecue::kinematics {

// Below this |curvature| a step is integrated as a straight segment.
inline constexpr double kStraightCurvature = 1e-9;

struct Pose {
  Vec2 position;
  double heading = 0.0;  // radians, (-pi, pi]
};

enum class Frame { kEgo, kGlobal };

struct Trajectory {
  std::vector<Vec2> points;
  Frame frame = Frame::kEgo;
};

// Exact constant-arc integration from the origin, heading 0 along +x,
// positive curvature turning left. Emits one waypoint per step; the start
// pose is not included. Requires dt > 0.
Trajectory integrate(const parser::SpeedCurvatureSequence& seq, double dt);

// Rigid transform of an ego-frame trajectory into the global frame.
Trajectory to_global(const Trajectory& ego, const Pose& start);

Pose initial_pose_from_history(std::span<const dataset::EgoState> history);

}  // namespace drivecue::kinematics
