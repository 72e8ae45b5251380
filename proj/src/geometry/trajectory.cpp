// SPDX-License-Identifier: Apache-2.0

#include "objmap/geometry/trajectory.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "objmap/core/errors.hpp"

namespace objmap {

void save_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "# timestamp tx ty tz qx qy qz qw scale\n";
  char line[320];
  for (const TimedPose& tp : traj) {
    Eigen::Quaterniond q = tp.pose.g.quaternion();
    if (q.w() < 0) q.coeffs() = -q.coeffs();  // canonical sign for determinism
    std::snprintf(line, sizeof(line),
                  "%.6f %.9f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", tp.timestamp,
                  tp.pose.g.t.x(), tp.pose.g.t.y(), tp.pose.g.t.z(), q.x(), q.y(), q.z(), q.w(),
                  tp.pose.scale);
    out << line;
  }
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  Trajectory traj;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    TimedPose tp;
    double qx, qy, qz, qw;
    ss >> tp.timestamp >> tp.pose.g.t.x() >> tp.pose.g.t.y() >> tp.pose.g.t.z() >> qx >> qy >>
        qz >> qw >> tp.pose.scale;
    if (!ss) throw ValidationError("malformed trajectory line in " + path.string() + ": " + line);
    tp.pose.g.R = Eigen::Quaterniond(qw, qx, qy, qz).normalized().toRotationMatrix();
    traj.push_back(tp);
  }
  return traj;
}

}  // namespace objmap
