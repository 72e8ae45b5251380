// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <vector>

namespace objmap {

struct TriMesh {
  std::vector<Eigen::Vector3f> vertices;
  std::vector<Eigen::Vector3i> triangles;

  bool empty() const { return triangles.empty(); }

  // V - E + F over unique undirected edges.
  int euler_characteristic() const;
  // Every edge referenced by exactly two triangles.
  bool is_closed() const;
  double surface_area() const;

  void transform(const Eigen::Matrix3d& R, const Eigen::Vector3d& t, double scale = 1.0);
};

void save_ply(const std::filesystem::path& path, const TriMesh& mesh);
void save_obj(const std::filesystem::path& path, const TriMesh& mesh);
TriMesh load_ply(const std::filesystem::path& path);
void save_mesh(const std::filesystem::path& path, const TriMesh& mesh);  // by extension

}  // namespace objmap
