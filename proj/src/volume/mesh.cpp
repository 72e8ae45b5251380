// SPDX-License-Identifier: Apache-2.0

#include "objmap/volume/mesh.hpp"

#include <Eigen/Geometry>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "objmap/core/errors.hpp"

namespace objmap {

namespace {

// Undirected edge -> incidence count.
std::map<std::pair<int, int>, int> edge_counts(const TriMesh& mesh) {
  std::map<std::pair<int, int>, int> edges;
  for (const Eigen::Vector3i& tri : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = tri[e], b = tri[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++edges[{a, b}];
    }
  }
  return edges;
}

}  // namespace

int TriMesh::euler_characteristic() const {
  const auto edges = edge_counts(*this);
  return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) +
         static_cast<int>(triangles.size());
}

bool TriMesh::is_closed() const {
  if (triangles.empty()) return false;
  for (const auto& [edge, count] : edge_counts(*this))
    if (count != 2) return false;
  return true;
}

double TriMesh::surface_area() const {
  double area = 0;
  for (const Eigen::Vector3i& tri : triangles) {
    const Eigen::Vector3d a = vertices[tri[0]].cast<double>();
    const Eigen::Vector3d b = vertices[tri[1]].cast<double>();
    const Eigen::Vector3d c = vertices[tri[2]].cast<double>();
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

void TriMesh::transform(const Eigen::Matrix3d& R, const Eigen::Vector3d& t, double scale) {
  for (Eigen::Vector3f& v : vertices)
    v = (scale * (R * v.cast<double>()) + t).cast<float>();
}

void save_ply(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << mesh.vertices.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "element face " << mesh.triangles.size() << "\n";
  out << "property list uchar int vertex_indices\n";
  out << "end_header\n";
  char line[128];
  for (const Eigen::Vector3f& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "%.6f %.6f %.6f\n", v.x(), v.y(), v.z());
    out << line;
  }
  for (const Eigen::Vector3i& t : mesh.triangles)
    out << "3 " << t[0] << " " << t[1] << " " << t[2] << "\n";
}

void save_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path.string());
  char line[128];
  for (const Eigen::Vector3f& v : mesh.vertices) {
    std::snprintf(line, sizeof(line), "v %.6f %.6f %.6f\n", v.x(), v.y(), v.z());
    out << line;
  }
  for (const Eigen::Vector3i& t : mesh.triangles)
    out << "f " << t[0] + 1 << " " << t[1] + 1 << " " << t[2] + 1 << "\n";
}

void save_mesh(const std::filesystem::path& path, const TriMesh& mesh) {
  if (path.extension() == ".obj")
    save_obj(path, mesh);
  else
    save_ply(path, mesh);
}

TriMesh load_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw ValidationError("not a PLY file: " + path.string());
  std::size_t n_vertices = 0, n_faces = 0;
  int vertex_props = 0;
  std::string element;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt != "ascii") throw ValidationError("only ascii PLY supported: " + path.string());
    } else if (tok == "element") {
      std::string name;
      std::size_t count;
      ss >> name >> count;
      element = name;
      if (name == "vertex") n_vertices = count;
      if (name == "face") n_faces = count;
    } else if (tok == "property" && element == "vertex") {
      ++vertex_props;
    } else if (tok == "end_header") {
      break;
    }
  }
  if (vertex_props < 3) throw ValidationError("PLY vertices need x y z: " + path.string());
  TriMesh mesh;
  mesh.vertices.resize(n_vertices);
  for (std::size_t i = 0; i < n_vertices; ++i) {
    std::getline(in, line);
    std::istringstream ss(line);
    ss >> mesh.vertices[i].x() >> mesh.vertices[i].y() >> mesh.vertices[i].z();
    if (!ss) throw ValidationError("malformed PLY vertex in " + path.string());
  }
  mesh.triangles.reserve(n_faces);
  for (std::size_t i = 0; i < n_faces; ++i) {
    std::getline(in, line);
    std::istringstream ss(line);
    int n = 0;
    ss >> n;
    if (n < 3) throw ValidationError("malformed PLY face in " + path.string());
    std::vector<int> idx(n);
    for (int k = 0; k < n; ++k) ss >> idx[k];
    if (!ss) throw ValidationError("malformed PLY face in " + path.string());
    for (int k = 2; k < n; ++k)  // fan-triangulate polygons
      mesh.triangles.emplace_back(idx[0], idx[k - 1], idx[k]);
  }
  return mesh;
}

}  // namespace objmap
