#pragma once

#include "pfcp/mesh.hpp"

#include <array>
#include <vector>

namespace pfcp
{

struct GridSpec
{
  int dim = 2;
  Vector3 size = Vector3(1.0, 1.0, 1.0);
  std::array<int, 3> divisions{10, 10, 1};
};

struct CircularVoid
{
  Vector3 center = Vector3::Zero();
  double radius = 0.0;
};

/// Structured simplex mesh of a rectangle (two triangles per square, alternating
/// diagonals) or box (six tetrahedra per cube). Each cell takes the grain of the
/// nearest seed to its centroid; seed i is labelled grain<i+1>. Cells whose
/// centroid lies inside a void are removed.
PolyMesh generate_grid_mesh(const GridSpec& grid, const std::vector<Vector3>& seeds,
                            const std::vector<CircularVoid>& voids = {});

/// n seeds uniformly distributed in the box, reproducible from `seed`.
std::vector<Vector3> random_seeds(const GridSpec& grid, int n, unsigned seed);

} // namespace pfcp
