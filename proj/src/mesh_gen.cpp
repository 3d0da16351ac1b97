#include "pfcp/mesh_gen.hpp"

#include <map>
#include <random>
#include <stdexcept>

namespace pfcp
{

PolyMesh generate_grid_mesh(const GridSpec& grid, const std::vector<Vector3>& seeds,
                            const std::vector<CircularVoid>& voids)
{
  if (grid.dim != 2 && grid.dim != 3)
    throw std::invalid_argument("grid dimension must be 2 or 3");
  if (seeds.empty())
    throw std::invalid_argument("at least one grain seed is required");
  const int nx = grid.divisions[0];
  const int ny = grid.divisions[1];
  const int nz = grid.dim == 3 ? grid.divisions[2] : 0;
  if (nx < 1 || ny < 1 || (grid.dim == 3 && nz < 1))
    throw std::invalid_argument("grid divisions must be positive");

  std::vector<Vector3> points;
  const auto node_id = [&](int i, int j, int k) { return (k * (ny + 1) + j) * (nx + 1) + i; };
  for (int k = 0; k <= nz; ++k)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i)
        points.emplace_back(grid.size(0) * i / nx, grid.size(1) * j / ny,
                            grid.dim == 3 ? grid.size(2) * k / nz : 0.0);

  std::vector<std::array<int, 4>> raw;
  if (grid.dim == 2)
  {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
      {
        const int a = node_id(i, j, 0), b = node_id(i + 1, j, 0);
        const int c = node_id(i + 1, j + 1, 0), d = node_id(i, j + 1, 0);
        if ((i + j) % 2 == 0)
        {
          raw.push_back({a, b, c, -1});
          raw.push_back({a, c, d, -1});
        }
        else
        {
          raw.push_back({a, b, d, -1});
          raw.push_back({b, c, d, -1});
        }
      }
  }
  else
  {
    // Kuhn subdivision: one tetrahedron per axis permutation along the main diagonal.
    static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int k = 0; k < nz; ++k)
      for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
          for (const auto& p : perms)
          {
            std::array<int, 3> ijk{i, j, k};
            std::array<int, 4> tet{};
            tet[0] = node_id(ijk[0], ijk[1], ijk[2]);
            for (int s = 0; s < 3; ++s)
            {
              ++ijk[p[s]];
              tet[s + 1] = node_id(ijk[0], ijk[1], ijk[2]);
            }
            raw.push_back(tet);
          }
  }

  PolyMesh mesh;
  mesh.dim = grid.dim;
  std::vector<int> remap(points.size(), -1);
  std::map<int, int> label_index;
  std::vector<int> seed_of_cell;
  for (const auto& cell : raw)
  {
    Vector3 centroid = Vector3::Zero();
    for (int k = 0; k <= grid.dim; ++k)
      centroid += points[cell[k]];
    centroid /= grid.dim + 1;
    bool removed = false;
    for (const auto& v : voids)
      if ((centroid - v.center).head(grid.dim).norm() < v.radius)
        removed = true;
    if (removed)
      continue;
    int best = 0;
    for (std::size_t s = 1; s < seeds.size(); ++s)
      if ((centroid - seeds[s]).head(grid.dim).squaredNorm() < (centroid - seeds[best]).head(grid.dim).squaredNorm())
        best = static_cast<int>(s);
    std::array<int, 4> conn{-1, -1, -1, -1};
    for (int k = 0; k <= grid.dim; ++k)
    {
      int& id = remap[cell[k]];
      if (id < 0)
      {
        id = static_cast<int>(mesh.nodes.size());
        mesh.nodes.push_back(points[cell[k]]);
      }
      conn[k] = id;
    }
    mesh.cells.push_back(conn);
    seed_of_cell.push_back(best);
    label_index.emplace(best + 1, 0);
  }
  if (mesh.cells.empty())
    throw std::invalid_argument("voids remove every cell of the grid");

  int next = 0;
  for (auto& [label, index] : label_index)
  {
    index = next++;
    mesh.grain_labels.push_back(label);
  }
  for (int s : seed_of_cell)
    mesh.grain_of_cell.push_back(label_index.at(s + 1));
  mesh.origin_node.resize(mesh.nodes.size());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    mesh.origin_node[i] = static_cast<int>(i);
  classify_facets(mesh);
  return mesh;
}

std::vector<Vector3> random_seeds(const GridSpec& grid, const int n, const unsigned seed)
{
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Vector3> out;
  for (int i = 0; i < n; ++i)
  {
    Vector3 x = Vector3::Zero();
    for (int k = 0; k < grid.dim; ++k)
      x(k) = grid.size(k) * unit(rng);
    out.push_back(x);
  }
  return out;
}

} // namespace pfcp
