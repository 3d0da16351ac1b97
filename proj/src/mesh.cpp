#include "pfcp/mesh.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace pfcp
{

std::vector<int> PolyMesh::facet_nodes(const int cell, const int local_facet) const
{
  std::vector<int> out;
  out.reserve(dim);
  for (int k = 0; k <= dim; ++k)
    if (k != local_facet)
      out.push_back(cells[cell][k]);
  return out;
}

Vector3 PolyMesh::bbox_min() const
{
  Vector3 lo = Vector3::Constant(std::numeric_limits<double>::infinity());
  for (const auto& x : nodes)
    lo = lo.cwiseMin(x);
  return lo;
}

Vector3 PolyMesh::bbox_max() const
{
  Vector3 hi = Vector3::Constant(-std::numeric_limits<double>::infinity());
  for (const auto& x : nodes)
    hi = hi.cwiseMax(x);
  return hi;
}

double PolyMesh::cell_measure(const int cell) const
{
  const auto& c = cells[cell];
  const Vector3 a = nodes[c[1]] - nodes[c[0]];
  const Vector3 b = nodes[c[2]] - nodes[c[0]];
  if (dim == 2)
    return 0.5 * std::abs(a(0) * b(1) - a(1) * b(0));
  const Vector3 d = nodes[c[3]] - nodes[c[0]];
  return std::abs(a.cross(b).dot(d)) / 6.0;
}

Vector3 PolyMesh::cell_centroid(const int cell) const
{
  Vector3 x = Vector3::Zero();
  for (int k = 0; k <= dim; ++k)
    x += nodes[cells[cell][k]];
  return x / static_cast<double>(dim + 1);
}

FacetGeometry facet_geometry(const PolyMesh& mesh, const int cell, const int local_facet)
{
  const std::vector<int> f = mesh.facet_nodes(cell, local_facet);
  const Vector3& a = mesh.nodes[f[0]];
  const Vector3& opposite = mesh.nodes[mesh.cells[cell][local_facet]];
  Vector3 n;
  double measure;
  if (mesh.dim == 2)
  {
    const Vector3 t = mesh.nodes[f[1]] - a;
    n = Vector3(t(1), -t(0), 0.0);
    measure = t.norm();
  }
  else
  {
    n = (mesh.nodes[f[1]] - a).cross(mesh.nodes[f[2]] - a);
    measure = 0.5 * n.norm();
  }
  const double scale = (mesh.bbox_max() - mesh.bbox_min()).norm();
  if (!(measure > 1e-14 * std::pow(scale, mesh.dim - 1)))
    throw DegenerateFacet("facet " + std::to_string(local_facet) + " of cell " + std::to_string(cell)
                          + " has zero measure");
  n.normalize();
  if (n.dot(opposite - a) > 0.0)
    n = -n;
  return {n, measure};
}

void classify_facets(PolyMesh& mesh)
{
  std::map<std::array<int, 3>, std::vector<std::pair<int, int>>> owners;
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (int f = 0; f <= mesh.dim; ++f)
    {
      std::array<int, 3> key{-1, -1, -1};
      const auto nodes = mesh.facet_nodes(static_cast<int>(c), f);
      std::copy(nodes.begin(), nodes.end(), key.begin());
      std::sort(key.begin(), key.begin() + mesh.dim);
      owners[key].emplace_back(static_cast<int>(c), f);
    }

  const Vector3 lo = mesh.bbox_min();
  const Vector3 hi = mesh.bbox_max();
  const double tol = 1e-9 * (hi - lo).norm();
  const auto on_same_bbox_face = [&](const std::vector<int>& nodes) {
    for (int axis = 0; axis < mesh.dim; ++axis)
      for (const double plane : {lo(axis), hi(axis)})
        if (std::all_of(nodes.begin(), nodes.end(),
                        [&](int n) { return std::abs(mesh.nodes[n](axis) - plane) <= tol; }))
          return true;
    return false;
  };

  mesh.facet_sets.clear();
  auto& outer = mesh.facet_sets[kOuterFacets];
  auto& inner = mesh.facet_sets[kInnerFacets];
  auto& voids = mesh.facet_sets[kVoidFacets];
  for (const auto& [key, list] : owners)
  {
    if (list.size() > 2)
      throw TopologyError("non-manifold facet shared by " + std::to_string(list.size()) + " cells");
    if (list.size() == 1)
    {
      const auto [c, f] = list.front();
      FacetRef ref{c, f, facet_geometry(mesh, c, f).normal, -1};
      (on_same_bbox_face(mesh.facet_nodes(c, f)) ? outer : voids).push_back(ref);
      continue;
    }
    const auto [c0, f0] = list[0];
    const auto [c1, f1] = list[1];
    if (mesh.grain_of_cell[c0] == mesh.grain_of_cell[c1])
      continue;
    inner.push_back({c0, f0, facet_geometry(mesh, c0, f0).normal, c1});
    inner.push_back({c1, f1, facet_geometry(mesh, c1, f1).normal, c0});
  }
}

std::map<std::string, std::vector<Vector3>> facet_normals(const PolyMesh& mesh)
{
  std::map<std::string, std::vector<Vector3>> out;
  for (const auto& [name, set] : mesh.facet_sets)
  {
    auto& normals = out[name];
    normals.reserve(set.size());
    for (const FacetRef& f : set)
      normals.push_back(facet_geometry(mesh, f.cell, f.local_facet).normal);
  }
  return out;
}

DuplicationResult duplicate_grain_boundary_nodes(const PolyMesh& mesh)
{
  DuplicationResult result{mesh, {}};
  PolyMesh& out = result.mesh;
  const std::size_t n0 = mesh.num_nodes();

  std::vector<std::set<int>> grains_at(n0);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (int k = 0; k <= mesh.dim; ++k)
      grains_at[mesh.cells[c][k]].insert(mesh.grain_of_cell[c]);

  // copy_of[n][grain] -> node id used by cells of that grain.
  std::vector<std::map<int, int>> copy_of(n0);
  auto& master_of = result.constraints.master_of;
  master_of.resize(n0);
  for (std::size_t n = 0; n < n0; ++n)
  {
    master_of[n] = static_cast<int>(n);
    bool first = true;
    for (int g : grains_at[n])
    {
      if (first)
      {
        copy_of[n][g] = static_cast<int>(n);
        first = false;
        continue;
      }
      const int id = static_cast<int>(out.nodes.size());
      out.nodes.push_back(mesh.nodes[n]);
      out.origin_node.push_back(mesh.origin_node[n]);
      master_of.push_back(static_cast<int>(n));
      result.constraints.pairs.emplace_back(id, static_cast<int>(n));
      copy_of[n][g] = id;
    }
  }
  for (std::size_t c = 0; c < out.num_cells(); ++c)
    for (int k = 0; k <= out.dim; ++k)
      out.cells[c][k] = copy_of[mesh.cells[c][k]].at(mesh.grain_of_cell[c]);
  return result;
}

} // namespace pfcp
