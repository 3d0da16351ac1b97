#include "pfcp/fem.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace pfcp
{

MicroBoundaryCondition MicroBoundaryCondition::damage_coupled(const MaterialParams& params)
{
  const double scale = 1.0 / params.gradient_coefficient();
  return flexible(scale, 20.0 * scale);
}

MicroBoundaryCondition MicroBoundaryCondition::resolved(const MaterialParams& params) const
{
  if (kind == MicroBcKind::micro_free)
    return flexible(1e6 / params.gradient_coefficient(), 0.0);
  return *this;
}

double MicroBoundaryCondition::flexibility(const double d, const MaterialParams& params) const
{
  const MicroBoundaryCondition r = resolved(params);
  if (r.kind == MicroBcKind::micro_hard)
    return 0.0;
  return r.c0 + r.cd * d;
}

void MicroBoundaryCondition::validate() const
{
  if (kind != MicroBcKind::micro_flexible)
    return;
  if (!(c0 > 0.0) || !std::isfinite(c0))
    throw std::invalid_argument("micro-flexible C_Gamma0 must be strictly positive");
  if (!(cd >= 0.0) || !std::isfinite(cd))
    throw std::invalid_argument("micro-flexible C_Gamma_d must be non-negative");
}

std::string to_string(const MicroBcKind kind)
{
  switch (kind)
  {
  case MicroBcKind::micro_free: return "micro_free";
  case MicroBcKind::micro_hard: return "micro_hard";
  case MicroBcKind::micro_flexible: return "micro_flexible";
  }
  return "unknown";
}

MicroBcKind micro_bc_kind_from_string(const std::string& name)
{
  if (name == "micro_free")
    return MicroBcKind::micro_free;
  if (name == "micro_hard")
    return MicroBcKind::micro_hard;
  if (name == "micro_flexible")
    return MicroBcKind::micro_flexible;
  throw std::invalid_argument("unknown micro boundary condition '" + name + "'");
}

double micro_bc_surface_term(const MicroBoundaryCondition& bc, const double n_dot_g, const double d,
                             const MaterialParams& params)
{
  if (!bc.contributes())
    return 0.0;
  return bc.flexibility(d, params) * params.gradient_coefficient() * n_dot_g;
}

double LoadProgram::top_displacement(const double t) const
{
  if (amplitude.empty())
    return shear_rate * t;
  if (t <= amplitude.front().first)
    return amplitude.front().second;
  for (std::size_t i = 1; i < amplitude.size(); ++i)
    if (t <= amplitude[i].first)
    {
      const auto [t0, u0] = amplitude[i - 1];
      const auto [t1, u1] = amplitude[i];
      return u0 + (u1 - u0) * (t - t0) / (t1 - t0);
    }
  return amplitude.back().second;
}

void LoadProgram::validate() const
{
  if (!std::isfinite(shear_rate))
    throw std::invalid_argument("shear_rate must be finite");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw std::invalid_argument("load horizon must be strictly positive");
  for (std::size_t i = 1; i < amplitude.size(); ++i)
    if (!(amplitude[i].first > amplitude[i - 1].first))
      throw std::invalid_argument("amplitude times must be strictly increasing");
}

FieldLayout::FieldLayout(const PolyMesh& mesh, const ConstraintSet& constraints) : dim(mesh.dim)
{
  n_nodes = static_cast<int>(mesh.num_nodes());
  std::vector<int> master_rank(n_nodes, -1);
  for (int n = 0; n < n_nodes; ++n)
  {
    const int m = constraints.master_of.empty() ? n : constraints.master_of[n];
    if (m == n)
      master_rank[n] = n_masters++;
  }
  grain_of_node.assign(n_nodes, -1);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    for (int k = 0; k <= dim; ++k)
    {
      int& g = grain_of_node[mesh.cells[c][k]];
      if (g >= 0 && g != mesh.grain_of_cell[c])
        throw TopologyError("node shared by two grains; duplicate grain-boundary nodes first");
      g = mesh.grain_of_cell[c];
    }

  u_index.resize(static_cast<std::size_t>(n_nodes) * dim);
  d_index.resize(n_nodes);
  for (int n = 0; n < n_nodes; ++n)
  {
    const int m = constraints.master_of.empty() ? n : constraints.master_of[n];
    for (int i = 0; i < dim; ++i)
      u_index[n * dim + i] = master_rank[m] * dim + i;
    d_index[n] = master_rank[m];
  }
  n_u = n_masters * dim;

  g_index.assign(static_cast<std::size_t>(n_nodes) * dim, -1);
  int next = n_u;
  for (std::size_t g = 0; g < mesh.num_grains(); ++g)
    for (int n = 0; n < n_nodes; ++n)
      if (grain_of_node[n] == static_cast<int>(g))
        for (int i = 0; i < dim; ++i)
          g_index[n * dim + i] = next++;
  n_g = next - n_u;
}

DirichletSet apply_shear_loading(const FieldLayout& layout, const PolyMesh& mesh, const double t,
                                 const LoadProgram& program)
{
  const int dim = mesh.dim;
  const Vector3 lo = mesh.bbox_min();
  const Vector3 hi = mesh.bbox_max();
  const double tol = 1e-9 * (hi - lo).norm();
  const int vertical = dim == 2 ? 1 : 2;
  const double height = hi(vertical) - lo(vertical);
  const double top = program.top_displacement(t);

  std::vector<char> on_outer(mesh.num_nodes(), 0);
  const auto outer = mesh.facet_sets.find(kOuterFacets);
  if (outer != mesh.facet_sets.end())
    for (const FacetRef& f : outer->second)
      for (int n : mesh.facet_nodes(f.cell, f.local_facet))
        on_outer[n] = 1;

  // Replicas share u dofs with their master; each dof is prescribed once.
  std::vector<char> seen(layout.n_u, 0);
  DirichletSet out;
  const auto prescribe = [&](int dof, double value) {
    if (seen[dof])
      return;
    seen[dof] = 1;
    out.dofs.push_back(dof);
    out.values.push_back(value);
  };
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n)
  {
    if (!on_outer[n])
      continue;
    const Vector3& x = mesh.nodes[n];
    const double shear = top * (x(vertical) - lo(vertical)) / height;
    if (dim == 2)
    {
      prescribe(layout.u_index[n * dim + 0], shear);
      prescribe(layout.u_index[n * dim + 1], 0.0);
      continue;
    }
    const bool on_x = std::abs(x(0) - lo(0)) <= tol || std::abs(x(0) - hi(0)) <= tol;
    const bool on_y = std::abs(x(1) - lo(1)) <= tol || std::abs(x(1) - hi(1)) <= tol;
    const bool on_z = std::abs(x(2) - lo(2)) <= tol || std::abs(x(2) - hi(2)) <= tol;
    if (on_x || on_z)
    {
      prescribe(layout.u_index[n * dim + 0], shear);
      prescribe(layout.u_index[n * dim + 2], 0.0);
    }
    if (on_y)
      prescribe(layout.u_index[n * dim + 1], 0.0);
  }
  return out;
}

double volume_average(const PolyMesh& mesh, const std::vector<int>& cells, const std::vector<double>& cell_values)
{
  if (cells.empty())
    throw EmptyRegion("volume average over an empty cell set");
  double num = 0.0;
  double den = 0.0;
  for (int c : cells)
  {
    const double v = mesh.cell_measure(c);
    num += v * cell_values[c];
    den += v;
  }
  return num / den;
}

double volume_average_nodal(const PolyMesh& mesh, const std::vector<int>& cells, const std::vector<double>& nodal)
{
  if (cells.empty())
    throw EmptyRegion("volume average over an empty cell set");
  double num = 0.0;
  double den = 0.0;
  for (int c : cells)
  {
    const double v = mesh.cell_measure(c);
    double mean = 0.0;
    for (int k = 0; k <= mesh.dim; ++k)
      mean += nodal[mesh.cells[c][k]];
    num += v * mean / (mesh.dim + 1);
    den += v;
  }
  return num / den;
}

ElementGeometry element_geometry(const PolyMesh& mesh, const int cell)
{
  const int dim = mesh.dim;
  const auto& c = mesh.cells[cell];
  Eigen::MatrixXd J(dim, dim);
  for (int k = 0; k < dim; ++k)
    J.col(k) = (mesh.nodes[c[k + 1]] - mesh.nodes[c[0]]).head(dim);
  const double det = J.determinant();
  if (!(std::abs(det) > 0.0))
    throw TopologyError("degenerate cell " + std::to_string(cell));
  const Eigen::MatrixXd inv = J.inverse();
  ElementGeometry g;
  Vector3 sum = Vector3::Zero();
  for (int a = 1; a <= dim; ++a)
  {
    g.grad[a] = Vector3::Zero();
    g.grad[a].head(dim) = inv.row(a - 1).transpose();
    sum += g.grad[a];
  }
  g.grad[0] = -sum;
  g.measure = std::abs(det) / (dim == 2 ? 2.0 : 6.0);
  return g;
}

FacetQuadrature facet_quadrature(const int dim, const int local_facet, const double measure)
{
  std::vector<int> facet_nodes;
  for (int k = 0; k <= dim; ++k)
    if (k != local_facet)
      facet_nodes.push_back(k);
  FacetQuadrature q;
  if (dim == 2)
  {
    const double s = 0.5 / std::sqrt(3.0);
    for (double xi : {0.5 - s, 0.5 + s})
    {
      std::array<double, 4> n{0.0, 0.0, 0.0, 0.0};
      n[facet_nodes[0]] = 1.0 - xi;
      n[facet_nodes[1]] = xi;
      q.shape.push_back(n);
      q.weights.push_back(0.5 * measure);
    }
  }
  else
  {
    static const double pts[3][3] = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};
    for (const auto& p : pts)
    {
      std::array<double, 4> n{0.0, 0.0, 0.0, 0.0};
      for (int k = 0; k < 3; ++k)
        n[facet_nodes[k]] = p[k];
      q.shape.push_back(n);
      q.weights.push_back(measure / 3.0);
    }
  }
  return q;
}

} // namespace pfcp
