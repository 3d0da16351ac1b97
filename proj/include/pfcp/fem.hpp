#pragma once

#include "pfcp/material.hpp"
#include "pfcp/mesh.hpp"

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pfcp
{

enum class MicroBcKind
{
  micro_free,
  micro_hard,
  micro_flexible
};

/// Grain-boundary condition for the dual-mixed gradient field.
struct MicroBoundaryCondition
{
  MicroBcKind kind = MicroBcKind::micro_flexible;
  /// C_Gamma0 and C_Gamma^d in 1/(stress length^2); only used when micro_flexible.
  double c0 = 0.0;
  double cd = 0.0;

  static MicroBoundaryCondition micro_hard() { return {MicroBcKind::micro_hard, 0.0, 0.0}; }
  static MicroBoundaryCondition micro_free() { return {MicroBcKind::micro_free, 0.0, 0.0}; }
  static MicroBoundaryCondition flexible(double c0, double cd) { return {MicroBcKind::micro_flexible, c0, cd}; }
  /// Table-1 coupling: C_Gamma0 = 1/(H_g l_g^2), C_Gamma^d = 20/(H_g l_g^2).
  static MicroBoundaryCondition damage_coupled(const MaterialParams& params);

  /// Micro-free is the flexible condition with C_Gamma0 = 1e6/(H_g l_g^2), C_Gamma^d = 0.
  MicroBoundaryCondition resolved(const MaterialParams& params) const;

  bool contributes() const { return kind != MicroBcKind::micro_hard; }

  /// C_Gamma(d) = C_Gamma0 + C_Gamma^d d of the resolved condition.
  double flexibility(double d, const MaterialParams& params) const;

  void validate() const;
};

std::string to_string(MicroBcKind kind);
MicroBcKind micro_bc_kind_from_string(const std::string& name);

/// C_Gamma(d) H_g l_g^2 (N.g): the boundary flux conjugate to N.delta_g. Zero for micro-hard.
double micro_bc_surface_term(const MicroBoundaryCondition& bc, double n_dot_g, double d,
                             const MaterialParams& params);

/// Displacement-controlled shear. In 2D the top edge moves along x; in 3D the
/// top face (max z) moves along x and the y faces carry rollers.
struct LoadProgram
{
  /// Displacement of the top boundary per unit time.
  double shear_rate = 0.05;
  double horizon = 1.0;
  /// Optional (time, top displacement) table, linearly interpolated; replaces rate * t.
  std::vector<std::pair<double, double>> amplitude;

  double top_displacement(double t) const;
  void validate() const;
};

/// Degree-of-freedom numbering. u and d live on master nodes; g lives on every
/// (replicated) node, numbered grain by grain after all u dofs.
struct FieldLayout
{
  int dim = 2;
  int n_nodes = 0;
  int n_masters = 0;
  /// ug-system index of component i of u at node n: u_index[n * dim + i].
  std::vector<int> u_index;
  std::vector<int> g_index;
  /// d-system index per node.
  std::vector<int> d_index;
  std::vector<int> grain_of_node;
  int n_u = 0;
  int n_g = 0;

  FieldLayout() = default;
  FieldLayout(const PolyMesh& mesh, const ConstraintSet& constraints);

  int ug_size() const { return n_u + n_g; }
  int d_size() const { return n_masters; }
  /// Unconstrained count nodes * (2 dim + 1).
  long raw_dof_count() const { return static_cast<long>(n_nodes) * (2 * dim + 1); }
};

struct DirichletSet
{
  std::vector<int> dofs;
  std::vector<double> values;
};

/// Prescribed u values at time t on the outer boundary of `mesh`.
DirichletSet apply_shear_loading(const FieldLayout& layout, const PolyMesh& mesh, double t,
                                 const LoadProgram& program);

class EmptyRegion : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Integral average of a cell-wise constant quantity.
double volume_average(const PolyMesh& mesh, const std::vector<int>& cells, const std::vector<double>& cell_values);

/// Integral average of a nodal P1 field (exact for linear simplices).
double volume_average_nodal(const PolyMesh& mesh, const std::vector<int>& cells, const std::vector<double>& nodal);

/// Reference-configuration shape-function gradients of a linear simplex.
struct ElementGeometry
{
  std::array<Vector3, 4> grad{};
  double measure = 0.0;
};
ElementGeometry element_geometry(const PolyMesh& mesh, int cell);

/// Quadrature on a cell facet: barycentric weights of the cell nodes and point weights.
struct FacetQuadrature
{
  std::vector<std::array<double, 4>> shape;
  std::vector<double> weights;
};
FacetQuadrature facet_quadrature(int dim, int local_facet, double measure);

} // namespace pfcp
