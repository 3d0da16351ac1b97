#pragma once

#include "pfcp/fem.hpp"
#include "pfcp/grains.hpp"
#include "pfcp/material_point.hpp"
#include "pfcp/staggered_problem.hpp"

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <memory>
#include <string>
#include <vector>

namespace pfcp
{

using SparseMatrix = Eigen::SparseMatrix<double>;

struct ModelSpec
{
  /// Mesh as loaded; grain-boundary nodes are duplicated by the model.
  PolyMesh mesh;
  /// Orientation triple per dense grain index.
  std::vector<Vector3> orientations;
  RodriguesConvention convention = RodriguesConvention::vector;
  MaterialParams params;
  /// Condition on inner grain boundaries; the outer boundary is always micro-hard.
  MicroBoundaryCondition inner_bc = MicroBoundaryCondition::micro_hard();
  MicroBoundaryCondition void_bc = MicroBoundaryCondition::micro_free();
  LoadProgram load;
  TangentMode tangent_mode = TangentMode::automatic;
};

enum class Quantity
{
  S12,
  S13,
  eps_p,
  g_e,
  d,
  phi,
  k_sum
};
Quantity quantity_from_string(const std::string& name);
std::string to_string(Quantity q);

/// Per-cell material data; one material point at the centroid.
struct CellData
{
  MaterialPointState committed;
  /// Plastic-stage result for the current ug iterate (phi member unused).
  MaterialPointState trial;
  PointOutputs outputs;
  /// Slip increments of the latest plastic stage in this step; warm start for the next one.
  SlipVector dlambda{};
  bool warm = false;
  /// Local damage for the current d iterate.
  double phi = 0.0;
  double dphi_dd = 0.0;
  Tensor2 F = Tensor2::Identity();
  double div_g = 0.0;
  double d = 0.0;
};

/// Boundary facet that carries a micro-flexible surface term.
struct SurfaceFacet
{
  int cell;
  int local_facet;
  Vector3 normal;
  double measure;
  MicroBoundaryCondition bc;
  bool inner;
};

struct DissipationReport
{
  /// Smallest per-cell bulk increment (times cell measure) of the last accepted step.
  double bulk_min = 0.0;
  double bulk_total = 0.0;
  double boundary_min = 0.0;
  double boundary_total = 0.0;
  /// Integrated stored energy at the end of the step.
  double energy_scale = 0.0;
};

struct ModelSnapshot
{
  double time = 0.0;
  Eigen::VectorXd ug;
  Eigen::VectorXd d;
  std::vector<MaterialPointState> states;
};

class CoupledModel : public StaggeredProblem
{
public:
  explicit CoupledModel(ModelSpec spec);

  std::vector<std::string> fields(Block block) const override;
  void begin_step(double t_new, double dt) override;
  std::vector<double> residual_norms(Block block) override;
  std::vector<double> solve_linearized(Block block) override;
  void apply_update(Block block, double scale) override;
  void commit_step() override;
  void rollback_step() override;

  /// Residual and (optionally) tangent of the ug block at the current iterate;
  /// Dirichlet rows are replaced by identity rows.
  void assemble_ug(Eigen::VectorXd& residual, SparseMatrix* tangent);
  void assemble_d(Eigen::VectorXd& residual, SparseMatrix* tangent);

  const PolyMesh& mesh() const { return mesh_; }
  const ConstraintSet& constraints() const { return constraints_; }
  const FieldLayout& layout() const { return layout_; }
  const MaterialParams& params() const { return spec_.params; }
  const ModelSpec& spec() const { return spec_; }
  const std::vector<GrainRegion>& grains() const { return grains_; }
  const std::vector<CellData>& cells() const { return cells_; }
  const std::vector<SurfaceFacet>& surface_facets() const { return surface_; }
  const std::vector<char>& ug_fixed() const { return fixed_; }

  Eigen::VectorXd& ug() { return ug_; }
  Eigen::VectorXd& d() { return d_; }
  const Eigen::VectorXd& ug() const { return ug_; }
  const Eigen::VectorXd& d() const { return d_; }

  /// Time of the last accepted step.
  double time() const { return time_; }
  double step_time() const { return t_new_; }
  double top_displacement() const { return spec_.load.top_displacement(time_); }

  /// Nodal values on the duplicated mesh.
  double u_at(int node, int comp) const { return ug_[layout_.u_index[node * layout_.dim + comp]]; }
  double g_at(int node, int comp) const { return ug_[layout_.g_index[node * layout_.dim + comp]]; }
  double d_at(int node) const { return d_[layout_.d_index[node]]; }

  std::vector<double> cell_values(Quantity q) const;
  double volume_average(const std::vector<int>& cells, Quantity q) const;
  /// Cells of the grains with the given "grain<i>" labels; all cells if empty.
  std::vector<int> region_cells(const std::vector<int>& grain_labels) const;

  /// |N.g| at every quadrature point of the surface facets of the given kind.
  std::vector<double> boundary_normal_flux(bool inner) const;
  /// |g| at cell centroids of cells without boundary facets.
  std::vector<double> interior_gradient_magnitude() const;
  /// C_Gamma(d) for each inner surface facet, with d averaged over the facet.
  std::vector<double> inner_flexibility() const;

  const DissipationReport& last_dissipation() const { return dissipation_; }

  ModelSnapshot snapshot() const;
  void restore(const ModelSnapshot& snap);

private:
  void build_patterns();
  void evaluate_plastic(int cell);
  void evaluate_damage(int cell);
  void refresh_cell_inputs(int cell);
  void compute_dissipation(const std::vector<MaterialPointState>& before);

  ModelSpec spec_;
  PolyMesh mesh_;
  ConstraintSet constraints_;
  FieldLayout layout_;
  std::vector<GrainRegion> grains_;
  std::vector<ElementGeometry> geometry_;
  std::vector<SurfaceFacet> surface_;
  std::vector<std::vector<int>> surface_of_cell_;
  std::vector<CellData> cells_;

  Eigen::VectorXd ug_, d_, ug_n_, d_n_;
  Eigen::VectorXd res_ug_, res_d_, delta_ug_, delta_d_;
  SparseMatrix k_ug_, k_d_;
  std::vector<int> scatter_ug_, scatter_d_;
  std::vector<int> fixed_diag_;
  std::vector<char> fixed_;
  DirichletSet dirichlet_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_ug_;
  Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_d_;
  bool ug_dirty_ = true;
  bool d_dirty_ = true;

  double time_ = 0.0;
  double t_new_ = 0.0;
  double dt_ = 0.0;
  DissipationReport dissipation_;
};

} // namespace pfcp
