#include "pfcp/fem.hpp"
#include "pfcp/mesh_gen.hpp"
#include "pfcp/model.hpp"

#include <doctest.h>

#include <numeric>
#include <random>

using namespace pfcp;

namespace
{

PolyMesh bicrystal(int nx = 4, int ny = 4)
{
  GridSpec grid;
  grid.dim = 2;
  grid.divisions = {nx, ny, 1};
  return generate_grid_mesh(grid, {Vector3(0.25, 0.5, 0.0), Vector3(0.75, 0.5, 0.0)});
}

ModelSpec bicrystal_spec(const MicroBoundaryCondition& bc)
{
  ModelSpec spec;
  spec.mesh = bicrystal();
  spec.orientations = {Vector3(0.1, 0.2, 0.05), Vector3(-0.15, 0.05, 0.3)};
  spec.params = MaterialParams::defaults(1.0);
  spec.params.yield_stress = 60.0;
  spec.inner_bc = bc;
  spec.load.shear_rate = 0.05;
  return spec;
}

// Column-wise central differences of the assembled residual.
template <class Assemble>
double max_column_error(Eigen::VectorXd& x, const SparseMatrix& K, Assemble assemble, const std::vector<int>& cols,
                        double h)
{
  double worst = 0.0;
  const Eigen::MatrixXd dense = K;
  Eigen::VectorXd rp, rm;
  for (int c : cols)
  {
    const double x0 = x(c);
    x(c) = x0 + h;
    assemble(rp);
    x(c) = x0 - h;
    assemble(rm);
    x(c) = x0;
    const Eigen::VectorXd fd = (rp - rm) / (2.0 * h);
    const Eigen::VectorXd col = dense.col(c);
    const double scale = std::max(1.0, fd.cwiseAbs().maxCoeff());
    worst = std::max(worst, (fd - col).cwiseAbs().maxCoeff() / scale);
  }
  return worst;
}

} // namespace

TEST_CASE("layout counts replicated nodes and shares u between replicas")
{
  CoupledModel model(bicrystal_spec(MicroBoundaryCondition::micro_hard()));
  const FieldLayout& L = model.layout();
  const PolyMesh& m = model.mesh();
  // 5 x 5 grid nodes, the 5 nodes on x = 0.5 are duplicated.
  CHECK(L.n_masters == 25);
  CHECK(L.n_nodes == 30);
  CHECK(L.n_u == 50);
  CHECK(L.n_g == 60);
  CHECK(L.raw_dof_count() == 150);
  for (const auto& [replica, master] : model.constraints().pairs)
  {
    CHECK(L.u_index[replica * 2] == L.u_index[master * 2]);
    CHECK(L.d_index[replica] == L.d_index[master]);
    CHECK(L.g_index[replica * 2] != L.g_index[master * 2]);
    CHECK(m.nodes[replica].isApprox(m.nodes[master]));
  }
}

TEST_CASE("g dofs of different grains are never coupled")
{
  CoupledModel model(bicrystal_spec(MicroBoundaryCondition::damage_coupled(MaterialParams::defaults())));
  model.begin_step(0.1, 0.1);
  Eigen::VectorXd r;
  SparseMatrix K;
  model.assemble_ug(r, &K);
  const FieldLayout& L = model.layout();
  std::vector<int> grain_of_dof(L.ug_size(), -1);
  for (int n = 0; n < L.n_nodes; ++n)
    for (int i = 0; i < L.dim; ++i)
      grain_of_dof[L.g_index[n * L.dim + i]] = L.grain_of_node[n];
  int cross = 0;
  for (int k = 0; k < K.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(K, k); it; ++it)
      if (grain_of_dof[it.row()] >= 0 && grain_of_dof[it.col()] >= 0
          && grain_of_dof[it.row()] != grain_of_dof[it.col()])
        ++cross;
  CHECK(cross == 0);
}

TEST_CASE("reference configuration is in equilibrium")
{
  CoupledModel model(bicrystal_spec(MicroBoundaryCondition::micro_free()));
  model.begin_step(0.0, 0.1);
  const auto ug = model.residual_norms(Block::ug);
  const auto d = model.residual_norms(Block::d);
  CHECK(ug[0] == doctest::Approx(0.0));
  CHECK(ug[1] == doctest::Approx(0.0));
  CHECK(d[0] == doctest::Approx(0.0));
}

TEST_CASE("ug tangent matches central differences for every micro boundary condition")
{
  const MaterialParams p = MaterialParams::defaults();
  for (const auto& bc : {MicroBoundaryCondition::micro_hard(), MicroBoundaryCondition::micro_free(),
                         MicroBoundaryCondition::damage_coupled(p)})
  {
    CAPTURE(to_string(bc.kind));
    CoupledModel model(bicrystal_spec(bc));
    model.begin_step(0.4, 0.4);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd& x = model.ug();
    const FieldLayout& L = model.layout();
    std::vector<int> free;
    for (int i = 0; i < L.ug_size(); ++i)
      if (!model.ug_fixed()[i])
      {
        x(i) += i < L.n_u ? 2e-3 * u(rng) : 0.05 * u(rng);
        free.push_back(i);
      }
    for (int i = 0; i < L.d_size(); ++i)
      model.d()(i) = 0.2 + 0.1 * u(rng);
    std::shuffle(free.begin(), free.end(), rng);
    free.resize(20);

    Eigen::VectorXd r;
    SparseMatrix K;
    model.assemble_ug(r, &K);
    const double err = max_column_error(x, K, [&](Eigen::VectorXd& out) { model.assemble_ug(out, nullptr); },
                                        free, 1e-7);
    CHECK(err < 1e-4);
  }
}

TEST_CASE("d tangent matches central differences")
{
  ModelSpec spec = bicrystal_spec(MicroBoundaryCondition::micro_hard());
  spec.params.crit_plastic_strain = 1e-4;
  CoupledModel model(spec);
  model.begin_step(0.4, 0.4);
  Eigen::VectorXd r;
  model.assemble_ug(r, nullptr);
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < model.layout().d_size(); ++i)
    model.d()(i) = 0.3 * u(rng);
  SparseMatrix K;
  model.assemble_d(r, &K);
  std::vector<int> cols;
  for (int i = 0; i < model.layout().d_size(); i += 2)
    cols.push_back(i);
  const double err = max_column_error(model.d(), K, [&](Eigen::VectorXd& out) { model.assemble_d(out, nullptr); },
                                      cols, 1e-7);
  CHECK(err < 1e-5);
}

TEST_CASE("uniform local damage gives uniform nonlocal damage")
{
  // With phi = c everywhere the d equation alpha (phi - d) + G l div grad d = 0 has d = c.
  CoupledModel model(bicrystal_spec(MicroBoundaryCondition::micro_hard()));
  model.begin_step(0.0, 0.1);
  model.d().setConstant(0.37);
  Eigen::VectorXd r;
  model.assemble_ug(r, nullptr);
  const auto& cells = model.cells();
  for (std::size_t c = 0; c < cells.size(); ++c)
    const_cast<CellData&>(cells[c]).committed.phi = 0.37;
  model.assemble_d(r, nullptr);
  CHECK(r.cwiseAbs().maxCoeff() < 1e-9 * model.params().penalty);
}

TEST_CASE("shear loading prescribes the linear profile on the outer boundary")
{
  CoupledModel model(bicrystal_spec(MicroBoundaryCondition::micro_hard()));
  LoadProgram load;
  load.shear_rate = 0.05;
  const DirichletSet s = apply_shear_loading(model.layout(), model.mesh(), 0.4, load);
  // 16 boundary masters, 2 components each.
  CHECK(s.dofs.size() == 32);
  const FieldLayout& L = model.layout();
  for (int n = 0; n < L.n_nodes; ++n)
  {
    const Vector3& x = model.mesh().nodes[n];
    for (std::size_t k = 0; k < s.dofs.size(); ++k)
    {
      if (s.dofs[k] == L.u_index[n * 2])
        CHECK(s.values[k] == doctest::Approx(0.02 * x(1)));
      if (s.dofs[k] == L.u_index[n * 2 + 1])
        CHECK(s.values[k] == 0.0);
    }
  }
  load.amplitude = {{0.0, 0.0}, {1.0, 0.01}, {2.0, 0.03}};
  CHECK(load.top_displacement(1.5) == doctest::Approx(0.02));
}

TEST_CASE("volume averages")
{
  const PolyMesh m = bicrystal();
  std::vector<int> all(m.num_cells());
  std::iota(all.begin(), all.end(), 0);
  std::vector<double> v(m.num_cells());
  for (std::size_t c = 0; c < v.size(); ++c)
    v[c] = m.cell_centroid(static_cast<int>(c))(0);
  CHECK(volume_average(m, all, v) == doctest::Approx(0.5));
  std::vector<double> nodal(m.num_nodes());
  for (std::size_t n = 0; n < nodal.size(); ++n)
    nodal[n] = 1.0 + 2.0 * m.nodes[n](1);
  CHECK(volume_average_nodal(m, all, nodal) == doctest::Approx(2.0));
  CHECK_THROWS_AS(volume_average(m, {}, v), EmptyRegion);
}

TEST_CASE("micro boundary surface term")
{
  const MaterialParams p = MaterialParams::defaults();
  const double hl2 = p.gradient_coefficient();
  const auto coupled = MicroBoundaryCondition::damage_coupled(p);
  CHECK(micro_bc_surface_term(coupled, 0.3, 0.0, p) == doctest::Approx(0.3));
  CHECK(micro_bc_surface_term(coupled, 0.3, 1.0, p) == doctest::Approx(21.0 * 0.3));
  CHECK(micro_bc_surface_term(MicroBoundaryCondition::micro_hard(), 0.3, 1.0, p) == 0.0);
  CHECK(micro_bc_surface_term(MicroBoundaryCondition::micro_free(), 0.3, 0.5, p) == doctest::Approx(0.3e6));
  CHECK(MicroBoundaryCondition::flexible(2.0 / hl2, 0.0).flexibility(0.7, p) == doctest::Approx(2.0 / hl2));
  CHECK_THROWS(MicroBoundaryCondition::flexible(-1.0, 0.0).validate());
  CHECK(micro_bc_kind_from_string("micro_flexible") == MicroBcKind::micro_flexible);
  CHECK_THROWS(micro_bc_kind_from_string("sticky"));
}
