#include "pfcp/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace pfcp
{

namespace
{

using LocalVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 24, 1>;
using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 24, 24>;

int find_entry(const SparseMatrix& m, int row, int col)
{
  const int* inner = m.innerIndexPtr();
  const int begin = m.outerIndexPtr()[col];
  const int end = m.outerIndexPtr()[col + 1];
  const int* it = std::lower_bound(inner + begin, inner + end, row);
  if (it == inner + end || *it != row)
    throw std::logic_error("sparse pattern is missing an entry");
  return static_cast<int>(it - inner);
}

double mass_entry(int a, int b, int dim, double measure)
{
  return measure * (a == b ? 2.0 : 1.0) / ((dim + 1) * (dim + 2));
}

} // namespace

Quantity quantity_from_string(const std::string& name)
{
  if (name == "S12")
    return Quantity::S12;
  if (name == "S13")
    return Quantity::S13;
  if (name == "eps_p")
    return Quantity::eps_p;
  if (name == "g_e")
    return Quantity::g_e;
  if (name == "d")
    return Quantity::d;
  if (name == "phi")
    return Quantity::phi;
  if (name == "k_sum")
    return Quantity::k_sum;
  throw std::invalid_argument("unknown quantity '" + name + "'");
}

std::string to_string(const Quantity q)
{
  switch (q)
  {
  case Quantity::S12: return "S12";
  case Quantity::S13: return "S13";
  case Quantity::eps_p: return "eps_p";
  case Quantity::g_e: return "g_e";
  case Quantity::d: return "d";
  case Quantity::phi: return "phi";
  case Quantity::k_sum: return "k_sum";
  }
  return "unknown";
}

CoupledModel::CoupledModel(ModelSpec spec) : spec_(std::move(spec))
{
  spec_.params.validate();
  spec_.inner_bc.validate();
  spec_.void_bc.validate();
  spec_.load.validate();
  auto dup = duplicate_grain_boundary_nodes(spec_.mesh);
  mesh_ = std::move(dup.mesh);
  constraints_ = std::move(dup.constraints);
  layout_ = FieldLayout(mesh_, constraints_);
  grains_ = build_grain_regions(mesh_, spec_.orientations, spec_.convention);

  geometry_.reserve(mesh_.num_cells());
  for (std::size_t c = 0; c < mesh_.num_cells(); ++c)
    geometry_.push_back(element_geometry(mesh_, static_cast<int>(c)));

  surface_of_cell_.assign(mesh_.num_cells(), {});
  const auto add_surface = [&](const std::string& set, const MicroBoundaryCondition& bc, bool inner) {
    if (!bc.contributes())
      return;
    const auto it = mesh_.facet_sets.find(set);
    if (it == mesh_.facet_sets.end())
      return;
    for (const FacetRef& f : it->second)
    {
      const FacetGeometry g = facet_geometry(mesh_, f.cell, f.local_facet);
      surface_of_cell_[f.cell].push_back(static_cast<int>(surface_.size()));
      surface_.push_back({f.cell, f.local_facet, g.normal, g.measure, bc.resolved(spec_.params), inner});
    }
  };
  add_surface(kInnerFacets, spec_.inner_bc, true);
  add_surface(kVoidFacets, spec_.void_bc, false);

  cells_.assign(mesh_.num_cells(), CellData{});
  ug_ = Eigen::VectorXd::Zero(layout_.ug_size());
  d_ = Eigen::VectorXd::Zero(layout_.d_size());
  ug_n_ = ug_;
  d_n_ = d_;
  dirichlet_ = apply_shear_loading(layout_, mesh_, 0.0, spec_.load);
  fixed_.assign(layout_.ug_size(), 0);
  for (int dof : dirichlet_.dofs)
    fixed_[dof] = 1;
  build_patterns();
}

std::vector<std::string> CoupledModel::fields(const Block block) const
{
  if (block == Block::ug)
    return {"u", "g"};
  return {"d"};
}

void CoupledModel::build_patterns()
{
  const int dim = layout_.dim;
  const int nn = dim + 1;
  const int nl = 2 * dim * nn;
  std::vector<Eigen::Triplet<double>> trip;
  std::vector<int> locals(nl);
  const auto ug_locals = [&](int c) {
    const auto& cell = mesh_.cells[c];
    for (int a = 0; a < nn; ++a)
      for (int i = 0; i < dim; ++i)
      {
        locals[a * dim + i] = layout_.u_index[cell[a] * dim + i];
        locals[nn * dim + a * dim + i] = layout_.g_index[cell[a] * dim + i];
      }
  };
  for (std::size_t c = 0; c < mesh_.num_cells(); ++c)
  {
    ug_locals(static_cast<int>(c));
    for (int r : locals)
      for (int s : locals)
        if (!fixed_[r] && !fixed_[s])
          trip.emplace_back(r, s, 0.0);
  }
  for (int dof : dirichlet_.dofs)
    trip.emplace_back(dof, dof, 0.0);
  k_ug_.resize(layout_.ug_size(), layout_.ug_size());
  k_ug_.setFromTriplets(trip.begin(), trip.end());
  k_ug_.makeCompressed();

  scatter_ug_.assign(mesh_.num_cells() * nl * nl, -1);
  for (std::size_t c = 0; c < mesh_.num_cells(); ++c)
  {
    ug_locals(static_cast<int>(c));
    for (int r = 0; r < nl; ++r)
      for (int s = 0; s < nl; ++s)
        if (!fixed_[locals[r]] && !fixed_[locals[s]])
          scatter_ug_[(c * nl + r) * nl + s] = find_entry(k_ug_, locals[r], locals[s]);
  }
  fixed_diag_.clear();
  for (int dof : dirichlet_.dofs)
    fixed_diag_.push_back(find_entry(k_ug_, dof, dof));

  trip.clear();
  for (std::size_t c = 0; c < mesh_.num_cells(); ++c)
    for (int a = 0; a < nn; ++a)
      for (int b = 0; b < nn; ++b)
        trip.emplace_back(layout_.d_index[mesh_.cells[c][a]], layout_.d_index[mesh_.cells[c][b]], 0.0);
  k_d_.resize(layout_.d_size(), layout_.d_size());
  k_d_.setFromTriplets(trip.begin(), trip.end());
  k_d_.makeCompressed();
  scatter_d_.assign(mesh_.num_cells() * nn * nn, -1);
  for (std::size_t c = 0; c < mesh_.num_cells(); ++c)
    for (int a = 0; a < nn; ++a)
      for (int b = 0; b < nn; ++b)
        scatter_d_[(c * nn + a) * nn + b]
            = find_entry(k_d_, layout_.d_index[mesh_.cells[c][a]], layout_.d_index[mesh_.cells[c][b]]);

  lu_ug_.analyzePattern(k_ug_);
  lu_d_.analyzePattern(k_d_);
}

void CoupledModel::refresh_cell_inputs(const int c)
{
  const int dim = layout_.dim;
  const auto& cell = mesh_.cells[c];
  const ElementGeometry& geo = geometry_[c];
  CellData& data = cells_[c];
  data.F = Tensor2::Identity();
  data.div_g = 0.0;
  data.d = 0.0;
  for (int a = 0; a <= dim; ++a)
  {
    const int n = cell[a];
    for (int i = 0; i < dim; ++i)
    {
      const double u = ug_[layout_.u_index[n * dim + i]];
      for (int j = 0; j < dim; ++j)
        data.F(i, j) += u * geo.grad[a](j);
      data.div_g += ug_[layout_.g_index[n * dim + i]] * geo.grad[a](i);
    }
    data.d += d_[layout_.d_index[n]];
  }
  data.d /= dim + 1;
}

void CoupledModel::evaluate_plastic(const int c)
{
  refresh_cell_inputs(c);
  CellData& data = cells_[c];
  PointInputs in;
  in.F = data.F;
  in.div_g = data.div_g;
  in.phi = data.phi;
  in.d = data.d;
  in.dt = dt_;
  LocalSolverSettings settings;
  if (data.warm)
    settings.initial_guess = &data.dlambda;
  const auto r = integrate_plastic_stage(data.committed, in, grains_[mesh_.grain_of_cell[c]].slip_systems,
                                         spec_.params, spec_.tangent_mode, settings);
  data.dlambda = r.dlambda;
  data.warm = true;
  data.trial = r.state;
  data.outputs = r.outputs;
}

void CoupledModel::evaluate_damage(const int c)
{
  refresh_cell_inputs(c);
  CellData& data = cells_[c];
  const auto r = integrate_damage_stage(data.committed, data.outputs.psi_e_plus, data.trial.eps_p, data.d,
                                        spec_.params);
  data.phi = r.phi;
  data.dphi_dd = r.dphi_dd;
}

void CoupledModel::assemble_ug(Eigen::VectorXd& residual, SparseMatrix* tangent)
{
  const int dim = layout_.dim;
  const int nn = dim + 1;
  const int nl = 2 * dim * nn;
  const int goff = nn * dim;
  const double hg = spec_.params.gradient_coefficient();
  residual.setZero(layout_.ug_size());
  const bool want = tangent != nullptr;
  if (want)
    std::fill(k_ug_.valuePtr(), k_ug_.valuePtr() + k_ug_.nonZeros(), 0.0);

  LocalVector re(nl);
  LocalMatrix ke(nl, nl);
  std::vector<int> locals(nl);
  for (std::size_t ci = 0; ci < mesh_.num_cells(); ++ci)
  {
    const int c = static_cast<int>(ci);
    evaluate_plastic(c);
    const CellData& data = cells_[c];
    const ElementGeometry& geo = geometry_[c];
    const double V = geo.measure;
    const auto& cell = mesh_.cells[c];
    for (int a = 0; a < nn; ++a)
      for (int i = 0; i < dim; ++i)
      {
        locals[a * dim + i] = layout_.u_index[cell[a] * dim + i];
        locals[goff + a * dim + i] = layout_.g_index[cell[a] * dim + i];
      }
    const Tensor2& P = data.outputs.P;
    const PointTangents& t = data.outputs.tangents;
    const double ksum = data.outputs.k_sum;

    re.setZero();
    for (int a = 0; a < nn; ++a)
      for (int i = 0; i < dim; ++i)
      {
        double r = 0.0;
        for (int J = 0; J < dim; ++J)
          r += P(i, J) * geo.grad[a](J);
        re(a * dim + i) = V * r;
        double rg = V * ksum * geo.grad[a](i);
        for (int b = 0; b < nn; ++b)
          rg += mass_entry(a, b, dim, V) * ug_[locals[goff + b * dim + i]];
        re(goff + a * dim + i) = rg;
      }

    if (want)
    {
      ke.setZero();
      for (int a = 0; a < nn; ++a)
        for (int i = 0; i < dim; ++i)
          for (int b = 0; b < nn; ++b)
            for (int k = 0; k < dim; ++k)
            {
              double uu = 0.0;
              double ug = 0.0;
              double gu = 0.0;
              for (int J = 0; J < dim; ++J)
              {
                for (int L = 0; L < dim; ++L)
                  uu += t.dP_dF(3 * i + J, 3 * k + L) * geo.grad[a](J) * geo.grad[b](L);
                ug += t.dP_ddiv_g(3 * i + J) * geo.grad[a](J);
              }
              ug *= geo.grad[b](k);
              for (int L = 0; L < dim; ++L)
                gu += t.dksum_dF(3 * k + L) * geo.grad[b](L);
              gu *= geo.grad[a](i);
              double gg = V * geo.grad[a](i) * t.dksum_ddiv_g * geo.grad[b](k);
              if (i == k)
                gg += mass_entry(a, b, dim, V);
              ke(a * dim + i, b * dim + k) = V * uu;
              ke(a * dim + i, goff + b * dim + k) = V * ug;
              ke(goff + a * dim + i, b * dim + k) = V * gu;
              ke(goff + a * dim + i, goff + b * dim + k) = gg;
            }
    }

    for (int s : surface_of_cell_[c])
    {
      const SurfaceFacet& f = surface_[s];
      const FacetQuadrature q = facet_quadrature(dim, f.local_facet, f.measure);
      for (std::size_t p = 0; p < q.weights.size(); ++p)
      {
        double ng = 0.0;
        double dq = 0.0;
        for (int a = 0; a < nn; ++a)
        {
          const double N = q.shape[p][a];
          if (N == 0.0)
            continue;
          for (int i = 0; i < dim; ++i)
            ng += N * f.normal(i) * ug_[locals[goff + a * dim + i]];
          dq += N * d_[layout_.d_index[cell[a]]];
        }
        const double coeff = q.weights[p] * f.bc.flexibility(dq, spec_.params) * hg;
        for (int a = 0; a < nn; ++a)
          for (int i = 0; i < dim; ++i)
          {
            re(goff + a * dim + i) += coeff * ng * q.shape[p][a] * f.normal(i);
            if (want)
              for (int b = 0; b < nn; ++b)
                for (int k = 0; k < dim; ++k)
                  ke(goff + a * dim + i, goff + b * dim + k)
                      += coeff * q.shape[p][a] * q.shape[p][b] * f.normal(i) * f.normal(k);
          }
      }
    }

    for (int r = 0; r < nl; ++r)
      residual(locals[r]) += re(r);
    if (want)
    {
      const int* table = &scatter_ug_[ci * nl * nl];
      double* values = k_ug_.valuePtr();
      for (int r = 0; r < nl; ++r)
        for (int s = 0; s < nl; ++s)
          if (table[r * nl + s] >= 0)
            values[table[r * nl + s]] += ke(r, s);
    }
  }
  for (std::size_t k = 0; k < dirichlet_.dofs.size(); ++k)
  {
    residual(dirichlet_.dofs[k]) = 0.0;
    if (want)
      k_ug_.valuePtr()[fixed_diag_[k]] = 1.0;
  }
  if (want && tangent != &k_ug_)
    *tangent = k_ug_;
  ug_dirty_ = false;
}

void CoupledModel::assemble_d(Eigen::VectorXd& residual, SparseMatrix* tangent)
{
  const int dim = layout_.dim;
  const int nn = dim + 1;
  const double alpha = spec_.params.penalty;
  const double gl = spec_.params.fracture_gradient_coefficient();
  residual.setZero(layout_.d_size());
  const bool want = tangent != nullptr;
  if (want)
    std::fill(k_d_.valuePtr(), k_d_.valuePtr() + k_d_.nonZeros(), 0.0);

  for (std::size_t ci = 0; ci < mesh_.num_cells(); ++ci)
  {
    const int c = static_cast<int>(ci);
    evaluate_damage(c);
    const CellData& data = cells_[c];
    const ElementGeometry& geo = geometry_[c];
    const double V = geo.measure;
    const auto& cell = mesh_.cells[c];
    const int* table = &scatter_d_[ci * nn * nn];
    for (int a = 0; a < nn; ++a)
    {
      double r = alpha * data.phi * V / nn;
      for (int b = 0; b < nn; ++b)
      {
        const double kab = alpha * mass_entry(a, b, dim, V) + gl * V * geo.grad[a].dot(geo.grad[b]);
        r -= kab * d_[layout_.d_index[cell[b]]];
        if (want)
          k_d_.valuePtr()[table[a * nn + b]] += -kab + alpha * V * data.dphi_dd / (nn * nn);
      }
      residual(layout_.d_index[cell[a]]) += r;
    }
  }
  if (want && tangent != &k_d_)
    *tangent = k_d_;
  d_dirty_ = false;
}

void CoupledModel::begin_step(const double t_new, const double dt)
{
  t_new_ = t_new;
  dt_ = dt;
  ug_ = ug_n_;
  d_ = d_n_;
  const DirichletSet values = apply_shear_loading(layout_, mesh_, t_new, spec_.load);
  for (std::size_t k = 0; k < values.dofs.size(); ++k)
    ug_(values.dofs[k]) = values.values[k];
  for (CellData& c : cells_)
  {
    c.trial = c.committed;
    c.phi = c.committed.phi;
    c.warm = false;
    c.dphi_dd = 0.0;
  }
  ug_dirty_ = d_dirty_ = true;
}

std::vector<double> CoupledModel::residual_norms(const Block block)
{
  if (block == Block::ug)
  {
    assemble_ug(res_ug_, &k_ug_);
    double u = 0.0;
    for (int i = 0; i < layout_.n_u; ++i)
      if (!fixed_[i])
        u += res_ug_(i) * res_ug_(i);
    const double g = res_ug_.tail(layout_.n_g).norm();
    return {std::sqrt(u), g};
  }
  assemble_d(res_d_, &k_d_);
  return {res_d_.norm()};
}

std::vector<double> CoupledModel::solve_linearized(const Block block)
{
  if (block == Block::ug)
  {
    lu_ug_.factorize(k_ug_);
    if (lu_ug_.info() != Eigen::Success)
      throw LinearSolveFailure("ug tangent factorisation failed");
    delta_ug_ = lu_ug_.solve(-res_ug_);
    if (!delta_ug_.allFinite())
      throw LinearSolveFailure("ug update is not finite");
    for (int dof : dirichlet_.dofs)
      delta_ug_(dof) = 0.0;
    return {delta_ug_.head(layout_.n_u).norm(), delta_ug_.tail(layout_.n_g).norm()};
  }
  lu_d_.factorize(k_d_);
  if (lu_d_.info() != Eigen::Success)
    throw LinearSolveFailure("d tangent factorisation failed");
  delta_d_ = lu_d_.solve(-res_d_);
  if (!delta_d_.allFinite())
    throw LinearSolveFailure("d update is not finite");
  return {delta_d_.norm()};
}

void CoupledModel::apply_update(const Block block, const double scale)
{
  if (block == Block::ug)
  {
    ug_ += scale * delta_ug_;
    ug_dirty_ = true;
  }
  else
  {
    d_ += scale * delta_d_;
    d_dirty_ = true;
  }
}

void CoupledModel::commit_step()
{
  if (ug_dirty_)
    for (std::size_t c = 0; c < cells_.size(); ++c)
      evaluate_plastic(static_cast<int>(c));
  if (d_dirty_)
    for (std::size_t c = 0; c < cells_.size(); ++c)
      evaluate_damage(static_cast<int>(c));
  ug_dirty_ = d_dirty_ = false;
  std::vector<MaterialPointState> before;
  before.reserve(cells_.size());
  for (CellData& c : cells_)
  {
    before.push_back(c.committed);
    c.committed = c.trial;
    c.committed.phi = c.phi;
  }
  ug_n_ = ug_;
  d_n_ = d_;
  time_ = t_new_;
  compute_dissipation(before);
}

void CoupledModel::rollback_step()
{
  ug_ = ug_n_;
  d_ = d_n_;
  for (CellData& c : cells_)
  {
    c.trial = c.committed;
    c.phi = c.committed.phi;
    c.warm = false;
    c.dphi_dd = 0.0;
  }
  ug_dirty_ = d_dirty_ = true;
}

void CoupledModel::compute_dissipation(const std::vector<MaterialPointState>& before)
{
  DissipationReport rep;
  bool first = true;
  for (std::size_t ci = 0; ci < cells_.size(); ++ci)
  {
    const CellData& c = cells_[ci];
    const auto& systems = grains_[mesh_.grain_of_cell[ci]].slip_systems;
    PointInputs in;
    in.F = c.F;
    in.div_g = c.div_g;
    in.phi = c.phi;
    in.d = c.d;
    in.dt = dt_;
    const WorkConjugates w = work_conjugates(c.committed, in, systems, spec_.params);
    const double V = geometry_[ci].measure;
    const double inc = V * dissipation_increment(before[ci], c.committed, w, static_cast<int>(systems.size()));
    rep.bulk_total += inc;
    rep.bulk_min = first ? inc : std::min(rep.bulk_min, inc);
    first = false;
    rep.energy_scale += V * w.stored_energy;
  }
  first = true;
  for (const SurfaceFacet& f : surface_)
  {
    if (!f.inner)
      continue;
    const auto& cell = mesh_.cells[f.cell];
    double dq = 0.0;
    for (int k = 0; k <= mesh_.dim; ++k)
      if (k != f.local_facet)
        dq += d_[layout_.d_index[cell[k]]];
    dq /= mesh_.dim;
    const auto sum_k = [](const MaterialPointState& s) {
      double k = 0.0;
      for (double v : s.k)
        k += v;
      return k;
    };
    const double k_new = sum_k(cells_[f.cell].committed);
    const double k_old = sum_k(before[f.cell]);
    const double inc = f.measure * k_new * (k_new - k_old) / f.bc.flexibility(dq, spec_.params);
    rep.boundary_total += inc;
    rep.boundary_min = first ? inc : std::min(rep.boundary_min, inc);
    first = false;
  }
  dissipation_ = rep;
}

std::vector<double> CoupledModel::cell_values(const Quantity q) const
{
  std::vector<double> out(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c)
  {
    const CellData& data = cells_[c];
    switch (q)
    {
    case Quantity::S12: out[c] = data.outputs.S(0, 1); break;
    case Quantity::S13: out[c] = data.outputs.S(0, 2); break;
    case Quantity::eps_p: out[c] = data.trial.eps_p; break;
    case Quantity::g_e: out[c] = data.outputs.g_e; break;
    case Quantity::phi: out[c] = data.phi; break;
    case Quantity::k_sum: out[c] = data.outputs.k_sum; break;
    case Quantity::d:
    {
      double s = 0.0;
      for (int k = 0; k <= mesh_.dim; ++k)
        s += d_at(mesh_.cells[c][k]);
      out[c] = s / (mesh_.dim + 1);
      break;
    }
    }
  }
  return out;
}

double CoupledModel::volume_average(const std::vector<int>& cells, const Quantity q) const
{
  return pfcp::volume_average(mesh_, cells, cell_values(q));
}

std::vector<int> CoupledModel::region_cells(const std::vector<int>& grain_labels) const
{
  std::vector<int> out;
  for (std::size_t c = 0; c < mesh_.num_cells(); ++c)
  {
    const int label = mesh_.grain_labels[mesh_.grain_of_cell[c]];
    if (grain_labels.empty() || std::find(grain_labels.begin(), grain_labels.end(), label) != grain_labels.end())
      out.push_back(static_cast<int>(c));
  }
  return out;
}

std::vector<double> CoupledModel::boundary_normal_flux(const bool inner) const
{
  std::vector<double> out;
  const int dim = mesh_.dim;
  for (const SurfaceFacet& f : surface_)
  {
    if (f.inner != inner)
      continue;
    const FacetQuadrature q = facet_quadrature(dim, f.local_facet, f.measure);
    for (const auto& shape : q.shape)
    {
      double ng = 0.0;
      for (int a = 0; a <= dim; ++a)
        for (int i = 0; i < dim; ++i)
          ng += shape[a] * f.normal(i) * g_at(mesh_.cells[f.cell][a], i);
      out.push_back(std::abs(ng));
    }
  }
  return out;
}

std::vector<double> CoupledModel::interior_gradient_magnitude() const
{
  std::vector<char> touches(mesh_.num_cells(), 0);
  for (const auto& [name, set] : mesh_.facet_sets)
    for (const FacetRef& f : set)
      touches[f.cell] = 1;
  std::vector<double> out;
  const int dim = mesh_.dim;
  for (std::size_t c = 0; c < mesh_.num_cells(); ++c)
  {
    if (touches[c])
      continue;
    Vector3 g = Vector3::Zero();
    for (int a = 0; a <= dim; ++a)
      for (int i = 0; i < dim; ++i)
        g(i) += g_at(mesh_.cells[c][a], i) / (dim + 1);
    out.push_back(g.norm());
  }
  return out;
}

std::vector<double> CoupledModel::inner_flexibility() const
{
  std::vector<double> out;
  for (const SurfaceFacet& f : surface_)
  {
    if (!f.inner)
      continue;
    double dq = 0.0;
    for (int k = 0; k <= mesh_.dim; ++k)
      if (k != f.local_facet)
        dq += d_at(mesh_.cells[f.cell][k]);
    out.push_back(f.bc.flexibility(dq / mesh_.dim, spec_.params));
  }
  return out;
}

ModelSnapshot CoupledModel::snapshot() const
{
  ModelSnapshot s;
  s.time = time_;
  s.ug = ug_n_;
  s.d = d_n_;
  s.states.reserve(cells_.size());
  for (const CellData& c : cells_)
    s.states.push_back(c.committed);
  return s;
}

void CoupledModel::restore(const ModelSnapshot& snap)
{
  if (snap.ug.size() != ug_.size() || snap.d.size() != d_.size() || snap.states.size() != cells_.size())
    throw std::invalid_argument("snapshot does not match the model size");
  time_ = t_new_ = snap.time;
  ug_n_ = ug_ = snap.ug;
  d_n_ = d_ = snap.d;
  for (std::size_t c = 0; c < cells_.size(); ++c)
  {
    cells_[c].committed = cells_[c].trial = snap.states[c];
    cells_[c].phi = snap.states[c].phi;
    cells_[c].warm = false;
  }
  ug_dirty_ = d_dirty_ = true;
}

} // namespace pfcp
