#include "pfcp/material_point.hpp"

#include <Eigen/LU>
#include <unsupported/Eigen/AutoDiff>

#include <algorithm>
#include <cmath>

namespace pfcp
{

namespace
{

// Seed layout for the tangent evaluation: F (9), div_g, phi, dlambda (12).
constexpr int kSeedF = 0;
constexpr int kSeedDivG = 9;
constexpr int kSeedPhi = 10;
constexpr int kSeedSlip = 11;
constexpr int kTangentSeeds = kSeedSlip + kMaxSlipSystems;

template <int N>
using AD = Eigen::AutoDiffScalar<Eigen::Matrix<double, N, 1>>;

using std::pow;
using std::sqrt;

struct LocalContext
{
  const MaterialPointState* state_n;
  const MaterialParams* params;
  std::array<Tensor2, kMaxSlipSystems> schmid;
  std::array<double, kMaxSlipSystems> sign{};
  int n = 0;
  double dt = 0.0;
};

template <class T>
struct KernelOut
{
  Mat3<T> P;
  Mat3<T> fp_inv;
  std::array<T, kMaxSlipSystems> R;
  std::array<T, kMaxSlipSystems> overstress;
  T k_sum;
  T eps_p;
  T g_e;
  T psi_plus;
};

template <class T>
T value_of(const T& x)
{
  return x;
}

template <int N>
double value_of(const AD<N>& x)
{
  return x.value();
}

template <class T>
void plastic_kernel(const LocalContext& c, const Mat3<T>& F, const T& div_g, const T& phi, const T* dl,
                    KernelOut<T>& o)
{
  const MaterialParams& p = *c.params;
  T sumsq(0.0);
  for (int a = 0; a < c.n; ++a)
    sumsq += dl[a] * dl[a];
  const T slip_norm = value_of(sumsq) > 0.0 ? T(sqrt(sumsq)) : T(0.0);
  o.eps_p = c.state_n->eps_p + slip_norm;
  o.g_e = degradation_generic(phi, o.eps_p, p);

  Mat3<T> A = Mat3<T>::Zero();
  for (int a = 0; a < c.n; ++a)
  {
    const T factor = dl[a] * c.sign[a] / o.g_e;
    A += factor * c.schmid[a].template cast<T>();
  }
  o.fp_inv = c.state_n->fp_inv.template cast<T>() * (Mat3<T>::Identity() - A);
  const Mat3<T> fe = F * o.fp_inv;
  const Mat3<T> ce = fe.transpose() * fe;
  const Mat3<T> ee = green_lagrange_unchecked(ce);
  const Mat3<T> se = second_pk_from_strain(ee, o.g_e, p);
  const Mat3<T> me = ce * se;

  const double scale = c.dt / p.relax_time;
  const double grad_coeff = p.gradient_coefficient();
  o.k_sum = T(0.0);
  for (int a = 0; a < c.n; ++a)
  {
    const T tau = double_contraction<T>(me, c.schmid[a].template cast<T>());
    const T k = c.state_n->k[a] - dl[a];
    const T kappa = -p.iso_hardening * k + grad_coeff * div_g;
    const T yield = c.sign[a] * tau / o.g_e - (p.yield_stress + kappa);
    o.overstress[a] = yield;
    const T ratio = positive_part(T(yield / p.drag_stress));
    const T rate = value_of(ratio) > 0.0 ? T(pow(ratio, p.rate_exponent)) : T(0.0);
    o.R[a] = dl[a] - scale * rate;
    o.k_sum += k;
  }
  o.P = fe * se * o.fp_inv.transpose();
  o.psi_plus = tensile_energy(ee, p);
}

LocalContext make_context(const MaterialPointState& state_n, const PointInputs& inputs,
                          const std::vector<SlipSystem>& systems, const MaterialParams& params)
{
  if (systems.size() > static_cast<std::size_t>(kMaxSlipSystems))
    throw std::invalid_argument("integrate_plastic_stage: too many slip systems");
  LocalContext c;
  c.state_n = &state_n;
  c.params = &params;
  c.n = static_cast<int>(systems.size());
  c.dt = inputs.dt;
  for (int a = 0; a < c.n; ++a)
    c.schmid[a] = systems[a].schmid_tensor();

  // Elastic trial: dlambda = 0.
  const double g_trial = degradation(inputs.phi, state_n.eps_p, params);
  const Tensor2 fe = inputs.F * state_n.fp_inv;
  const Tensor2 ce = fe.transpose() * fe;
  const Tensor2 se = second_pk_from_strain<double>(green_lagrange_unchecked(ce), g_trial, params);
  const Tensor2 me = ce * se;
  for (int a = 0; a < c.n; ++a)
    c.sign[a] = double_contraction<double>(me, c.schmid[a]) >= 0.0 ? 1.0 : -1.0;
  return c;
}

using SlipMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxSlipSystems, kMaxSlipSystems>;
using SlipColumn = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxSlipSystems, 1>;

/// Newton on R(dlambda) = 0 with the projection dlambda >= 0.
SlipVector solve_slip_increments(const LocalContext& c, const PointInputs& in,
                                 const LocalSolverSettings& settings, int& iterations)
{
  SlipVector dl{};
  if (c.n == 0)
    return dl;

  // Elastic predictor.
  {
    KernelOut<double> o;
    plastic_kernel<double>(c, in.F, in.div_g, in.phi, dl.data(), o);
    bool elastic = true;
    for (int a = 0; a < c.n; ++a)
      elastic = elastic && o.R[a] == 0.0;
    if (elastic)
    {
      iterations = 0;
      return dl;
    }
  }

  if (settings.initial_guess)
    for (int a = 0; a < c.n; ++a)
      dl[a] = std::max(0.0, (*settings.initial_guess)[a]);

  using ADs = AD<kMaxSlipSystems>;
  const Mat3<ADs> F = in.F.cast<ADs>();
  const ADs div_g(in.div_g);
  const ADs phi(in.phi);
  std::array<ADs, kMaxSlipSystems> x;
  KernelOut<ADs> o;
  SlipMatrix J(c.n, c.n);
  SlipColumn R(c.n);

  for (int it = 0; it < settings.max_iterations; ++it)
  {
    for (int a = 0; a < c.n; ++a)
      x[a] = ADs(dl[a], kMaxSlipSystems, a);
    plastic_kernel<ADs>(c, F, div_g, phi, x.data(), o);
    double rnorm = 0.0;
    for (int a = 0; a < c.n; ++a)
    {
      R(a) = o.R[a].value();
      for (int b = 0; b < c.n; ++b)
        J(a, b) = o.R[a].derivatives()(b);
      rnorm = std::max(rnorm, std::abs(R(a)));
    }
    if (!std::isfinite(rnorm))
      throw LocalDivergence("plastic stage: non-finite residual");
    const SlipColumn delta = J.partialPivLu().solve(R);
    if (!delta.allFinite())
      throw LocalDivergence("plastic stage: singular local Jacobian");
    if (rnorm < settings.tolerance)
    {
      // Polish step from the converged iterate.
      for (int a = 0; a < c.n; ++a)
        dl[a] = std::max(0.0, dl[a] - delta(a));
      iterations = it + 1;
      return dl;
    }
    // Projected Newton step, backtracked on the residual 2-norm.
    const double merit = R.squaredNorm();
    SlipVector trial = dl;
    double step = 1.0;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5)
    {
      for (int a = 0; a < c.n; ++a)
        trial[a] = std::max(0.0, dl[a] - step * delta(a));
      KernelOut<double> od;
      plastic_kernel<double>(c, in.F, in.div_g, in.phi, trial.data(), od);
      double m = 0.0;
      for (int a = 0; a < c.n; ++a)
        m += od.R[a] * od.R[a];
      if (std::isfinite(m) && m < (1.0 - 1e-4 * step) * merit)
        break;
    }
    dl = trial;
  }
  throw LocalDivergence("plastic stage: iteration cap reached");
}

struct PlainOutputs
{
  Tensor2 P;
  double k_sum;
};

PlainOutputs plain_outputs(const MaterialPointState& state_n, const PointInputs& in,
                           const std::vector<SlipSystem>& systems, const MaterialParams& params,
                           const LocalSolverSettings& settings)
{
  const LocalContext c = make_context(state_n, in, systems, params);
  int its = 0;
  const SlipVector dl = solve_slip_increments(c, in, settings, its);
  KernelOut<double> o;
  plastic_kernel<double>(c, in.F, in.div_g, in.phi, dl.data(), o);
  return {o.P, o.k_sum};
}

void finite_difference_tangents(const MaterialPointState& state_n, const PointInputs& in,
                                const std::vector<SlipSystem>& systems, const MaterialParams& params,
                                const LocalSolverSettings& settings, PointTangents& t)
{
  const auto flat = [](const Tensor2& m) {
    Vector9 v;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        v(3 * i + j) = m(i, j);
    return v;
  };
  const auto central = [&](auto perturb, double h, Vector9& dP, double& dk) {
    PointInputs plus = in;
    PointInputs minus = in;
    perturb(plus, h);
    perturb(minus, -h);
    const PlainOutputs op = plain_outputs(state_n, plus, systems, params, settings);
    const PlainOutputs om = plain_outputs(state_n, minus, systems, params, settings);
    dP = (flat(op.P) - flat(om.P)) / (2.0 * h);
    dk = (op.k_sum - om.k_sum) / (2.0 * h);
  };
  const double hF = 1e-6;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
    {
      Vector9 dP;
      double dk = 0.0;
      central([i, j](PointInputs& x, double h) { x.F(i, j) += h; }, hF, dP, dk);
      t.dP_dF.col(3 * i + j) = dP;
      t.dksum_dF(3 * i + j) = dk;
    }
  // div_g is scaled by the value at which the gradient stress alone reaches the yield stress.
  const double hG = 1e-6 * std::max(std::abs(in.div_g), params.yield_stress / params.gradient_coefficient());
  central([](PointInputs& x, double h) { x.div_g += h; }, hG, t.dP_ddiv_g, t.dksum_ddiv_g);
  const double hP = 1e-6;
  central([](PointInputs& x, double h) { x.phi += h; }, hP, t.dP_dphi, t.dksum_dphi);
}

} // namespace

PlasticStageResult integrate_plastic_stage(const MaterialPointState& state_n, const PointInputs& inputs,
                                           const std::vector<SlipSystem>& systems,
                                           const MaterialParams& params, const TangentMode mode,
                                           const LocalSolverSettings& settings)
{
  if (!(inputs.dt > 0.0))
    throw std::invalid_argument("integrate_plastic_stage: dt must be positive");
  const LocalContext c = make_context(state_n, inputs, systems, params);

  PlasticStageResult result;
  result.dlambda = solve_slip_increments(c, inputs, settings, result.iterations);

  using ADt = AD<kTangentSeeds>;
  Mat3<ADt> F;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      F(i, j) = ADt(inputs.F(i, j), kTangentSeeds, kSeedF + 3 * i + j);
  const ADt div_g(inputs.div_g, kTangentSeeds, kSeedDivG);
  const ADt phi(inputs.phi, kTangentSeeds, kSeedPhi);
  std::array<ADt, kMaxSlipSystems> x;
  for (int a = 0; a < c.n; ++a)
    x[a] = ADt(result.dlambda[a], kTangentSeeds, kSeedSlip + a);

  KernelOut<ADt> o;
  plastic_kernel<ADt>(c, F, div_g, phi, x.data(), o);

  PointOutputs& out = result.outputs;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      out.P(i, j) = o.P(i, j).value();
  out.S = inputs.F.inverse() * out.P;
  out.k_sum = o.k_sum.value();
  out.g_e = o.g_e.value();
  out.psi_e_plus = o.psi_plus.value();

  MaterialPointState& s = result.state;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      s.fp_inv(i, j) = o.fp_inv(i, j).value();
  s.k = state_n.k;
  for (int a = 0; a < c.n; ++a)
    s.k[a] = state_n.k[a] - result.dlambda[a];
  s.eps_p = o.eps_p.value();
  s.phi = state_n.phi;

  if (mode == TangentMode::finite_difference)
  {
    finite_difference_tangents(state_n, inputs, systems, params, settings, out.tangents);
    return result;
  }

  // Implicit differentiation: d(dlambda)/dx = -J^-1 dR/dx with x = (F, div_g, phi).
  constexpr int nx = kSeedSlip;
  Eigen::Matrix<double, 9, nx> dP_dx;
  Eigen::Matrix<double, 1, nx> dk_dx;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      dP_dx.row(3 * i + j) = o.P(i, j).derivatives().template head<nx>().transpose();
  dk_dx = o.k_sum.derivatives().template head<nx>().transpose();

  if (c.n > 0)
  {
    SlipMatrix J(c.n, c.n);
    Eigen::Matrix<double, Eigen::Dynamic, nx, 0, kMaxSlipSystems, nx> Rx(c.n, nx);
    for (int a = 0; a < c.n; ++a)
    {
      for (int b = 0; b < c.n; ++b)
        J(a, b) = o.R[a].derivatives()(kSeedSlip + b);
      Rx.row(a) = o.R[a].derivatives().template head<nx>().transpose();
    }
    const Eigen::Matrix<double, Eigen::Dynamic, nx, 0, kMaxSlipSystems, nx> dl_dx
        = -J.partialPivLu().solve(Rx);
    Eigen::Matrix<double, 9, Eigen::Dynamic, 0, 9, kMaxSlipSystems> dP_dl(9, c.n);
    Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxSlipSystems> dk_dl(1, c.n);
    for (int b = 0; b < c.n; ++b)
    {
      for (int r = 0; r < 9; ++r)
        dP_dl(r, b) = o.P(r / 3, r % 3).derivatives()(kSeedSlip + b);
      dk_dl(0, b) = o.k_sum.derivatives()(kSeedSlip + b);
    }
    dP_dx += dP_dl * dl_dx;
    dk_dx += dk_dl * dl_dx;
  }

  PointTangents& t = out.tangents;
  t.dP_dF = dP_dx.template leftCols<9>();
  t.dP_ddiv_g = dP_dx.col(kSeedDivG);
  t.dP_dphi = dP_dx.col(kSeedPhi);
  t.dksum_dF = dk_dx.template leftCols<9>().transpose();
  t.dksum_ddiv_g = dk_dx(kSeedDivG);
  t.dksum_dphi = dk_dx(kSeedPhi);
  return result;
}

double local_damage_driving_force(const double phi, const double psi_e_plus, const double eps_p,
                                  const double d, const MaterialParams& params)
{
  const DegradationDerivatives g = degradation_derivatives(phi, eps_p, params);
  return -g.d_phi * psi_e_plus - params.fracture_energy_ratio * phi - params.penalty * (phi - d);
}

DamageStageResult integrate_damage_stage(const MaterialPointState& state, const double psi_e_plus,
                                         const double eps_p, const double d, const MaterialParams& params,
                                         const LocalSolverSettings& settings)
{
  const double stiffness = params.fracture_energy_ratio + params.penalty;
  const auto residual = [&](double phi) {
    return local_damage_driving_force(phi, psi_e_plus, eps_p, d, params) / stiffness;
  };
  const auto slope = [&](double phi) {
    const DegradationDerivatives g = degradation_derivatives(phi, eps_p, params);
    return (-g.d_phi_phi * psi_e_plus - stiffness) / stiffness;
  };

  DamageStageResult out;
  // Bracket on [0, 1]: R(0) >= 0 for d >= 0, R(1) < 0 unless d exceeds 1 + G0d/(l0 alpha).
  double lo = 0.0;
  double hi = 1.0;
  double phi = std::clamp(state.phi, 0.0, 1.0);
  if (residual(1.0) >= 0.0)
  {
    phi = 1.0;
    out.iterations = 0;
  }
  else if (residual(0.0) <= 0.0)
  {
    phi = 0.0;
    out.iterations = 0;
  }
  else
  {
    bool converged = false;
    // Bisection fallback needs about 40 halvings on top of the Newton budget.
    for (int it = 0; it < settings.max_iterations + 64; ++it)
    {
      const double r = residual(phi);
      if (!std::isfinite(r))
        throw LocalDivergence("damage stage: non-finite residual");
      out.iterations = it + 1;
      // A collapsed bracket without a small residual marks the jump of dg/dphi at the degradation floor.
      if (std::abs(r) < settings.tolerance || hi - lo < 1e-12)
      {
        converged = true;
        // Polish so the nonlocal residual is not limited by the local tolerance.
        const double s = slope(phi);
        const double polished = s < 0.0 ? phi - r / s : phi;
        if (polished >= 0.0 && polished <= 1.0 && std::abs(residual(polished)) < std::abs(r))
          phi = polished;
        break;
      }
      if (r > 0.0)
        lo = phi;
      else
        hi = phi;
      const double s = slope(phi);
      double next = phi - r / s;
      if (!(s < 0.0) || !(next > lo && next < hi))
        next = 0.5 * (lo + hi);
      phi = next;
    }
    if (!converged)
      throw LocalDivergence("damage stage: iteration cap reached");
  }

  out.phi_trial = phi;
  out.phi = std::max(state.phi, phi);
  if (phi >= state.phi && phi > 0.0 && phi < 1.0)
  {
    const double s = slope(phi) * stiffness;
    out.dphi_dd = s < 0.0 ? params.penalty / (-s) : 0.0;
  }
  return out;
}

WorkConjugates work_conjugates(const MaterialPointState& state_np1, const PointInputs& inputs,
                               const std::vector<SlipSystem>& systems, const MaterialParams& params)
{
  WorkConjugates w;
  const DegradationDerivatives g = degradation_derivatives(state_np1.phi, state_np1.eps_p, params);
  const Tensor2 fe = inputs.F * state_np1.fp_inv;
  const Tensor2 ce = fe.transpose() * fe;
  const Tensor2 ee = green_lagrange_unchecked(ce);
  const Tensor2 se = second_pk_from_strain<double>(ee, g.value, params);
  w.mandel = ce * se;
  const EnergySplit psi = elastic_energy_split(ee, params);
  w.Q = -g.d_eps * psi.psi_plus;
  w.Y_phi = local_damage_driving_force(state_np1.phi, psi.psi_plus, state_np1.eps_p, inputs.d, params);
  double hardening_energy = 0.0;
  for (std::size_t a = 0; a < systems.size(); ++a)
  {
    w.kappa[a] = hardening_stress(state_np1.k[a], inputs.div_g, params);
    hardening_energy += 0.5 * params.iso_hardening * state_np1.k[a] * state_np1.k[a];
  }
  const double dphi = state_np1.phi - inputs.d;
  w.stored_energy = g.value * psi.psi_plus + psi.psi_minus + hardening_energy
                    + 0.5 * params.fracture_energy_ratio * state_np1.phi * state_np1.phi
                    + 0.5 * params.penalty * dphi * dphi;
  return w;
}

double dissipation_increment(const MaterialPointState& state_n, const MaterialPointState& state_np1,
                             const WorkConjugates& w, const int n_systems)
{
  // Lp dt = I - Fp_n Fp_{n+1}^-1, exact for the backward-Euler product update.
  const Tensor2 lp_dt = Tensor2::Identity() - state_n.fp_inv.inverse() * state_np1.fp_inv;
  double d = double_contraction<double>(w.mandel, lp_dt);
  d += w.Q * (state_np1.eps_p - state_n.eps_p);
  for (int a = 0; a < n_systems; ++a)
    d += w.kappa[a] * (state_np1.k[a] - state_n.k[a]);
  d += w.Y_phi * (state_np1.phi - state_n.phi);
  return d;
}

} // namespace pfcp
