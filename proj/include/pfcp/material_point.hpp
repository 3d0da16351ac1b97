#pragma once

#include "pfcp/material.hpp"

#include <Eigen/Core>

#include <array>
#include <stdexcept>
#include <vector>

namespace pfcp
{

using SlipVector = std::array<double, kMaxSlipSystems>;

/// History at a quadrature point. Only the first n_alpha entries of k are used.
struct MaterialPointState
{
  Tensor2 fp_inv = Tensor2::Identity();
  SlipVector k{};
  double eps_p = 0.0;
  double phi = 0.0;
};

struct PointInputs
{
  Tensor2 F = Tensor2::Identity();
  double div_g = 0.0;
  /// Local damage seen by the plastic stage (frozen during it).
  double phi = 0.0;
  double d = 0.0;
  double dt = 0.0;
};

/// F components are flattened row-major: index 3*i + j holds F(i,j).
using Matrix9 = Eigen::Matrix<double, 9, 9>;
using Vector9 = Eigen::Matrix<double, 9, 1>;

struct PointTangents
{
  Matrix9 dP_dF = Matrix9::Zero();
  Vector9 dP_ddiv_g = Vector9::Zero();
  Vector9 dP_dphi = Vector9::Zero();
  Vector9 dksum_dF = Vector9::Zero();
  double dksum_ddiv_g = 0.0;
  double dksum_dphi = 0.0;
};

struct PointOutputs
{
  Tensor2 P = Tensor2::Zero();
  /// Total second Piola-Kirchhoff stress F^-1 P.
  Tensor2 S = Tensor2::Zero();
  double k_sum = 0.0;
  double psi_e_plus = 0.0;
  double g_e = 1.0;
  PointTangents tangents;
};

struct PlasticStageResult
{
  SlipVector dlambda{};
  MaterialPointState state;
  PointOutputs outputs;
  int iterations = 0;
};

struct DamageStageResult
{
  double phi_trial = 0.0;
  /// max(phi_n, phi_trial)
  double phi = 0.0;
  /// d(phi)/d(d); zero on the irreversibility branch.
  double dphi_dd = 0.0;
  int iterations = 0;
};

/// Raised when a local Newton loop fails; the caller cuts the time step.
class LocalDivergence : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

enum class TangentMode
{
  automatic,
  finite_difference
};

struct LocalSolverSettings
{
  int max_iterations = 50;
  double tolerance = 1e-8;
  /// Starting iterate for the slip increments (e.g. the previous global iterate); zero if null.
  const SlipVector* initial_guess = nullptr;
};

/// Backward-Euler update of {Fp^-1, k, eps_p} for fixed local damage.
/// Slip signs are frozen from the elastic trial Mandel stress.
PlasticStageResult integrate_plastic_stage(const MaterialPointState& state_n, const PointInputs& inputs,
                                           const std::vector<SlipSystem>& systems,
                                           const MaterialParams& params,
                                           TangentMode mode = TangentMode::automatic,
                                           const LocalSolverSettings& settings = {});

/// Solves Y_phi(phi_trial) = 0 for frozen psi_e+ and eps_p, then applies
/// phi = max(phi_n, phi_trial). The residual is normalised by G0d/l0 + alpha.
DamageStageResult integrate_damage_stage(const MaterialPointState& state, double psi_e_plus, double eps_p,
                                         double d, const MaterialParams& params,
                                         const LocalSolverSettings& settings = {});

/// Y_phi = -dg/dphi psi+ - (G0d/l0) phi - alpha (phi - d)
double local_damage_driving_force(double phi, double psi_e_plus, double eps_p, double d,
                                  const MaterialParams& params);

/// End-of-step thermodynamic forces used by the dissipation diagnostic.
struct WorkConjugates
{
  Tensor2 mandel = Tensor2::Zero();
  SlipVector kappa{};
  double Q = 0.0;
  double Y_phi = 0.0;
  double stored_energy = 0.0;
};

WorkConjugates work_conjugates(const MaterialPointState& state_np1, const PointInputs& inputs,
                               const std::vector<SlipSystem>& systems, const MaterialParams& params);

/// Me:Lp dt + Q dq + sum kappa dk + Y_phi dphi over one accepted step.
double dissipation_increment(const MaterialPointState& state_n, const MaterialPointState& state_np1,
                             const WorkConjugates& conjugates, int n_systems);

} // namespace pfcp
