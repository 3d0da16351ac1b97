#pragma once

#include "pfcp/kinematics.hpp"

#include <array>
#include <cmath>
#include <string>
#include <vector>

namespace pfcp
{

/// Degradation floor; keeps tau/g_e and the flow rule finite in failed material.
inline constexpr double kDegradationFloor = 1e-6;

/// Upper bound on slip systems handled by the local integrator (FCC).
inline constexpr int kMaxSlipSystems = 12;

/// Constitutive constants. Units: MPa, mm, s.
struct MaterialParams
{
  double bulk_modulus = 71660.0;
  double shear_modulus = 27260.0;
  double yield_stress = 345.0;
  double iso_hardening = 250.0;
  double grad_hardening = 1000.0;
  double grad_length = 0.0533;
  double relax_time = 1.0;
  double drag_stress = 500.0;
  double rate_exponent = 8.0;
  double fracture_energy_ratio = 300.0; // G0d / l0
  double pf_length = 0.02;
  double penalty = 200.0 * 300.0;
  double crit_plastic_strain = 0.1;
  double degradation_exponent = 2.0;

  /// G0d * l0, the coefficient of the phase-field gradient term.
  double fracture_gradient_coefficient() const
  {
    return fracture_energy_ratio * pf_length * pf_length;
  }

  /// H_g * l_g^2, the gradient-hardening coefficient.
  double gradient_coefficient() const { return grad_hardening * grad_length * grad_length; }

  /// Table-1 values with length scales expressed relative to L.
  static MaterialParams defaults(double length_scale = 1.0);

  /// Throws std::invalid_argument naming the first violated constraint.
  void validate() const;
};

struct SlipSystem
{
  Vector3 direction;
  Vector3 normal;

  /// s (x) m
  Tensor2 schmid_tensor() const { return direction * normal.transpose(); }
};

/// The 12 FCC systems {111}<110> with unit vectors, unrotated.
std::vector<SlipSystem> fcc_slip_systems();

/// (1-phi)^(2 (eps_p/eps_crit)^n), bounded below by kDegradationFloor.
double degradation(double phi, double eps_p, const MaterialParams& params);

/// Partial derivatives of the degradation function; zero where the floor is active.
struct DegradationDerivatives
{
  double value;
  double d_phi;
  double d_phi_phi;
  double d_eps;
};
DegradationDerivatives degradation_derivatives(double phi, double eps_p, const MaterialParams& params);

struct EnergySplit
{
  double psi_plus;
  double psi_minus;
};

/// Saint-Venant volumetric-deviatoric split of the elastic energy.
EnergySplit elastic_energy_split(const Tensor2& ee, const MaterialParams& params);

/// Se = g_e * 2 dPsi+/dCe + 2 dPsi-/dCe.
Tensor2 second_pk_stress(const Tensor2& ce, double g_e, const MaterialParams& params);

struct SchmidStresses
{
  std::vector<double> tau;
  std::vector<double> tau_hat;
};
SchmidStresses schmid_stresses(const Tensor2& me, const std::vector<SlipSystem>& systems, double g_e);

double yield_function(double tau_hat, double kappa, const MaterialParams& params);

/// kappa = -H k + H_g l_g^2 div(g)
double hardening_stress(double k, double div_g, const MaterialParams& params);

/// (1/t*) <Phi/sigma_d>+^m
double viscoplastic_rate(double overstress, const MaterialParams& params);

// -- generic-scalar kernels shared by the local integrator ---------------------

template <class T>
T degradation_generic(const T& phi, const T& eps_p, const MaterialParams& params)
{
  using std::exp;
  using std::log;
  using std::pow;
  if (!(eps_p > 0.0))
    return T(1.0 + 0.0 * phi);
  const T base = 1.0 - phi;
  if (!(base > 0.0))
    return T(kDegradationFloor + 0.0 * phi);
  const T exponent = 2.0 * pow(eps_p / params.crit_plastic_strain, params.degradation_exponent);
  const T g = exp(exponent * log(base));
  if (g < kDegradationFloor)
    return T(kDegradationFloor + 0.0 * phi);
  return g;
}

/// Se as a function of Ee with degradation applied to the tensile part.
template <class T>
Mat3<T> second_pk_from_strain(const Mat3<T>& ee, const T& g_e, const MaterialParams& params)
{
  const T tr = ee.trace();
  const Mat3<T> dev = deviator(ee);
  Mat3<T> se = (g_e * 2.0 * params.shear_modulus) * dev;
  const T vol = g_e * params.bulk_modulus * positive_part(tr) + params.bulk_modulus * negative_part(tr);
  for (int i = 0; i < 3; ++i)
    se(i, i) += vol;
  return se;
}

template <class T>
T tensile_energy(const Mat3<T>& ee, const MaterialParams& params)
{
  const T tr_pos = positive_part(T(ee.trace()));
  const Mat3<T> dev = deviator(ee);
  return 0.5 * params.bulk_modulus * tr_pos * tr_pos + params.shear_modulus * double_contraction(dev, dev);
}

} // namespace pfcp
