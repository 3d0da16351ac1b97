#include "pfcp/material.hpp"

#include <stdexcept>

namespace pfcp
{

MaterialParams MaterialParams::defaults(const double length_scale)
{
  MaterialParams p;
  p.grad_length = 0.0533 * length_scale;
  p.pf_length = 0.02 * length_scale;
  p.penalty = 200.0 * p.fracture_energy_ratio;
  return p;
}

void MaterialParams::validate() const
{
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument(std::string(name) + " must be strictly positive");
  };
  positive(bulk_modulus, "bulk_modulus");
  positive(shear_modulus, "shear_modulus");
  positive(yield_stress, "yield_stress");
  positive(iso_hardening, "iso_hardening");
  positive(grad_hardening, "grad_hardening");
  positive(grad_length, "grad_length");
  positive(relax_time, "relax_time");
  positive(drag_stress, "drag_stress");
  positive(rate_exponent, "rate_exponent");
  positive(fracture_energy_ratio, "fracture_energy_ratio");
  positive(pf_length, "pf_length");
  positive(penalty, "penalty");
  positive(crit_plastic_strain, "crit_plastic_strain");
  positive(degradation_exponent, "degradation_exponent");
  if (rate_exponent < 1.0)
    throw std::invalid_argument("rate_exponent must be >= 1");
}

std::vector<SlipSystem> fcc_slip_systems()
{
  // {direction, plane normal} in the crystal frame.
  static const int table[12][6] = {
      {-1, 1, 0, 1, 1, 1},   {1, 0, -1, 1, 1, 1},   {0, -1, 1, 1, 1, 1},
      {-1, -1, 0, 1, -1, -1}, {1, 0, 1, 1, -1, -1},  {0, 1, -1, 1, -1, -1},
      {1, 1, 0, -1, 1, -1},  {-1, 0, 1, -1, 1, -1}, {0, -1, -1, -1, 1, -1},
      {1, -1, 0, -1, -1, 1}, {-1, 0, -1, -1, -1, 1}, {0, 1, 1, -1, -1, 1},
  };
  std::vector<SlipSystem> systems;
  systems.reserve(12);
  for (const auto& row : table)
  {
    SlipSystem s;
    s.direction = Vector3(row[0], row[1], row[2]).normalized();
    s.normal = Vector3(row[3], row[4], row[5]).normalized();
    systems.push_back(s);
  }
  return systems;
}

double degradation(const double phi, const double eps_p, const MaterialParams& params)
{
  return degradation_derivatives(phi, eps_p, params).value;
}

DegradationDerivatives degradation_derivatives(const double phi, const double eps_p,
                                               const MaterialParams& params)
{
  if (!(eps_p > 0.0))
    return {1.0, 0.0, 0.0, 0.0};
  const double base = 1.0 - phi;
  if (base <= 0.0)
    return {kDegradationFloor, 0.0, 0.0, 0.0};
  const double ratio = eps_p > 0.0 ? eps_p / params.crit_plastic_strain : 0.0;
  const double n = params.degradation_exponent;
  const double p = 2.0 * std::pow(ratio, n);
  const double g = std::pow(base, p);
  if (g < kDegradationFloor)
    return {kDegradationFloor, 0.0, 0.0, 0.0};
  DegradationDerivatives out{g, 0.0, 0.0, 0.0};
  if (p > 0.0)
  {
    out.d_phi = -p * std::pow(base, p - 1.0);
    out.d_phi_phi = p * (p - 1.0) * std::pow(base, p - 2.0);
    const double dp_deps = 2.0 * n * std::pow(ratio, n - 1.0) / params.crit_plastic_strain;
    out.d_eps = g * std::log(base) * dp_deps;
  }
  return out;
}

EnergySplit elastic_energy_split(const Tensor2& ee, const MaterialParams& params)
{
  const auto [tr, dev] = vol_dev_split(ee);
  const auto parts = macaulay(tr);
  return {0.5 * params.bulk_modulus * parts.positive * parts.positive
              + params.shear_modulus * double_contraction(dev, dev),
          0.5 * params.bulk_modulus * parts.negative * parts.negative};
}

Tensor2 second_pk_stress(const Tensor2& ce, const double g_e, const MaterialParams& params)
{
  return second_pk_from_strain<double>(green_lagrange(ce), g_e, params);
}

SchmidStresses schmid_stresses(const Tensor2& me, const std::vector<SlipSystem>& systems,
                               const double g_e)
{
  const Tensor2 dev = deviator(me);
  SchmidStresses out;
  out.tau.reserve(systems.size());
  out.tau_hat.reserve(systems.size());
  for (const auto& s : systems)
  {
    const double tau = double_contraction<double>(dev, s.schmid_tensor());
    out.tau.push_back(tau);
    out.tau_hat.push_back(tau / g_e);
  }
  return out;
}

double yield_function(const double tau_hat, const double kappa, const MaterialParams& params)
{
  return std::abs(tau_hat) - (params.yield_stress + kappa);
}

double hardening_stress(const double k, const double div_g, const MaterialParams& params)
{
  return -params.iso_hardening * k + params.gradient_coefficient() * div_g;
}

double viscoplastic_rate(const double overstress, const MaterialParams& params)
{
  const double x = macaulay(overstress / params.drag_stress).positive;
  return x > 0.0 ? std::pow(x, params.rate_exponent) / params.relax_time : 0.0;
}

} // namespace pfcp
