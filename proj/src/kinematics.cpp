#include "pfcp/kinematics.hpp"

namespace pfcp
{

MacaulayParts macaulay(const double x)
{
  return {0.5 * (x + std::abs(x)), 0.5 * (x - std::abs(x))};
}

bool is_symmetric(const Tensor2& a, const double rel_tol)
{
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1.0);
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Tensor2 green_lagrange(const Tensor2& ce)
{
  if (!is_symmetric(ce))
    throw std::invalid_argument("green_lagrange: Ce must be symmetric");
  return green_lagrange_unchecked(ce);
}

Tensor2 mandel_stress(const Tensor2& ce, const Tensor2& se)
{
  return ce * se;
}

VolDevDecomposition vol_dev_split(const Tensor2& a)
{
  return {a.trace(), deviator(a)};
}

} // namespace pfcp
