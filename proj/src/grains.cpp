#include "pfcp/grains.hpp"

#include <cmath>
#include <numbers>

namespace pfcp
{

namespace
{

Tensor2 skew(const Vector3& v)
{
  Tensor2 w;
  w << 0.0, -v(2), v(1), v(2), 0.0, -v(0), -v(1), v(0), 0.0;
  return w;
}

} // namespace

Tensor2 rotation_from_rodrigues(const Vector3& r, const RodriguesConvention convention)
{
  Vector3 rv = r;
  if (convention == RodriguesConvention::axis_angle_deg)
  {
    const double angle = r.norm() * std::numbers::pi / 180.0;
    if (angle == 0.0)
      return Tensor2::Identity();
    rv = std::tan(0.5 * angle) * r.normalized();
  }
  const double rr = rv.squaredNorm();
  return ((1.0 - rr) * Tensor2::Identity() + 2.0 * rv * rv.transpose() + 2.0 * skew(rv)) / (1.0 + rr);
}

std::vector<SlipSystem> rotate_slip_systems(const Vector3& rodrigues, const RodriguesConvention convention)
{
  const Tensor2 R = rotation_from_rodrigues(rodrigues, convention);
  std::vector<SlipSystem> systems = fcc_slip_systems();
  for (auto& s : systems)
  {
    s.direction = R * s.direction;
    s.normal = R * s.normal;
  }
  return systems;
}

std::vector<GrainRegion> build_grain_regions(const PolyMesh& mesh, const std::vector<Vector3>& orientations,
                                             const RodriguesConvention convention)
{
  std::vector<GrainRegion> regions(mesh.num_grains());
  for (std::size_t g = 0; g < regions.size(); ++g)
  {
    regions[g].id = mesh.grain_labels[g];
    if (g < orientations.size())
      regions[g].rodrigues = orientations[g];
    regions[g].slip_systems = rotate_slip_systems(regions[g].rodrigues, convention);
  }
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    regions[mesh.grain_of_cell[c]].cells.push_back(static_cast<int>(c));
  return regions;
}

} // namespace pfcp
