#pragma once

#include "pfcp/material.hpp"
#include "pfcp/mesh.hpp"

#include <vector>

namespace pfcp
{

/// How the three orientation numbers of a grain are read.
enum class RodriguesConvention
{
  /// r = tan(theta/2) * axis
  vector,
  /// |r| is the rotation angle in degrees, r/|r| the axis
  axis_angle_deg
};

/// Active rotation matrix for an orientation triple.
Tensor2 rotation_from_rodrigues(const Vector3& r, RodriguesConvention convention = RodriguesConvention::vector);

/// Rotates the unrotated FCC systems into the sample frame.
std::vector<SlipSystem> rotate_slip_systems(const Vector3& rodrigues,
                                            RodriguesConvention convention = RodriguesConvention::vector);

struct GrainRegion
{
  int id = 0;
  std::vector<int> cells;
  std::vector<SlipSystem> slip_systems;
  Vector3 rodrigues = Vector3::Zero();
};

/// One region per dense grain index. orientations[g] belongs to grain g;
/// missing entries default to the unrotated lattice.
std::vector<GrainRegion> build_grain_regions(const PolyMesh& mesh, const std::vector<Vector3>& orientations,
                                             RodriguesConvention convention = RodriguesConvention::vector);

} // namespace pfcp
