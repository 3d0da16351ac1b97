#pragma once

#include "pfcp/kinematics.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfcp
{

class ParseError : public std::runtime_error
{
public:
  ParseError(const std::string& section, std::size_t line, const std::string& what);
  const std::string& section() const { return section_; }
  std::size_t line() const { return line_; }

private:
  std::string section_;
  std::size_t line_;
};

class TopologyError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class DegenerateFacet : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Facet f of a simplex is the one opposite its local node f.
struct FacetRef
{
  int cell = -1;
  int local_facet = -1;
  /// Outward unit normal in the reference configuration.
  Vector3 normal = Vector3::Zero();
  /// Cell on the other side, -1 on external boundaries.
  int neighbor = -1;
};

inline const std::string kOuterFacets = "outer";
inline const std::string kInnerFacets = "inner";
inline const std::string kVoidFacets = "void";

/// Linear simplex mesh (triangles in 2D, tetrahedra in 3D) with grain tags.
struct PolyMesh
{
  int dim = 2;
  std::vector<Vector3> nodes;
  std::vector<std::array<int, 4>> cells;
  /// Dense grain index per cell, into grain_labels.
  std::vector<int> grain_of_cell;
  /// The <i> of the "grain<i>" physical group for each dense grain index.
  std::vector<int> grain_labels;
  std::map<std::string, std::vector<FacetRef>> facet_sets;
  /// Original node id for every node; identity until grain-boundary duplication.
  std::vector<int> origin_node;

  int nodes_per_cell() const { return dim + 1; }
  std::size_t num_cells() const { return cells.size(); }
  std::size_t num_nodes() const { return nodes.size(); }
  std::size_t num_grains() const { return grain_labels.size(); }

  /// Nodes of a facet, in local-node order of the owning cell.
  std::vector<int> facet_nodes(int cell, int local_facet) const;

  Vector3 bbox_min() const;
  Vector3 bbox_max() const;

  /// Cell measure (area in 2D, volume in 3D).
  double cell_measure(int cell) const;
  Vector3 cell_centroid(int cell) const;
};

/// Parses an MSH 4.1 ASCII payload. Cells of dimension `dim` must belong to a
/// physical group named "grain<i>"; facet groups "outer"/"void" are optional.
PolyMesh load_mesh(std::istream& payload);
PolyMesh load_mesh_file(const std::string& path);

/// Writes MSH 4.1 ASCII with one entity per grain and an "outer" facet group.
void write_msh(const PolyMesh& mesh, std::ostream& out);

/// Builds adjacency, classifies facets into outer/inner/void sets and
/// computes their normals. Called by load_mesh and the generators.
void classify_facets(PolyMesh& mesh);

/// Outward unit normal of every facet in every named set, recomputed from geometry.
std::map<std::string, std::vector<Vector3>> facet_normals(const PolyMesh& mesh);

/// Outward unit normal and measure of one cell facet.
struct FacetGeometry
{
  Vector3 normal;
  double measure;
};
FacetGeometry facet_geometry(const PolyMesh& mesh, int cell, int local_facet);

/// Master/replica node pairs that tie u and d across grain boundaries.
struct ConstraintSet
{
  /// (replica, master) pairs.
  std::vector<std::pair<int, int>> pairs;
  /// master_of[n] == n for independent nodes.
  std::vector<int> master_of;

  bool empty() const { return pairs.empty(); }
};

struct DuplicationResult
{
  PolyMesh mesh;
  ConstraintSet constraints;
};

/// Replicates every node shared by k > 1 grains k times (one copy per grain;
/// the lowest grain index keeps the original) and rewires cell connectivity.
DuplicationResult duplicate_grain_boundary_nodes(const PolyMesh& mesh);

} // namespace pfcp
