#pragma once

#include "pfcp/fem.hpp"
#include "pfcp/grains.hpp"
#include "pfcp/material_point.hpp"
#include "pfcp/mesh_gen.hpp"
#include "pfcp/solver.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfcp
{

class ConfigError : public std::runtime_error
{
public:
  ConfigError(const std::string& key, const std::string& what)
      : std::runtime_error(key + ": " + what), key_(key)
  {
  }
  const std::string& key() const { return key_; }

private:
  std::string key_;
};

/// Either a mesh file or a structured grid generated on the fly.
struct MeshSource
{
  std::string path;
  bool generate = false;
  GridSpec grid;
  std::vector<Vector3> seeds;
  int random_seeds = 0;
  unsigned seed = 1;
  std::vector<CircularVoid> voids;
};

struct OutputSettings
{
  std::string directory = "output";
  /// Frame every `cadence` accepted steps; 0 disables frames.
  int cadence = 1;
  /// Checkpoint every n accepted steps; 0 only at the end of the run.
  int checkpoint_every = 0;
  /// Named regions as lists of grain labels; "all" is always present.
  std::map<std::string, std::vector<int>> regions;
};

struct SimulationConfig
{
  double length_scale = 1.0;
  /// "2d" or "3d": selects the default length-scale parameters.
  std::string preset = "2d";
  MeshSource mesh;
  MaterialParams material;
  std::vector<Vector3> orientations;
  RodriguesConvention convention = RodriguesConvention::vector;
  MicroBoundaryCondition inner_bc = MicroBoundaryCondition::micro_hard();
  MicroBoundaryCondition void_bc = MicroBoundaryCondition::micro_free();
  /// Facet sets named explicitly under [boundary.*]; checked against the mesh.
  std::vector<std::string> referenced_sets;
  LoadProgram load;
  StaggeredConfig solver;
  TangentMode tangent_mode = TangentMode::automatic;
  OutputSettings output;
};

/// Material defaults of a preset: "2d" uses l_g = 0.0533 L, l0 = 0.02 L,
/// "3d" uses l_g = 0.1333 L, l0 = 0.08 L.
MaterialParams preset_material(const std::string& preset, double length_scale);

/// Relative paths in the document are resolved against base_dir.
SimulationConfig parse_config(const std::string& text, const std::string& base_dir = "");
SimulationConfig load_config_file(const std::string& path);

/// Complete document; parse_config(serialize_config(c)) reproduces c.
std::string serialize_config(const SimulationConfig& config);

} // namespace pfcp
