#include "pfcp/config.hpp"

#include "pfcp/toml.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace pfcp
{

namespace
{

using toml::Document;
using toml::Value;

struct MaterialKey
{
  const char* name;
  double MaterialParams::*member;
};

constexpr MaterialKey kMaterialKeys[] = {
    {"bulk_modulus", &MaterialParams::bulk_modulus},
    {"shear_modulus", &MaterialParams::shear_modulus},
    {"yield_stress", &MaterialParams::yield_stress},
    {"iso_hardening", &MaterialParams::iso_hardening},
    {"grad_hardening", &MaterialParams::grad_hardening},
    {"grad_length", &MaterialParams::grad_length},
    {"relax_time", &MaterialParams::relax_time},
    {"drag_stress", &MaterialParams::drag_stress},
    {"rate_exponent", &MaterialParams::rate_exponent},
    {"fracture_energy_ratio", &MaterialParams::fracture_energy_ratio},
    {"pf_length", &MaterialParams::pf_length},
    {"penalty", &MaterialParams::penalty},
    {"crit_plastic_strain", &MaterialParams::crit_plastic_strain},
    {"degradation_exponent", &MaterialParams::degradation_exponent},
};

struct CounterKey
{
  const char* name;
  int StaggeredConfig::*member;
};

constexpr CounterKey kSolverCounters[] = {
    {"max_field_iter", &StaggeredConfig::max_field_iter},
    {"max_iter", &StaggeredConfig::max_iter},
    {"iter_backuptol", &StaggeredConfig::iter_backuptol},
    {"n_iter_backuptols_ug", &StaggeredConfig::n_iter_backuptols_ug},
    {"n_iter_backuptols_d", &StaggeredConfig::n_iter_backuptols_d},
    {"max_field_div", &StaggeredConfig::max_field_div},
    {"max_divergence_count", &StaggeredConfig::max_divergence_count},
    {"max_time_refinement_level", &StaggeredConfig::max_time_refinement_level},
    {"n_field_iter_coarsen", &StaggeredConfig::n_field_iter_coarsen},
    {"n_timesteps_recoarsen", &StaggeredConfig::n_timesteps_recoarsen},
};

// Typed access with bookkeeping of consumed keys.
class Fields
{
public:
  explicit Fields(Document doc) : doc_(std::move(doc)) {}

  bool has(const std::string& key) const { return doc_.count(key) != 0; }

  bool has_prefix(const std::string& prefix) const
  {
    const auto it = doc_.lower_bound(prefix + ".");
    return it != doc_.end() && it->first.rfind(prefix + ".", 0) == 0;
  }

  std::vector<std::string> children(const std::string& prefix) const
  {
    std::set<std::string> out;
    for (auto it = doc_.lower_bound(prefix + "."); it != doc_.end() && it->first.rfind(prefix + ".", 0) == 0; ++it)
    {
      const std::string rest = it->first.substr(prefix.size() + 1);
      out.insert(rest.substr(0, rest.find('.')));
    }
    return {out.begin(), out.end()};
  }

  double number(const std::string& key, double fallback)
  {
    if (!has(key))
      return fallback;
    return as_number(key, take(key));
  }

  int integer(const std::string& key, int fallback)
  {
    if (!has(key))
      return fallback;
    const Value& v = take(key);
    if (!v.is_integer())
      throw ConfigError(key, "expected an integer");
    return static_cast<int>(std::get<std::int64_t>(v.data));
  }

  bool boolean(const std::string& key, bool fallback)
  {
    if (!has(key))
      return fallback;
    const Value& v = take(key);
    if (!v.is_bool())
      throw ConfigError(key, "expected true or false");
    return std::get<bool>(v.data);
  }

  std::string string(const std::string& key, const std::string& fallback)
  {
    if (!has(key))
      return fallback;
    const Value& v = take(key);
    if (!v.is_string())
      throw ConfigError(key, "expected a string");
    return std::get<std::string>(v.data);
  }

  std::vector<double> numbers(const std::string& key)
  {
    return to_numbers(key, take(key));
  }

  std::vector<std::vector<double>> rows(const std::string& key, std::size_t width_min, std::size_t width_max)
  {
    const Value& v = take(key);
    if (!v.is_array())
      throw ConfigError(key, "expected an array of arrays");
    std::vector<std::vector<double>> out;
    for (const Value& row : std::get<Value::Array>(v.data))
    {
      std::vector<double> r = to_numbers(key, row);
      if (r.size() < width_min || r.size() > width_max)
        throw ConfigError(key, "rows must have " + std::to_string(width_min)
                                   + (width_min == width_max ? "" : " to " + std::to_string(width_max))
                                   + " entries");
      out.push_back(std::move(r));
    }
    return out;
  }

  void reject_unknown() const
  {
    for (const auto& [key, v] : doc_)
      if (!used_.count(key))
        throw ConfigError(key, "unknown key");
  }

private:
  Document doc_;
  std::set<std::string> used_;

  const Value& take(const std::string& key)
  {
    const auto it = doc_.find(key);
    if (it == doc_.end())
      throw ConfigError(key, "missing required key");
    used_.insert(key);
    return it->second;
  }

  static double as_number(const std::string& key, const Value& v)
  {
    if (std::holds_alternative<double>(v.data))
      return std::get<double>(v.data);
    if (v.is_integer())
      return static_cast<double>(std::get<std::int64_t>(v.data));
    throw ConfigError(key, "expected a number");
  }

  static std::vector<double> to_numbers(const std::string& key, const Value& v)
  {
    if (!v.is_array())
      throw ConfigError(key, "expected an array of numbers");
    std::vector<double> out;
    for (const Value& e : std::get<Value::Array>(v.data))
      out.push_back(as_number(key, e));
    return out;
  }
};

Vector3 to_vec3(const std::string& key, const std::vector<double>& v)
{
  if (v.size() < 2 || v.size() > 3)
    throw ConfigError(key, "expected 2 or 3 components");
  return Vector3(v[0], v[1], v.size() == 3 ? v[2] : 0.0);
}

void positive(const std::string& key, double v)
{
  if (!(v > 0.0) || !std::isfinite(v))
    throw ConfigError(key, "must be strictly positive");
}

MicroBoundaryCondition parse_bc(Fields& f, const std::string& prefix, const MicroBoundaryCondition& fallback,
                                const MaterialParams& material)
{
  const std::string kind_key = prefix + ".kind";
  const double unit = 1.0 / material.gradient_coefficient();
  std::string kind = f.string(kind_key, to_string(fallback.kind));
  if (kind == "damage_coupled")
    return MicroBoundaryCondition::flexible(f.number(prefix + ".c0_factor", 1.0) * unit,
                                            f.number(prefix + ".cd_factor", 20.0) * unit);
  MicroBcKind k;
  try
  {
    k = micro_bc_kind_from_string(kind);
  }
  catch (const std::invalid_argument& e)
  {
    throw ConfigError(kind_key, e.what());
  }
  if (k != MicroBcKind::micro_flexible)
    return {k, 0.0, 0.0};
  const double c0 = f.number(prefix + ".c0_factor", fallback.kind == k ? fallback.c0 / unit : 1.0) * unit;
  const double cd = f.number(prefix + ".cd_factor", fallback.kind == k ? fallback.cd / unit : 0.0) * unit;
  const MicroBoundaryCondition bc = MicroBoundaryCondition::flexible(c0, cd);
  if (!(c0 > 0.0) || !std::isfinite(c0))
    throw ConfigError(prefix + ".c0_factor", "must be strictly positive");
  if (!(cd >= 0.0) || !std::isfinite(cd))
    throw ConfigError(prefix + ".cd_factor", "must be non-negative");
  return bc;
}

void write_bc(Document& doc, const std::string& prefix, const MicroBoundaryCondition& bc,
              const MaterialParams& material)
{
  doc[prefix + ".kind"] = to_string(bc.kind);
  if (bc.kind == MicroBcKind::micro_flexible)
  {
    const double unit = 1.0 / material.gradient_coefficient();
    doc[prefix + ".c0_factor"] = bc.c0 / unit;
    doc[prefix + ".cd_factor"] = bc.cd / unit;
  }
}

Value::Array row(std::initializer_list<double> values)
{
  Value::Array out;
  for (double v : values)
    out.emplace_back(v);
  return out;
}

} // namespace

MaterialParams preset_material(const std::string& preset, const double L)
{
  MaterialParams p = MaterialParams::defaults(L);
  if (preset == "3d")
  {
    p.grad_length = 0.1333 * L;
    p.pf_length = 0.08 * L;
  }
  else if (preset != "2d")
    throw ConfigError("preset", "expected \"2d\" or \"3d\"");
  return p;
}

SimulationConfig parse_config(const std::string& text, const std::string& base_dir)
{
  Document doc;
  try
  {
    doc = toml::parse(text);
  }
  catch (const toml::SyntaxError& e)
  {
    throw ConfigError("<document>", e.what());
  }
  Fields f(std::move(doc));
  SimulationConfig c;

  c.length_scale = f.number("length_scale", 1.0);
  positive("length_scale", c.length_scale);
  const double L = c.length_scale;
  c.preset = f.string("preset", "2d");
  const std::string tangent = f.string("tangent", "automatic");
  if (tangent == "automatic")
    c.tangent_mode = TangentMode::automatic;
  else if (tangent == "finite_difference")
    c.tangent_mode = TangentMode::finite_difference;
  else
    throw ConfigError("tangent", "expected \"automatic\" or \"finite_difference\"");

  // Material: preset defaults, then explicit values.
  c.material = preset_material(c.preset, L);
  for (const MaterialKey& k : kMaterialKeys)
  {
    const std::string key = std::string("material.") + k.name;
    c.material.*k.member = f.number(key, c.material.*k.member);
  }
  if (!f.has("material.penalty"))
    c.material.penalty = f.number("material.penalty_factor", 200.0) * c.material.fracture_energy_ratio;
  for (const MaterialKey& k : kMaterialKeys)
    positive(std::string("material.") + k.name, c.material.*k.member);
  if (!(c.material.rate_exponent >= 1.0))
    throw ConfigError("material.rate_exponent", "must be at least 1");
  if (!(c.material.degradation_exponent >= 1.0))
    throw ConfigError("material.degradation_exponent", "must be at least 1");

  // Mesh.
  c.mesh.generate = f.boolean("mesh.generate", false);
  if (c.mesh.generate)
  {
    c.mesh.grid.dim = f.integer("mesh.dim", 2);
    if (c.mesh.grid.dim != 2 && c.mesh.grid.dim != 3)
      throw ConfigError("mesh.dim", "must be 2 or 3");
    if (f.has("mesh.size"))
      c.mesh.grid.size = to_vec3("mesh.size", f.numbers("mesh.size"));
    else
      c.mesh.grid.size = Vector3::Constant(L);
    for (int i = 0; i < c.mesh.grid.dim; ++i)
      positive("mesh.size", c.mesh.grid.size(i));
    if (f.has("mesh.divisions"))
    {
      const std::vector<double> div = f.numbers("mesh.divisions");
      if (div.size() < static_cast<std::size_t>(c.mesh.grid.dim))
        throw ConfigError("mesh.divisions", "needs one entry per dimension");
      for (std::size_t i = 0; i < div.size() && i < 3; ++i)
      {
        if (!(div[i] >= 1.0) || div[i] != std::floor(div[i]))
          throw ConfigError("mesh.divisions", "entries must be positive integers");
        c.mesh.grid.divisions[i] = static_cast<int>(div[i]);
      }
    }
    if (f.has("mesh.seeds"))
      for (const auto& r : f.rows("mesh.seeds", 2, 3))
        c.mesh.seeds.push_back(to_vec3("mesh.seeds", r));
    c.mesh.random_seeds = f.integer("mesh.random_seeds", 0);
    c.mesh.seed = static_cast<unsigned>(f.integer("mesh.seed", 1));
    if (c.mesh.seeds.empty() && c.mesh.random_seeds <= 0)
      throw ConfigError("mesh.seeds", "a generated mesh needs seeds or random_seeds > 0");
    if (f.has("mesh.voids"))
      for (const auto& r : f.rows("mesh.voids", 3, 4))
      {
        CircularVoid v;
        v.center = Vector3(r[0], r[1], r.size() == 4 ? r[2] : 0.0);
        v.radius = r.back();
        positive("mesh.voids", v.radius);
        c.mesh.voids.push_back(v);
      }
  }
  else
  {
    if (!f.has("mesh.path"))
      throw ConfigError("mesh.path", "missing required key");
    std::filesystem::path p = f.string("mesh.path", "");
    if (p.is_relative() && !base_dir.empty())
      p = std::filesystem::path(base_dir) / p;
    c.mesh.path = p.string();
  }

  // Orientations.
  const std::string conv = f.string("grains.convention", "vector");
  if (conv == "vector")
    c.convention = RodriguesConvention::vector;
  else if (conv == "axis_angle_deg")
    c.convention = RodriguesConvention::axis_angle_deg;
  else
    throw ConfigError("grains.convention", "expected \"vector\" or \"axis_angle_deg\"");
  if (f.has("grains.rodrigues"))
    for (const auto& r : f.rows("grains.rodrigues", 3, 3))
      c.orientations.emplace_back(r[0], r[1], r[2]);

  // Boundary conditions per facet set.
  for (const std::string& set : f.children("boundary"))
  {
    if (set != kInnerFacets && set != kVoidFacets && set != kOuterFacets)
      throw ConfigError("boundary." + set, "unknown facet set (expected inner, void or outer)");
    c.referenced_sets.push_back(set);
  }
  c.inner_bc = parse_bc(f, "boundary.inner", c.inner_bc, c.material);
  c.void_bc = parse_bc(f, "boundary.void", c.void_bc, c.material);
  if (f.has("boundary.outer.kind") && f.string("boundary.outer.kind", "") != "micro_hard")
    throw ConfigError("boundary.outer.kind", "the outer boundary is micro_hard");

  // Load.
  c.load.shear_rate = f.number("load.shear_rate", 0.05 * L);
  c.load.horizon = f.number("load.horizon", 1.0);
  positive("load.horizon", c.load.horizon);
  if (f.has("load.amplitude"))
    for (const auto& r : f.rows("load.amplitude", 2, 2))
      c.load.amplitude.emplace_back(r[0], r[1]);
  try
  {
    c.load.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw ConfigError("load", e.what());
  }

  // Solver.
  c.solver = StaggeredConfig::defaults(L);
  for (const CounterKey& k : kSolverCounters)
  {
    const std::string key = std::string("solver.") + k.name;
    c.solver.*k.member = f.integer(key, c.solver.*k.member);
    if (c.solver.*k.member <= 0)
      throw ConfigError(key, "must be a positive integer");
  }
  c.solver.line_search_factor = f.number("solver.line_search_factor", c.solver.line_search_factor);
  if (!(c.solver.line_search_factor > 0.0 && c.solver.line_search_factor < 1.0))
    throw ConfigError("solver.line_search_factor", "must lie in (0, 1)");
  c.solver.initial_dt = f.number("solver.initial_dt", 0.1 * c.material.relax_time);
  positive("solver.initial_dt", c.solver.initial_dt);
  for (const char* regime : {"final", "backup"})
  {
    ToleranceTable& table = std::string(regime) == "final" ? c.solver.final_tol : c.solver.backup_tol;
    for (auto& [field, tol] : table)
    {
      const std::string base = std::string("solver.") + regime + "." + field;
      tol.residual = f.number(base + ".residual", tol.residual);
      tol.update = f.number(base + ".update", tol.update);
      positive(base + ".residual", tol.residual);
      positive(base + ".update", tol.update);
    }
  }
  try
  {
    c.solver.validate();
  }
  catch (const std::invalid_argument& e)
  {
    throw ConfigError("solver", e.what());
  }

  // Output.
  c.output.directory = f.string("output.directory", c.output.directory);
  c.output.cadence = f.integer("output.cadence", c.output.cadence);
  if (c.output.cadence < 0)
    throw ConfigError("output.cadence", "must be non-negative");
  c.output.checkpoint_every = f.integer("output.checkpoint_every", c.output.checkpoint_every);
  if (c.output.checkpoint_every < 0)
    throw ConfigError("output.checkpoint_every", "must be non-negative");
  for (const std::string& name : f.children("output.regions"))
  {
    const std::string key = "output.regions." + name;
    std::vector<int> labels;
    for (const double v : f.numbers(key))
    {
      if (v != std::floor(v))
        throw ConfigError(key, "grain labels must be integers");
      labels.push_back(static_cast<int>(v));
    }
    if (labels.empty())
      throw ConfigError(key, "region needs at least one grain label");
    c.output.regions[name] = labels;
  }

  f.reject_unknown();
  return c;
}

SimulationConfig load_config_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw ConfigError("<file>", "cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::filesystem::path(path).parent_path().string());
}

std::string serialize_config(const SimulationConfig& c)
{
  Document doc;
  doc["length_scale"] = c.length_scale;
  doc["preset"] = c.preset;
  doc["tangent"] = c.tangent_mode == TangentMode::automatic ? "automatic" : "finite_difference";
  for (const MaterialKey& k : kMaterialKeys)
    doc[std::string("material.") + k.name] = c.material.*k.member;

  if (c.mesh.generate)
  {
    doc["mesh.generate"] = true;
    doc["mesh.dim"] = c.mesh.grid.dim;
    doc["mesh.size"] = row({c.mesh.grid.size(0), c.mesh.grid.size(1), c.mesh.grid.size(2)});
    Value::Array div;
    for (int d : c.mesh.grid.divisions)
      div.emplace_back(d);
    doc["mesh.divisions"] = div;
    if (!c.mesh.seeds.empty())
    {
      Value::Array seeds;
      for (const Vector3& s : c.mesh.seeds)
        seeds.emplace_back(row({s(0), s(1), s(2)}));
      doc["mesh.seeds"] = seeds;
    }
    doc["mesh.random_seeds"] = c.mesh.random_seeds;
    doc["mesh.seed"] = static_cast<int>(c.mesh.seed);
    if (!c.mesh.voids.empty())
    {
      Value::Array voids;
      for (const CircularVoid& v : c.mesh.voids)
        voids.emplace_back(row({v.center(0), v.center(1), v.center(2), v.radius}));
      doc["mesh.voids"] = voids;
    }
  }
  else
    doc["mesh.path"] = c.mesh.path;

  doc["grains.convention"] = c.convention == RodriguesConvention::vector ? "vector" : "axis_angle_deg";
  if (!c.orientations.empty())
  {
    Value::Array rows;
    for (const Vector3& r : c.orientations)
      rows.emplace_back(row({r(0), r(1), r(2)}));
    doc["grains.rodrigues"] = rows;
  }
  write_bc(doc, "boundary.inner", c.inner_bc, c.material);
  write_bc(doc, "boundary.void", c.void_bc, c.material);

  doc["load.shear_rate"] = c.load.shear_rate;
  doc["load.horizon"] = c.load.horizon;
  if (!c.load.amplitude.empty())
  {
    Value::Array rows;
    for (const auto& [t, u] : c.load.amplitude)
      rows.emplace_back(row({t, u}));
    doc["load.amplitude"] = rows;
  }

  for (const CounterKey& k : kSolverCounters)
    doc[std::string("solver.") + k.name] = c.solver.*k.member;
  doc["solver.line_search_factor"] = c.solver.line_search_factor;
  doc["solver.initial_dt"] = c.solver.initial_dt;
  for (const auto& [field, tol] : c.solver.final_tol)
  {
    doc["solver.final." + field + ".residual"] = tol.residual;
    doc["solver.final." + field + ".update"] = tol.update;
  }
  for (const auto& [field, tol] : c.solver.backup_tol)
  {
    doc["solver.backup." + field + ".residual"] = tol.residual;
    doc["solver.backup." + field + ".update"] = tol.update;
  }

  doc["output.directory"] = c.output.directory;
  doc["output.cadence"] = c.output.cadence;
  doc["output.checkpoint_every"] = c.output.checkpoint_every;
  for (const auto& [name, labels] : c.output.regions)
  {
    Value::Array a;
    for (int l : labels)
      a.emplace_back(l);
    doc["output.regions." + name] = a;
  }
  return toml::serialize(doc);
}

} // namespace pfcp
