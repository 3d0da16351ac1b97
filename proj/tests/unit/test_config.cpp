#include "pfcp/config.hpp"
#include "pfcp/toml.hpp"

#include <doctest.h>

#include <cmath>

using namespace pfcp;

namespace
{

const char* kGenerated = R"(
[mesh]
generate = true
divisions = [4, 4]
seeds = [[0.25, 0.5], [0.75, 0.5]]
)";

std::string thrown_key(const std::string& text)
{
  try
  {
    parse_config(text);
  }
  catch (const ConfigError& e)
  {
    return e.key();
  }
  return "";
}

} // namespace

TEST_CASE("toml subset parses tables, dotted keys and arrays")
{
  const auto doc = toml::parse(R"(
a = 1
b = 2.5e-3 # comment
[t.sub]
name = "x\"y"
flag = true
arr = [
  [1, 2.0], # row
  [3, 4],
]
"quoted.key" = -7
)");
  CHECK(std::get<std::int64_t>(doc.at("a").data) == 1);
  CHECK(std::get<double>(doc.at("b").data) == 2.5e-3);
  CHECK(std::get<std::string>(doc.at("t.sub.name").data) == "x\"y");
  CHECK(std::get<bool>(doc.at("t.sub.flag").data));
  const auto& arr = std::get<toml::Value::Array>(doc.at("t.sub.arr").data);
  REQUIRE(arr.size() == 2);
  CHECK(std::get<double>(std::get<toml::Value::Array>(arr[0].data)[1].data) == 2.0);
  CHECK(doc.count("t.sub.quoted.key") == 1);
}

TEST_CASE("toml syntax errors report the line")
{
  CHECK_THROWS_AS(toml::parse("a = "), toml::SyntaxError);
  CHECK_THROWS_AS(toml::parse("a = 1\na = 2"), toml::SyntaxError);
  CHECK_THROWS_AS(toml::parse("[t]\n[t]"), toml::SyntaxError);
  CHECK_THROWS_AS(toml::parse("[[t]]"), toml::SyntaxError);
  CHECK_THROWS_AS(toml::parse("a = \"open"), toml::SyntaxError);
  CHECK_THROWS_AS(toml::parse("a = 1 2"), toml::SyntaxError);
  try
  {
    toml::parse("x = 1\n\ny = [1, 2");
    FAIL("expected a syntax error");
  }
  catch (const toml::SyntaxError& e)
  {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("toml serialization round-trips")
{
  toml::Document doc;
  doc["a"] = 0.1;
  doc["b"] = 3;
  doc["t.x"] = 1.0 / 3.0;
  doc["t.s"] = "hi";
  doc["t.u.v"] = toml::Value::Array{toml::Value(1.0), toml::Value(2)};
  const auto back = toml::parse(toml::serialize(doc));
  CHECK(back == doc);
  CHECK(toml::format_value(toml::Value(2.0)) == "2.0");
}

TEST_CASE("empty material section gives the default parameters")
{
  const SimulationConfig c = parse_config(kGenerated);
  const MaterialParams d = MaterialParams::defaults(1.0);
  CHECK(c.material.bulk_modulus == 71660.0);
  CHECK(c.material.shear_modulus == 27260.0);
  CHECK(c.material.yield_stress == 345.0);
  CHECK(c.material.iso_hardening == 250.0);
  CHECK(c.material.grad_hardening == 1000.0);
  CHECK(c.material.grad_length == doctest::Approx(0.0533));
  CHECK(c.material.relax_time == 1.0);
  CHECK(c.material.drag_stress == 500.0);
  CHECK(c.material.rate_exponent == 8.0);
  CHECK(c.material.fracture_energy_ratio == 300.0);
  CHECK(c.material.pf_length == doctest::Approx(0.02));
  CHECK(c.material.penalty == 60000.0);
  CHECK(c.material.crit_plastic_strain == 0.1);
  CHECK(c.material.degradation_exponent == 2.0);
  CHECK(c.material.penalty == d.penalty);
  CHECK(c.inner_bc.kind == MicroBcKind::micro_hard);
  CHECK(c.void_bc.kind == MicroBcKind::micro_free);
  CHECK(c.load.shear_rate == doctest::Approx(0.05));
  CHECK(c.solver.final_tol.at("u").residual == doctest::Approx(1e-6));
}

TEST_CASE("length scale and presets rescale lengths")
{
  const SimulationConfig c = parse_config(std::string("length_scale = 2.0\n") + kGenerated);
  CHECK(c.material.grad_length == doctest::Approx(0.1066));
  CHECK(c.material.pf_length == doctest::Approx(0.04));
  CHECK(c.solver.final_tol.at("u").residual == doctest::Approx(4e-6));

  const SimulationConfig c3 = parse_config(std::string("preset = \"3d\"\n") + kGenerated);
  CHECK(c3.material.grad_length == doctest::Approx(0.1333));
  CHECK(c3.material.pf_length == doctest::Approx(0.08));
  CHECK(thrown_key(std::string("preset = \"4d\"\n") + kGenerated) == "preset");
}

TEST_CASE("invalid values name the offending key")
{
  CHECK(thrown_key(std::string(kGenerated) + "[material]\npf_length = 0.0\n") == "material.pf_length");
  CHECK(thrown_key(std::string(kGenerated) + "[material]\nyield_stress = -1.0\n") == "material.yield_stress");
  CHECK(thrown_key(std::string(kGenerated) + "[material]\nyield_stress = \"x\"\n") == "material.yield_stress");
  CHECK(thrown_key(std::string(kGenerated) + "[material]\ntypo = 1.0\n") == "material.typo");
  CHECK(thrown_key(std::string(kGenerated) + "[boundary.inner]\nkind = \"sticky\"\n") == "boundary.inner.kind");
  CHECK(thrown_key(std::string(kGenerated) + "[boundary.outer]\nkind = \"micro_free\"\n") == "boundary.outer.kind");
  CHECK(thrown_key(std::string(kGenerated) + "[solver]\nmax_iter = 0\n") == "solver.max_iter");
  CHECK(thrown_key(std::string(kGenerated) + "[load]\namplitude = [[0.0, 0.0], [0.0, 1.0]]\n") == "load");
  CHECK(thrown_key("[mesh]\ndim = 2\n") == "mesh.path");
  CHECK(thrown_key("a = [1,") == "<document>");
}

TEST_CASE("boundary kinds map to flexibilities relative to the gradient coefficient")
{
  const SimulationConfig c = parse_config(std::string(kGenerated) + R"(
[boundary.inner]
kind = "damage_coupled"
[boundary.void]
kind = "micro_flexible"
c0_factor = 3.0
)");
  const double unit = 1.0 / c.material.gradient_coefficient();
  CHECK(c.inner_bc.kind == MicroBcKind::micro_flexible);
  CHECK(c.inner_bc.c0 == doctest::Approx(unit));
  CHECK(c.inner_bc.cd == doctest::Approx(20.0 * unit));
  CHECK(c.void_bc.c0 == doctest::Approx(3.0 * unit));
  CHECK(c.void_bc.cd == 0.0);
  CHECK(c.referenced_sets == std::vector<std::string>{"inner", "void"});
}

TEST_CASE("relative mesh paths resolve against the config directory")
{
  const SimulationConfig c = parse_config("[mesh]\npath = \"m.msh\"\n", "/data/run");
  CHECK(c.mesh.path == "/data/run/m.msh");
}

TEST_CASE("serialization is a fixed point")
{
  SimulationConfig c = parse_config("length_scale = 1.5\n" + std::string(kGenerated) + R"(
[material]
yield_stress = 150.0
[boundary.inner]
kind = "damage_coupled"
[load]
amplitude = [[0.0, 0.0], [1.0, 0.02]]
[solver.final.d]
residual = 1e-9
[solver.backup.d]
residual = 1e-9
[output]
cadence = 3
regions.left = [1]
)");
  const std::string once = serialize_config(c);
  const SimulationConfig back = parse_config(once);
  CHECK(serialize_config(back) == once);
  CHECK(back.material.yield_stress == 150.0);
  CHECK(back.inner_bc.cd == doctest::Approx(c.inner_bc.cd).epsilon(1e-14));
  CHECK(back.solver.final_tol.at("d").residual == 1e-9);
  CHECK(back.output.regions.at("left") == std::vector<int>{1});
  CHECK(back.load.amplitude.size() == 2);
  CHECK(back.mesh.seeds.size() == 2);
}
