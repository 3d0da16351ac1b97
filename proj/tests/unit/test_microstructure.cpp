#include "pfcp/grains.hpp"
#include "pfcp/mesh.hpp"
#include "pfcp/mesh_gen.hpp"

#include <doctest.h>

#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace pfcp;

namespace
{

// Writes a minimal MSH 4.1 file: one surface entity per grain.
std::string msh_2d(const std::vector<Vector3>& nodes, const std::vector<std::array<int, 3>>& tris,
                   const std::vector<int>& grain_label, bool tag_grains = true)
{
  std::set<int> labels(grain_label.begin(), grain_label.end());
  std::ostringstream o;
  o << "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n";
  if (tag_grains)
  {
    o << "$PhysicalNames\n" << labels.size() << "\n";
    for (int l : labels)
      o << "2 " << l << " \"grain" << l << "\"\n";
    o << "$EndPhysicalNames\n";
  }
  o << "$Entities\n0 0 " << labels.size() << " 0\n";
  for (int l : labels)
    o << l << " 0 0 0 1 1 0 " << (tag_grains ? "1 " + std::to_string(l) : std::string("0")) << " 0\n";
  o << "$EndEntities\n";
  o << "$Nodes\n1 " << nodes.size() << " 1 " << nodes.size() << "\n2 " << *labels.begin() << " 0 " << nodes.size()
    << "\n";
  for (std::size_t i = 0; i < nodes.size(); ++i)
    o << i + 1 << "\n";
  for (const auto& x : nodes)
    o << x(0) << " " << x(1) << " " << x(2) << "\n";
  o << "$EndNodes\n";
  o << "$Elements\n" << labels.size() << " " << tris.size() << " 1 " << tris.size() << "\n";
  int tag = 1;
  for (int l : labels)
  {
    int count = 0;
    for (int g : grain_label)
      count += g == l;
    o << "2 " << l << " 2 " << count << "\n";
    for (std::size_t t = 0; t < tris.size(); ++t)
      if (grain_label[t] == l)
        o << tag++ << " " << tris[t][0] + 1 << " " << tris[t][1] + 1 << " " << tris[t][2] + 1 << "\n";
  }
  o << "$EndElements\n";
  return o.str();
}

PolyMesh parse(const std::string& text)
{
  std::istringstream in(text);
  return load_mesh(in);
}

// Unit square split at x = 0.5 into two grains; nodes on x = 0, 0.5, 1 and y = 0, 0.5, 1.
PolyMesh strip_bicrystal()
{
  std::vector<Vector3> nodes;
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i)
      nodes.emplace_back(0.5 * i, 0.5 * j, 0.0);
  std::vector<std::array<int, 3>> tris;
  std::vector<int> grains;
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i)
    {
      const int a = 3 * j + i;
      tris.push_back({a, a + 1, a + 4});
      tris.push_back({a, a + 4, a + 3});
      grains.push_back(i + 1);
      grains.push_back(i + 1);
    }
  return parse(msh_2d(nodes, tris, grains));
}

// Four triangles fanned around (1,1); grains 1,1,2,3.
PolyMesh triple_junction()
{
  const std::vector<Vector3> nodes{{1, 1, 0}, {0, 0, 0}, {2, 0, 0}, {2, 2, 0}, {0, 2, 0}};
  const std::vector<std::array<int, 3>> tris{{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 1}};
  return parse(msh_2d(nodes, tris, {1, 1, 2, 3}));
}

} // namespace

TEST_CASE("two-triangle unit square")
{
  const std::vector<Vector3> nodes{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  const PolyMesh m = parse(msh_2d(nodes, {{0, 1, 2}, {0, 2, 3}}, {1, 1}));
  CHECK(m.dim == 2);
  CHECK(m.num_grains() == 1);
  CHECK(m.grain_labels[0] == 1);
  CHECK(m.facet_sets.at(kOuterFacets).size() == 4);
  CHECK(m.facet_sets.at(kInnerFacets).empty());
  CHECK(m.facet_sets.at(kVoidFacets).empty());

  bool found_top = false;
  for (const FacetRef& f : m.facet_sets.at(kOuterFacets))
  {
    CHECK(std::abs(f.normal.norm() - 1.0) < 1e-12);
    const auto fn = m.facet_nodes(f.cell, f.local_facet);
    if (m.nodes[fn[0]](1) == 1.0 && m.nodes[fn[1]](1) == 1.0)
    {
      found_top = true;
      CHECK((f.normal - Vector3(0, 1, 0)).norm() < 1e-15);
    }
  }
  CHECK(found_top);
}

TEST_CASE("bicrystal strip inner facets carry opposite unit normals")
{
  const PolyMesh m = strip_bicrystal();
  CHECK(m.num_grains() == 2);
  const auto& inner = m.facet_sets.at(kInnerFacets);
  REQUIRE(inner.size() == 4);
  for (const FacetRef& f : inner)
  {
    const int g = m.grain_of_cell[f.cell];
    CHECK(m.grain_of_cell[f.neighbor] != g);
    const Vector3 expected = g == 0 ? Vector3(1, 0, 0) : Vector3(-1, 0, 0);
    CHECK((f.normal - expected).norm() < 1e-15);
  }
  const auto normals = facet_normals(m);
  Vector3 sum = Vector3::Zero();
  for (const auto& n : normals.at(kInnerFacets))
    sum += n;
  CHECK(sum.norm() < 1e-14);
}

TEST_CASE("parse errors name the section")
{
  const std::string bad = "$MeshFormat\n4.1 0 8\n$EndMshFormat\n";
  try
  {
    parse(bad);
    FAIL("expected ParseError");
  }
  catch (const ParseError& e)
  {
    CHECK(e.section() == "MeshFormat");
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("MeshFormat") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n"), ParseError);
  CHECK_THROWS_AS(parse("$Nodes\n1 1 1 1\n2 1 0 1\n1\n0 0 x\n$EndNodes\n"), ParseError);
}

TEST_CASE("cells without a grain group are rejected")
{
  const std::vector<Vector3> nodes{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}};
  CHECK_THROWS_AS(parse(msh_2d(nodes, {{0, 1, 2}}, {1}, false)), TopologyError);
}

TEST_CASE("unknown sections are skipped")
{
  const std::vector<Vector3> nodes{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}};
  const std::string text = "$Comments\nanything $Nodes goes\n$EndComments\n" + msh_2d(nodes, {{0, 1, 2}}, {4});
  const PolyMesh m = parse(text);
  CHECK(m.grain_labels == std::vector<int>{4});
}

TEST_CASE("tetrahedral facet normal by cross product")
{
  PolyMesh m;
  m.dim = 3;
  m.nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  m.cells = {{0, 1, 2, 3}};
  m.grain_of_cell = {0};
  m.grain_labels = {1};
  m.origin_node = {0, 1, 2, 3};
  const FacetGeometry g = facet_geometry(m, 0, 0);
  CHECK((g.normal - Vector3(1, 1, 1) / std::sqrt(3.0)).norm() < 1e-15);
  CHECK(g.measure == doctest::Approx(std::sqrt(3.0) / 2.0).epsilon(1e-15));
  const FacetGeometry bottom = facet_geometry(m, 0, 3);
  CHECK((bottom.normal - Vector3(0, 0, -1)).norm() < 1e-15);
  CHECK(bottom.measure == doctest::Approx(0.5));
  classify_facets(m);
  CHECK(m.facet_sets.at(kOuterFacets).size() == 3);
  CHECK(m.facet_sets.at(kVoidFacets).size() == 1);
}

TEST_CASE("degenerate facet")
{
  PolyMesh m;
  m.dim = 2;
  m.nodes = {{0, 0, 0}, {1, 0, 0}, {1, 0, 0}};
  m.cells = {{0, 1, 2, -1}};
  m.grain_of_cell = {0};
  m.grain_labels = {1};
  CHECK_THROWS_AS(facet_geometry(m, 0, 0), DegenerateFacet);
}

TEST_CASE("duplication: single grain is the identity")
{
  const std::vector<Vector3> nodes{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
  const PolyMesh m = parse(msh_2d(nodes, {{0, 1, 2}, {0, 2, 3}}, {1, 1}));
  const auto r = duplicate_grain_boundary_nodes(m);
  CHECK(r.constraints.empty());
  CHECK(r.mesh.num_nodes() == 4);
  CHECK(r.mesh.cells == m.cells);
}

TEST_CASE("duplication: bicrystal strip")
{
  const PolyMesh m = strip_bicrystal();
  const auto r = duplicate_grain_boundary_nodes(m);
  CHECK(r.mesh.num_nodes() == m.num_nodes() + 3);
  CHECK(r.constraints.pairs.size() == 3);
  for (const auto& [replica, master] : r.constraints.pairs)
  {
    CHECK(r.constraints.master_of[replica] == master);
    CHECK(r.constraints.master_of[master] == master);
    CHECK(r.mesh.nodes[replica] == r.mesh.nodes[master]);
    CHECK(r.mesh.origin_node[replica] == master);
    CHECK(m.nodes[master](0) == 0.5);
  }
  // No node is referenced by cells of two grains any more.
  std::vector<std::set<int>> grains(r.mesh.num_nodes());
  for (std::size_t c = 0; c < r.mesh.num_cells(); ++c)
    for (int k = 0; k < 3; ++k)
      grains[r.mesh.cells[c][k]].insert(r.mesh.grain_of_cell[c]);
  for (const auto& g : grains)
    CHECK(g.size() == 1);
}

TEST_CASE("duplication: triple junction")
{
  const PolyMesh m = triple_junction();
  REQUIRE(m.num_grains() == 3);
  const auto r = duplicate_grain_boundary_nodes(m);
  int center_pairs = 0;
  for (const auto& [replica, master] : r.constraints.pairs)
    if (master == 0)
      ++center_pairs;
  CHECK(center_pairs == 2);
  // Junction: 2 replicas; three corner nodes between different grains: 1 each.
  CHECK(r.constraints.pairs.size() == 5);
  CHECK(r.mesh.num_nodes() == 10);
  for (std::size_t n = 0; n < r.mesh.num_nodes(); ++n)
  {
    const int master = r.constraints.master_of[n];
    CHECK(r.constraints.master_of[master] == master);
  }
}

TEST_CASE("duplication reproduces a continuous interpolant on replicas")
{
  GridSpec grid;
  grid.size = Vector3(1.0, 1.0, 0.0);
  grid.divisions = {12, 12, 1};
  const PolyMesh m = generate_grid_mesh(grid, random_seeds(grid, 5, 3));
  const auto r = duplicate_grain_boundary_nodes(m);
  CHECK(!r.constraints.empty());
  std::vector<double> f(r.mesh.num_nodes());
  for (std::size_t n = 0; n < f.size(); ++n)
    f[n] = r.mesh.nodes[n](0);
  for (const auto& [replica, master] : r.constraints.pairs)
    CHECK(f[replica] == f[master]);
}

TEST_CASE("grain volumes sum to the mesh volume")
{
  GridSpec grid;
  grid.dim = 3;
  grid.size = Vector3(1.0, 0.5, 0.25);
  grid.divisions = {6, 4, 2};
  const PolyMesh m = generate_grid_mesh(grid, random_seeds(grid, 4, 1));
  const auto regions = build_grain_regions(m, {});
  double total = 0.0;
  for (const auto& g : regions)
    for (int c : g.cells)
      total += m.cell_measure(c);
  CHECK(total == doctest::Approx(0.125).epsilon(1e-10));
  CHECK(m.facet_sets.at(kOuterFacets).size() == 2 * (2 * (6 * 4 + 6 * 2 + 4 * 2)));
  CHECK(m.facet_sets.at(kVoidFacets).empty());
}

TEST_CASE("generated grid with a void")
{
  GridSpec grid;
  grid.size = Vector3(1.0, 1.0, 0.0);
  grid.divisions = {20, 20, 1};
  const PolyMesh m = generate_grid_mesh(grid, {Vector3(0.25, 0.5, 0), Vector3(0.75, 0.5, 0)},
                                        {{Vector3(0.5, 0.5, 0), 0.15}});
  CHECK(m.num_grains() == 2);
  CHECK(!m.facet_sets.at(kVoidFacets).empty());
  for (const FacetRef& f : m.facet_sets.at(kVoidFacets))
  {
    const Vector3 c = m.cell_centroid(f.cell);
    CHECK((c - Vector3(0.5, 0.5, 0)).norm() < 0.3);
  }
}

TEST_CASE("msh round trip")
{
  GridSpec grid;
  grid.size = Vector3(2.0, 1.0, 0.0);
  grid.divisions = {8, 4, 1};
  const PolyMesh m = generate_grid_mesh(grid, {Vector3(0.5, 0.5, 0), Vector3(1.5, 0.5, 0)},
                                        {{Vector3(1.0, 0.5, 0), 0.2}});
  std::stringstream buffer;
  write_msh(m, buffer);
  const PolyMesh back = load_mesh(buffer);
  CHECK(back.num_nodes() == m.num_nodes());
  CHECK(back.num_cells() == m.num_cells());
  CHECK(back.grain_labels == m.grain_labels);
  for (const auto& name : {kOuterFacets, kInnerFacets, kVoidFacets})
    CHECK(back.facet_sets.at(name).size() == m.facet_sets.at(name).size());
}

TEST_CASE("rotation of slip systems")
{
  const auto base = fcc_slip_systems();
  const auto same = rotate_slip_systems(Vector3::Zero());
  for (int a = 0; a < 12; ++a)
  {
    CHECK(same[a].direction == base[a].direction);
    CHECK(same[a].normal == base[a].normal);
  }
  const Vector3 expected = Vector3(-1, -1, 0) / std::sqrt(2.0);
  CHECK((rotate_slip_systems(Vector3(0, 0, 1))[0].direction - expected).norm() < 1e-15);
  CHECK((rotate_slip_systems(Vector3(0, 0, 90), RodriguesConvention::axis_angle_deg)[0].direction - expected).norm()
        < 1e-15);
}

TEST_CASE("rotations preserve lengths, orthogonality and pairwise angles")
{
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> u(-30.0, 30.0);
  const auto base = fcc_slip_systems();
  std::vector<Vector3> ref;
  for (const auto& s : base)
  {
    ref.push_back(s.direction);
    ref.push_back(s.normal);
  }
  for (int n = 0; n < 200; ++n)
    for (auto conv : {RodriguesConvention::vector, RodriguesConvention::axis_angle_deg})
    {
      const Vector3 r(u(rng), u(rng), u(rng));
      const Tensor2 R = rotation_from_rodrigues(conv == RodriguesConvention::vector ? r / 30.0 : r, conv);
      REQUIRE((R.transpose() * R - Tensor2::Identity()).norm() < 1e-13);
      const auto rot = rotate_slip_systems(conv == RodriguesConvention::vector ? r / 30.0 : r, conv);
      std::vector<Vector3> v;
      for (const auto& s : rot)
      {
        REQUIRE(std::abs(s.direction.norm() - 1.0) < 1e-12);
        REQUIRE(std::abs(s.normal.norm() - 1.0) < 1e-12);
        REQUIRE(std::abs(s.direction.dot(s.normal)) < 1e-12);
        v.push_back(s.direction);
        v.push_back(s.normal);
      }
      for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j)
          REQUIRE(std::abs(v[i].dot(v[j]) - ref[i].dot(ref[j])) < 1e-12);
    }
}
