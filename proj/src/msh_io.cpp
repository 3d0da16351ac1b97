#include "pfcp/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

namespace pfcp
{

ParseError::ParseError(const std::string& section, const std::size_t line, const std::string& what)
    : std::runtime_error("MSH parse error in section $" + section + " (line " + std::to_string(line)
                         + "): " + what),
      section_(section), line_(line)
{
}

namespace
{

struct Token
{
  std::string text;
  std::size_t line;
};

class TokenStream
{
public:
  explicit TokenStream(std::istream& in)
  {
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line))
    {
      ++no;
      // Quoted physical names may contain spaces.
      std::size_t i = 0;
      while (i < line.size())
      {
        if (std::isspace(static_cast<unsigned char>(line[i])))
        {
          ++i;
          continue;
        }
        if (line[i] == '"')
        {
          const std::size_t end = line.find('"', i + 1);
          if (end == std::string::npos)
            throw ParseError("PhysicalNames", no, "unterminated quoted name");
          tokens_.push_back({line.substr(i, end - i + 1), no});
          i = end + 1;
          continue;
        }
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])))
          ++j;
        tokens_.push_back({line.substr(i, j - i), no});
        i = j;
      }
    }
  }

  bool done() const { return pos_ >= tokens_.size(); }
  std::size_t line() const { return done() ? (tokens_.empty() ? 0 : tokens_.back().line) : tokens_[pos_].line; }
  const std::string& peek() const { return tokens_[pos_].text; }

  std::string next(const std::string& section)
  {
    if (done())
      throw ParseError(section, line(), "unexpected end of file");
    return tokens_[pos_++].text;
  }

  template <class T>
  T number(const std::string& section)
  {
    const std::size_t at = line();
    const std::string tok = next(section);
    std::istringstream ss(tok);
    T value{};
    ss >> value;
    if (ss.fail() || !ss.eof())
      throw ParseError(section, at, "expected a number, found '" + tok + "'");
    return value;
  }

  void expect_end(const std::string& section)
  {
    const std::size_t at = line();
    const std::string tok = next(section);
    if (tok != "$End" + section)
      throw ParseError(section, at, "expected $End" + section + ", found '" + tok + "'");
  }

private:
  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
};

int nodes_of_element_type(const int type)
{
  switch (type)
  {
  case 15: return 1;
  case 1: return 2;
  case 2: return 3;
  case 3: return 4;
  case 4: return 4;
  case 5: return 8;
  case 6: return 6;
  case 7: return 5;
  case 8: return 3;
  case 9: return 6;
  case 11: return 10;
  default: return -1;
  }
}

int dim_of_element_type(const int type)
{
  switch (type)
  {
  case 15: return 0;
  case 1:
  case 8: return 1;
  case 2:
  case 3:
  case 9: return 2;
  default: return 3;
  }
}

std::optional<int> grain_label_from_name(const std::string& name)
{
  const std::string prefix = "grain";
  if (name.rfind(prefix, 0) != 0 || name.size() == prefix.size())
    return std::nullopt;
  const std::string digits = name.substr(prefix.size());
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
    return std::nullopt;
  return std::stoi(digits);
}

using EntityKey = std::pair<int, int>; // (dim, tag)

struct RawElement
{
  int dim;
  int type;
  EntityKey entity;
  std::vector<long> node_tags;
};

} // namespace

PolyMesh load_mesh(std::istream& payload)
{
  TokenStream ts(payload);
  std::map<std::pair<int, int>, std::string> physical_names;
  std::map<EntityKey, std::vector<int>> entity_physicals;
  std::unordered_map<long, Vector3> node_coords;
  std::vector<long> node_order;
  std::vector<RawElement> elements;
  bool have_format = false;

  while (!ts.done())
  {
    const std::size_t at = ts.line();
    const std::string header = ts.next("");
    if (header.size() < 2 || header[0] != '$' || header.rfind("$End", 0) == 0)
      throw ParseError(header.empty() ? "?" : header.substr(header[0] == '$' ? 1 : 0), at,
                       "malformed section header '" + header + "'");
    const std::string section = header.substr(1);

    if (section == "MeshFormat")
    {
      const double version = ts.number<double>(section);
      const int file_type = ts.number<int>(section);
      ts.number<int>(section);
      if (version < 4.0 || version >= 5.0)
        throw ParseError(section, at, "unsupported MSH version (4.x required)");
      if (file_type != 0)
        throw ParseError(section, at, "binary MSH files are not supported");
      ts.expect_end(section);
      have_format = true;
    }
    else if (section == "PhysicalNames")
    {
      const int n = ts.number<int>(section);
      for (int i = 0; i < n; ++i)
      {
        const int dim = ts.number<int>(section);
        const int tag = ts.number<int>(section);
        std::string name = ts.next(section);
        if (name.size() >= 2 && name.front() == '"' && name.back() == '"')
          name = name.substr(1, name.size() - 2);
        physical_names[{dim, tag}] = name;
      }
      ts.expect_end(section);
    }
    else if (section == "Entities")
    {
      int counts[4];
      for (int& c : counts)
        c = ts.number<int>(section);
      for (int dim = 0; dim < 4; ++dim)
        for (int i = 0; i < counts[dim]; ++i)
        {
          const int tag = ts.number<int>(section);
          const int n_coords = dim == 0 ? 3 : 6;
          for (int k = 0; k < n_coords; ++k)
            ts.number<double>(section);
          const int n_phys = ts.number<int>(section);
          auto& phys = entity_physicals[{dim, tag}];
          for (int k = 0; k < n_phys; ++k)
            phys.push_back(std::abs(ts.number<int>(section)));
          if (dim > 0)
          {
            const int n_bound = ts.number<int>(section);
            for (int k = 0; k < n_bound; ++k)
              ts.number<int>(section);
          }
        }
      ts.expect_end(section);
    }
    else if (section == "Nodes")
    {
      const long n_blocks = ts.number<long>(section);
      const long n_nodes = ts.number<long>(section);
      ts.number<long>(section);
      ts.number<long>(section);
      long read = 0;
      for (long b = 0; b < n_blocks; ++b)
      {
        const int entity_dim = ts.number<int>(section);
        ts.number<int>(section);
        const int parametric = ts.number<int>(section);
        const long count = ts.number<long>(section);
        std::vector<long> tags(count);
        for (auto& t : tags)
          t = ts.number<long>(section);
        for (long i = 0; i < count; ++i)
        {
          Vector3 x;
          for (int k = 0; k < 3; ++k)
            x(k) = ts.number<double>(section);
          if (parametric)
            for (int k = 0; k < entity_dim; ++k)
              ts.number<double>(section);
          if (!node_coords.emplace(tags[i], x).second)
            throw ParseError(section, ts.line(), "duplicate node tag " + std::to_string(tags[i]));
          node_order.push_back(tags[i]);
        }
        read += count;
      }
      if (read != n_nodes)
        throw ParseError(section, ts.line(), "node count mismatch");
      ts.expect_end(section);
    }
    else if (section == "Elements")
    {
      const long n_blocks = ts.number<long>(section);
      const long n_elems = ts.number<long>(section);
      ts.number<long>(section);
      ts.number<long>(section);
      long read = 0;
      for (long b = 0; b < n_blocks; ++b)
      {
        const int entity_dim = ts.number<int>(section);
        const int entity_tag = ts.number<int>(section);
        const int type = ts.number<int>(section);
        const long count = ts.number<long>(section);
        const int nn = nodes_of_element_type(type);
        if (nn < 0)
          throw ParseError(section, ts.line(), "unsupported element type " + std::to_string(type));
        for (long i = 0; i < count; ++i)
        {
          ts.number<long>(section);
          RawElement e{dim_of_element_type(type), type, {entity_dim, entity_tag}, {}};
          e.node_tags.resize(nn);
          for (auto& t : e.node_tags)
            t = ts.number<long>(section);
          elements.push_back(std::move(e));
        }
        read += count;
      }
      if (read != n_elems)
        throw ParseError(section, ts.line(), "element count mismatch");
      ts.expect_end(section);
    }
    else
    {
      // Unknown sections are skipped verbatim.
      while (true)
      {
        const std::string tok = ts.next(section);
        if (tok == "$End" + section)
          break;
      }
    }
  }

  if (!have_format)
    throw ParseError("MeshFormat", 0, "missing $MeshFormat section");

  int dim = 0;
  for (const auto& e : elements)
    if (e.type == 2 || e.type == 4)
      dim = std::max(dim, e.dim);
  if (dim < 2)
    throw TopologyError("mesh contains no triangles or tetrahedra");
  for (const auto& e : elements)
    if (e.dim == dim && e.type != (dim == 2 ? 2 : 4))
      throw ParseError("Elements", 0, "only linear simplices are supported as cells");

  PolyMesh mesh;
  mesh.dim = dim;

  std::unordered_map<long, int> node_index;
  std::map<int, int> grain_index;
  std::map<std::vector<int>, std::string> tagged_facets;

  const auto lookup_node = [&](long tag) {
    auto it = node_index.find(tag);
    if (it != node_index.end())
      return it->second;
    auto c = node_coords.find(tag);
    if (c == node_coords.end())
      throw TopologyError("element references unknown node " + std::to_string(tag));
    const int id = static_cast<int>(mesh.nodes.size());
    mesh.nodes.push_back(c->second);
    node_index.emplace(tag, id);
    return id;
  };

  std::vector<int> cell_label;
  for (const auto& e : elements)
  {
    if (e.dim != dim)
      continue;
    std::optional<int> label;
    auto phys = entity_physicals.find(e.entity);
    if (phys != entity_physicals.end())
      for (int p : phys->second)
      {
        auto name = physical_names.find({dim, p});
        if (name != physical_names.end())
          if (auto l = grain_label_from_name(name->second))
            label = l;
      }
    if (!label)
      throw TopologyError("cell on entity " + std::to_string(e.entity.second) + " lacks a grain<i> physical group");
    std::array<int, 4> conn{-1, -1, -1, -1};
    for (int k = 0; k <= dim; ++k)
      conn[k] = lookup_node(e.node_tags[k]);
    mesh.cells.push_back(conn);
    cell_label.push_back(*label);
    grain_index.emplace(*label, 0);
  }

  for (const auto& e : elements)
  {
    if (e.dim != dim - 1)
      continue;
    auto phys = entity_physicals.find(e.entity);
    if (phys == entity_physicals.end())
      continue;
    for (int p : phys->second)
    {
      auto name = physical_names.find({dim - 1, p});
      if (name == physical_names.end() || (name->second != kOuterFacets && name->second != kVoidFacets))
        continue;
      std::vector<int> key;
      bool known = true;
      for (long t : e.node_tags)
      {
        auto it = node_index.find(t);
        if (it == node_index.end())
        {
          known = false;
          break;
        }
        key.push_back(it->second);
      }
      if (!known)
        continue;
      std::sort(key.begin(), key.end());
      tagged_facets[key] = name->second;
    }
  }

  int next = 0;
  for (auto& [label, index] : grain_index)
  {
    index = next++;
    mesh.grain_labels.push_back(label);
  }
  mesh.grain_of_cell.reserve(cell_label.size());
  for (int l : cell_label)
    mesh.grain_of_cell.push_back(grain_index.at(l));
  mesh.origin_node.resize(mesh.nodes.size());
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
    mesh.origin_node[i] = static_cast<int>(i);

  classify_facets(mesh);

  // Explicit facet tags override the geometric outer/void classification.
  if (!tagged_facets.empty())
  {
    std::vector<FacetRef> boundary;
    for (const auto& name : {kOuterFacets, kVoidFacets})
    {
      auto it = mesh.facet_sets.find(name);
      if (it != mesh.facet_sets.end())
        boundary.insert(boundary.end(), it->second.begin(), it->second.end());
    }
    std::map<std::string, std::vector<FacetRef>> reclassified;
    for (const FacetRef& f : boundary)
    {
      std::vector<int> key = mesh.facet_nodes(f.cell, f.local_facet);
      std::sort(key.begin(), key.end());
      auto tag = tagged_facets.find(key);
      const bool was_outer = std::any_of(mesh.facet_sets[kOuterFacets].begin(), mesh.facet_sets[kOuterFacets].end(),
                                         [&](const FacetRef& o) { return o.cell == f.cell && o.local_facet == f.local_facet; });
      reclassified[tag != tagged_facets.end() ? tag->second : (was_outer ? kOuterFacets : kVoidFacets)].push_back(f);
    }
    mesh.facet_sets.erase(kOuterFacets);
    mesh.facet_sets.erase(kVoidFacets);
    for (auto& [name, set] : reclassified)
      mesh.facet_sets[name] = std::move(set);
  }
  return mesh;
}

PolyMesh load_mesh_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw std::ios_base::failure("cannot open mesh file '" + path + "'");
  return load_mesh(in);
}

void write_msh(const PolyMesh& mesh, std::ostream& out)
{
  const int dim = mesh.dim;
  const int cell_type = dim == 2 ? 2 : 4;
  const int facet_type = dim == 2 ? 1 : 2;
  const Vector3 lo = mesh.bbox_min();
  const Vector3 hi = mesh.bbox_max();
  const std::size_t n_grains = mesh.num_grains();
  const auto outer = mesh.facet_sets.find(kOuterFacets);
  const auto voids = mesh.facet_sets.find(kVoidFacets);
  const bool has_outer = outer != mesh.facet_sets.end() && !outer->second.empty();
  const bool has_void = voids != mesh.facet_sets.end() && !voids->second.empty();

  out << std::setprecision(17);
  out << "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n";
  out << "$PhysicalNames\n" << n_grains + has_outer + has_void << "\n";
  for (std::size_t g = 0; g < n_grains; ++g)
    out << dim << " " << g + 1 << " \"grain" << mesh.grain_labels[g] << "\"\n";
  if (has_outer)
    out << dim - 1 << " " << n_grains + 1 << " \"" << kOuterFacets << "\"\n";
  if (has_void)
    out << dim - 1 << " " << n_grains + 2 << " \"" << kVoidFacets << "\"\n";
  out << "$EndPhysicalNames\n";

  const auto bbox = [&](std::ostream& o) {
    o << lo(0) << " " << lo(1) << " " << lo(2) << " " << hi(0) << " " << hi(1) << " " << hi(2);
  };
  int counts[4] = {0, 0, 0, 0};
  counts[dim] = static_cast<int>(n_grains);
  counts[dim - 1] = has_outer + has_void;
  out << "$Entities\n" << counts[0] << " " << counts[1] << " " << counts[2] << " " << counts[3] << "\n";
  if (dim - 1 == 1 || dim - 1 == 2)
  {
    if (has_outer)
    {
      out << 1 << " ";
      bbox(out);
      out << " 1 " << n_grains + 1 << " 0\n";
    }
    if (has_void)
    {
      out << 2 << " ";
      bbox(out);
      out << " 1 " << n_grains + 2 << " 0\n";
    }
  }
  for (std::size_t g = 0; g < n_grains; ++g)
  {
    out << g + 1 << " ";
    bbox(out);
    out << " 1 " << g + 1 << " 0\n";
  }
  out << "$EndEntities\n";

  const std::size_t nn = mesh.num_nodes();
  out << "$Nodes\n1 " << nn << " 1 " << nn << "\n";
  out << dim << " 1 0 " << nn << "\n";
  for (std::size_t i = 0; i < nn; ++i)
    out << i + 1 << "\n";
  for (const auto& x : mesh.nodes)
    out << x(0) << " " << x(1) << " " << x(2) << "\n";
  out << "$EndNodes\n";

  std::vector<std::vector<int>> cells_of_grain(n_grains);
  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
    cells_of_grain[mesh.grain_of_cell[c]].push_back(static_cast<int>(c));
  const std::size_t n_outer = has_outer ? outer->second.size() : 0;
  const std::size_t n_void = has_void ? voids->second.size() : 0;
  const std::size_t n_elems = mesh.num_cells() + n_outer + n_void;
  const std::size_t n_blocks = n_grains + has_outer + has_void;
  out << "$Elements\n" << n_blocks << " " << n_elems << " 1 " << n_elems << "\n";
  std::size_t tag = 1;
  for (std::size_t g = 0; g < n_grains; ++g)
  {
    out << dim << " " << g + 1 << " " << cell_type << " " << cells_of_grain[g].size() << "\n";
    for (int c : cells_of_grain[g])
    {
      out << tag++;
      for (int k = 0; k <= dim; ++k)
        out << " " << mesh.cells[c][k] + 1;
      out << "\n";
    }
  }
  const auto write_facets = [&](const std::vector<FacetRef>& set, int entity) {
    out << dim - 1 << " " << entity << " " << facet_type << " " << set.size() << "\n";
    for (const FacetRef& f : set)
    {
      out << tag++;
      for (int n : mesh.facet_nodes(f.cell, f.local_facet))
        out << " " << n + 1;
      out << "\n";
    }
  };
  if (has_outer)
    write_facets(outer->second, 1);
  if (has_void)
    write_facets(voids->second, 2);
  out << "$EndElements\n";
}

} // namespace pfcp
