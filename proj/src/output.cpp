#include "pfcp/output.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pfcp
{

namespace
{

std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void scalar_array(std::ostream& o, const std::string& name, const std::vector<double>& values)
{
  o << "        <DataArray type=\"Float64\" Name=\"" << name << "\" format=\"ascii\">\n         ";
  for (const double v : values)
    o << ' ' << fmt17(v);
  o << "\n        </DataArray>\n";
}

void vector_array(std::ostream& o, const std::string& name, const std::vector<Vector3>& values)
{
  o << "        <DataArray type=\"Float64\" Name=\"" << name
    << "\" NumberOfComponents=\"3\" format=\"ascii\">\n         ";
  for (const Vector3& v : values)
    o << ' ' << fmt17(v(0)) << ' ' << fmt17(v(1)) << ' ' << fmt17(v(2));
  o << "\n        </DataArray>\n";
}

std::string attribute(const std::string& tag, const std::string& name)
{
  const std::string key = name + "=\"";
  const auto p = tag.find(key);
  if (p == std::string::npos)
    return "";
  const auto start = p + key.size();
  return tag.substr(start, tag.find('"', start) - start);
}

} // namespace

void OutputFrame::validate() const
{
  const std::size_t nc = cells.size();
  if (u.size() != points.size() || d.size() != points.size())
    throw std::invalid_argument("nodal fields do not match the point count");
  for (const auto* v : {&eps_p, &g_e, &phi, &S12, &k_sum, &measure})
    if (v->size() != nc)
      throw std::invalid_argument("cell fields do not match the cell count");
  if (g_cell.size() != nc || grain.size() != nc)
    throw std::invalid_argument("cell fields do not match the cell count");
  for (const auto& c : cells)
    for (int k = 0; k <= dim; ++k)
      if (c[k] < 0 || c[k] >= static_cast<int>(points.size()))
        throw std::invalid_argument("cell references a missing point");
}

OutputFrame make_frame(const CoupledModel& model, const int step,
                       const std::map<std::string, std::vector<int>>& regions)
{
  const PolyMesh& mesh = model.mesh();
  const ConstraintSet& cs = model.constraints();
  const int dim = mesh.dim;
  OutputFrame f;
  f.step = step;
  f.time = model.time();
  f.top_displacement = model.top_displacement();
  f.dim = dim;

  std::vector<int> merged(mesh.num_nodes(), -1);
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n)
  {
    const int m = cs.master_of.empty() ? static_cast<int>(n) : cs.master_of[n];
    if (m != static_cast<int>(n))
      continue;
    merged[n] = static_cast<int>(f.points.size());
    f.points.push_back(mesh.nodes[n]);
    Vector3 u = Vector3::Zero();
    for (int i = 0; i < dim; ++i)
      u(i) = model.u_at(static_cast<int>(n), i);
    f.u.push_back(u);
    f.d.push_back(model.d_at(static_cast<int>(n)));
  }
  for (std::size_t n = 0; n < mesh.num_nodes(); ++n)
    if (merged[n] < 0)
      merged[n] = merged[cs.master_of[n]];

  for (std::size_t c = 0; c < mesh.num_cells(); ++c)
  {
    std::array<int, 4> cell{-1, -1, -1, -1};
    Vector3 g = Vector3::Zero();
    for (int k = 0; k <= dim; ++k)
    {
      const int n = mesh.cells[c][k];
      cell[k] = merged[n];
      for (int i = 0; i < dim; ++i)
        g(i) += model.g_at(n, i) / (dim + 1);
    }
    f.cells.push_back(cell);
    f.g_cell.push_back(g);
    f.grain.push_back(mesh.grain_labels[mesh.grain_of_cell[c]]);
    f.measure.push_back(mesh.cell_measure(static_cast<int>(c)));
  }
  f.eps_p = model.cell_values(Quantity::eps_p);
  f.g_e = model.cell_values(Quantity::g_e);
  f.phi = model.cell_values(Quantity::phi);
  f.S12 = model.cell_values(Quantity::S12);
  f.k_sum = model.cell_values(Quantity::k_sum);

  f.region_S12["all"] = model.volume_average(model.region_cells({}), Quantity::S12);
  for (const auto& [name, labels] : regions)
    f.region_S12[name] = model.volume_average(model.region_cells(labels), Quantity::S12);
  return f;
}

void write_vtu(const OutputFrame& f, std::ostream& o)
{
  f.validate();
  const int nn = f.dim + 1;
  o << "<?xml version=\"1.0\"?>\n"
    << "<VTKFile type=\"UnstructuredGrid\" version=\"1.0\" byte_order=\"LittleEndian\">\n"
    << "  <UnstructuredGrid>\n"
    << "    <FieldData>\n"
    << "      <DataArray type=\"Float64\" Name=\"TIME\" NumberOfTuples=\"1\" format=\"ascii\"> " << fmt17(f.time)
    << " </DataArray>\n"
    << "      <DataArray type=\"Int32\" Name=\"STEP\" NumberOfTuples=\"1\" format=\"ascii\"> " << f.step
    << " </DataArray>\n"
    << "    </FieldData>\n"
    << "    <Piece NumberOfPoints=\"" << f.points.size() << "\" NumberOfCells=\"" << f.cells.size() << "\">\n";

  o << "      <Points>\n";
  vector_array(o, "coordinates", f.points);
  o << "      </Points>\n";

  o << "      <Cells>\n        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n         ";
  for (const auto& c : f.cells)
    for (int k = 0; k < nn; ++k)
      o << ' ' << c[k];
  o << "\n        </DataArray>\n        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n         ";
  for (std::size_t c = 0; c < f.cells.size(); ++c)
    o << ' ' << (c + 1) * nn;
  o << "\n        </DataArray>\n        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n         ";
  for (std::size_t c = 0; c < f.cells.size(); ++c)
    o << ' ' << (f.dim == 2 ? 5 : 10);
  o << "\n        </DataArray>\n      </Cells>\n";

  o << "      <PointData Vectors=\"u\" Scalars=\"d\">\n";
  vector_array(o, "u", f.u);
  scalar_array(o, "d", f.d);
  o << "      </PointData>\n";

  o << "      <CellData Scalars=\"g_e\">\n";
  vector_array(o, "g", f.g_cell);
  scalar_array(o, "eps_p", f.eps_p);
  scalar_array(o, "g_e", f.g_e);
  scalar_array(o, "phi", f.phi);
  scalar_array(o, "S12", f.S12);
  scalar_array(o, "k_sum", f.k_sum);
  scalar_array(o, "measure", f.measure);
  std::vector<double> grain(f.grain.begin(), f.grain.end());
  scalar_array(o, "grain", grain);
  o << "      </CellData>\n    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n";
}

void write_vtu_file(const OutputFrame& frame, const std::string& path)
{
  std::ofstream out(path);
  if (!out)
    throw IOError("cannot write '" + path + "'");
  write_vtu(frame, out);
  if (!out)
    throw IOError("write to '" + path + "' failed");
}

VtuData read_vtu_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in)
    throw IOError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  VtuData out;
  std::vector<double> connectivity, offsets;
  std::string section;
  std::size_t pos = 0;
  for (;;)
  {
    const std::size_t open = text.find('<', pos);
    if (open == std::string::npos)
      break;
    const std::size_t close = text.find('>', open);
    const std::string tag = text.substr(open, close - open + 1);
    pos = close + 1;
    for (const char* s : {"Points", "Cells", "PointData", "CellData", "FieldData"})
      if (tag.rfind(std::string("<") + s, 0) == 0 && (tag[1 + std::strlen(s)] == '>' || tag[1 + std::strlen(s)] == ' '))
        section = s;
    if (tag.rfind("<DataArray", 0) != 0)
      continue;
    const std::size_t end = text.find("</DataArray>", pos);
    std::istringstream body(text.substr(pos, end - pos));
    pos = end;
    std::vector<double> values;
    for (double v; body >> v;)
      values.push_back(v);
    const std::string name = attribute(tag, "Name");
    if (section == "Points")
      for (std::size_t i = 0; i + 2 < values.size(); i += 3)
        out.points.emplace_back(values[i], values[i + 1], values[i + 2]);
    else if (section == "Cells" && name == "connectivity")
      connectivity = values;
    else if (section == "Cells" && name == "offsets")
      offsets = values;
    else if (section == "PointData")
      out.point_data[name] = values;
    else if (section == "CellData")
      out.cell_data[name] = values;
  }
  std::size_t start = 0;
  for (const double off : offsets)
  {
    std::vector<int> cell;
    for (std::size_t k = start; k < static_cast<std::size_t>(off); ++k)
      cell.push_back(static_cast<int>(connectivity.at(k)));
    out.cells.push_back(cell);
    start = static_cast<std::size_t>(off);
  }
  return out;
}

void write_pvd(const std::vector<std::pair<double, std::string>>& entries, const std::string& path)
{
  std::ofstream o(path);
  if (!o)
    throw IOError("cannot write '" + path + "'");
  o << "<?xml version=\"1.0\"?>\n<VTKFile type=\"Collection\" version=\"1.0\">\n  <Collection>\n";
  for (const auto& [t, file] : entries)
    o << "    <DataSet timestep=\"" << fmt17(t) << "\" part=\"0\" file=\"" << file << "\"/>\n";
  o << "  </Collection>\n</VTKFile>\n";
}

SummaryCsv::SummaryCsv(const std::string& path, const std::vector<std::string>& regions, const bool append)
    : path_(path), regions_(regions)
{
  if (append && std::filesystem::exists(path))
    return;
  std::ofstream o(path);
  if (!o)
    throw IOError("cannot write '" + path + "'");
  o << "step,time,top_displacement";
  for (const std::string& r : regions_)
    o << ",S12_" << r;
  o << "\n";
}

void SummaryCsv::write_row(const OutputFrame& frame)
{
  std::ofstream o(path_, std::ios::app);
  if (!o)
    throw IOError("cannot append to '" + path_ + "'");
  o << frame.step << ',' << fmt17(frame.time) << ',' << fmt17(frame.top_displacement);
  for (const std::string& r : regions_)
    o << ',' << fmt17(frame.region_S12.at(r));
  o << "\n";
  if (!o)
    throw IOError("write to '" + path_ + "' failed");
}

std::string frame_file_name(const int step)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%06d.vtu", step);
  return buf;
}

} // namespace pfcp
