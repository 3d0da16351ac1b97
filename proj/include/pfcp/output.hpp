#pragma once

#include "pfcp/model.hpp"

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfcp
{

class IOError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Snapshot of the committed state on the merged mesh. Replica nodes are folded
/// onto their masters for u and d; g is discontinuous across grains and is
/// exported per cell (mean of the cell's nodal values).
struct OutputFrame
{
  int step = 0;
  double time = 0.0;
  double top_displacement = 0.0;
  int dim = 2;
  std::vector<Vector3> points;
  std::vector<std::array<int, 4>> cells;
  std::vector<Vector3> u;
  std::vector<double> d;
  std::vector<Vector3> g_cell;
  std::vector<double> eps_p;
  std::vector<double> g_e;
  std::vector<double> phi;
  std::vector<double> S12;
  std::vector<double> k_sum;
  std::vector<int> grain;
  std::vector<double> measure;
  /// Volume-averaged S12 per named region; "all" covers every cell.
  std::map<std::string, double> region_S12;

  void validate() const;
};

OutputFrame make_frame(const CoupledModel& model, int step, const std::map<std::string, std::vector<int>>& regions);

/// Unstructured-grid XML VTK, ASCII, full double precision.
void write_vtu(const OutputFrame& frame, std::ostream& out);
void write_vtu_file(const OutputFrame& frame, const std::string& path);

/// Reads back the point and cell arrays of a file written by write_vtu.
struct VtuData
{
  std::vector<Vector3> points;
  std::vector<std::vector<int>> cells;
  std::map<std::string, std::vector<double>> point_data;
  std::map<std::string, std::vector<double>> cell_data;
};
VtuData read_vtu_file(const std::string& path);

/// ParaView collection of (time, file) pairs.
void write_pvd(const std::vector<std::pair<double, std::string>>& entries, const std::string& path);

/// Summary table: one row per accepted step.
class SummaryCsv
{
public:
  /// Creates the file with a header unless `append` and the file exists.
  SummaryCsv(const std::string& path, const std::vector<std::string>& regions, bool append);
  void write_row(const OutputFrame& frame);

private:
  std::string path_;
  std::vector<std::string> regions_;
};

std::string frame_file_name(int step);

} // namespace pfcp
