#include "pfcp/config.hpp"
#include "pfcp/output.hpp"
#include "pfcp/run.hpp"

#include <doctest.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace pfcp;
namespace fs = std::filesystem;

namespace
{

const char* kBicrystal = R"(
[mesh]
generate = true
divisions = [4, 4]
seeds = [[0.25, 0.5], [0.75, 0.5]]
[grains]
rodrigues = [[0.0, 0.0, 0.1], [0.0, 0.0, -0.2]]
[output]
regions.left = [1]
)";

fs::path fresh_dir(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("pfcp_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> csv_rows(const fs::path& p)
{
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
  {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');)
      cols.push_back(c);
    rows.push_back(cols);
  }
  return rows;
}

SimulationConfig elastic(int steps)
{
  SimulationConfig c = parse_config(std::string("[load]\nshear_rate = 0.001\nhorizon = ") + std::to_string(0.1 * steps)
                                    + "\n" + kBicrystal);
  return c;
}

SimulationConfig plastic()
{
  return parse_config(std::string(R"(
[material]
yield_stress = 60.0
crit_plastic_strain = 0.02
[load]
shear_rate = 0.15
horizon = 2.0
[solver]
initial_dt = 0.25
)") + kBicrystal);
}

struct Quiet
{
  Quiet() { spdlog::set_level(spdlog::level::err); }
  ~Quiet() { spdlog::set_level(spdlog::level::info); }
};

} // namespace

TEST_CASE("tiny elastic run writes the initial frame plus one per step")
{
  Quiet q;
  const fs::path dir = fresh_dir("elastic");
  RunOptions o;
  o.output_dir = dir.string();
  const RunResult r = run(elastic(3), o);
  REQUIRE(r.exit_code == exit_ok);
  CHECK(r.finished);
  CHECK(r.accepted_steps == 3);
  for (int s = 0; s <= 3; ++s)
    CHECK(fs::exists(dir / frame_file_name(s)));
  CHECK_FALSE(fs::exists(dir / frame_file_name(4)));

  const VtuData f0 = read_vtu_file((dir / frame_file_name(0)).string());
  CHECK(f0.points.size() == 25);
  CHECK(f0.cells.size() == 32);
  for (double d : f0.point_data.at("d"))
    CHECK(d == 0.0);

  const auto rows = csv_rows(dir / "summary.csv");
  REQUIRE(rows.size() == 4);
  CHECK(rows[0] == std::vector<std::string>{"step", "time", "top_displacement", "S12_all", "S12_left"});
  CHECK(rows[3][0] == "3");
  CHECK(std::stod(rows[3][2]) == doctest::Approx(3e-4).epsilon(1e-12));

  std::ifstream log(dir / "solver_log.jsonl");
  int accepted = 0;
  for (std::string line; std::getline(log, line);)
    accepted += nlohmann::json::parse(line).value("event", "") == "step_accepted";
  CHECK(accepted == 3);
  CHECK(fs::exists(dir / "frames.pvd"));
  CHECK(fs::exists(dir / "checkpoint.cbor"));
}

TEST_CASE("csv averages match volume averages recomputed from the frames")
{
  Quiet q;
  const fs::path dir = fresh_dir("average");
  SimulationConfig c = plastic();
  c.load.horizon = 0.75;
  RunOptions o;
  o.output_dir = dir.string();
  REQUIRE(run(c, o).exit_code == exit_ok);
  const auto rows = csv_rows(dir / "summary.csv");
  REQUIRE(rows.size() > 1);
  for (std::size_t i = 1; i < rows.size(); ++i)
  {
    const int step = std::stoi(rows[i][0]);
    const VtuData v = read_vtu_file((dir / frame_file_name(step)).string());
    double all = 0.0, vol = 0.0, left = 0.0, vol_left = 0.0;
    for (std::size_t e = 0; e < v.cells.size(); ++e)
    {
      const Vector3 a = v.points[v.cells[e][1]] - v.points[v.cells[e][0]];
      const Vector3 b = v.points[v.cells[e][2]] - v.points[v.cells[e][0]];
      const double area = 0.5 * std::abs(a(0) * b(1) - a(1) * b(0));
      const double s = v.cell_data.at("S12")[e];
      all += area * s;
      vol += area;
      if (v.cell_data.at("grain")[e] == 1.0)
      {
        left += area * s;
        vol_left += area;
      }
    }
    const double csv_all = std::stod(rows[i][3]);
    const double csv_left = std::stod(rows[i][4]);
    CHECK(std::abs(all / vol - csv_all) <= 1e-10 * std::max(1.0, std::abs(csv_all)));
    CHECK(std::abs(left / vol_left - csv_left) <= 1e-10 * std::max(1.0, std::abs(csv_left)));
  }
  // The plastic fixture must actually deform plastically for this to mean anything.
  const VtuData last = read_vtu_file((dir / frame_file_name(std::stoi(rows.back()[0]))).string());
  double max_eps = 0.0;
  for (double e : last.cell_data.at("eps_p"))
    max_eps = std::max(max_eps, e);
  CHECK(max_eps > 0.0);
}

TEST_CASE("merged frame carries one value per master node")
{
  Quiet q;
  const fs::path dir = fresh_dir("merged");
  RunOptions o;
  o.output_dir = dir.string();
  REQUIRE(run(elastic(1), o).exit_code == exit_ok);
  const VtuData v = read_vtu_file((dir / frame_file_name(1)).string());
  CHECK(v.points.size() == 25);
  CHECK(v.point_data.at("u").size() == 75);
  // Top edge nodes follow the prescribed displacement.
  for (std::size_t n = 0; n < v.points.size(); ++n)
    if (v.points[n](1) == 1.0)
      CHECK(v.point_data.at("u")[3 * n] == doctest::Approx(1e-4).epsilon(1e-12));
  std::set<int> used;
  for (const auto& c : v.cells)
    used.insert(c.begin(), c.end());
  CHECK(used.size() == 25);
}

TEST_CASE("missing mesh file and bad configuration give distinct exit codes")
{
  Quiet q;
  SimulationConfig c = parse_config("[mesh]\npath = \"/nonexistent/mesh.msh\"\n");
  RunOptions o;
  o.output_dir = fresh_dir("missing").string();
  const RunResult r = run(c, o);
  CHECK(r.exit_code == exit_io);
  CHECK_FALSE(r.message.empty());

  SimulationConfig bad = elastic(1);
  bad.output.regions["ghost"] = {7};
  const RunResult rb = run(bad, o);
  CHECK(rb.exit_code == exit_config);
  CHECK(rb.exit_code != r.exit_code);

  SimulationConfig voids = elastic(1);
  voids.referenced_sets = {"void"};
  CHECK(run(voids, o).exit_code == exit_config);
}

TEST_CASE("huge initial dt is halved before a step is accepted")
{
  Quiet q;
  SimulationConfig c = plastic();
  c.solver.initial_dt = 2.0;
  std::vector<nlohmann::json> log;
  RunOptions o;
  o.output_dir = fresh_dir("halving").string();
  o.log = [&](const nlohmann::json& j) { log.push_back(j); };
  const RunResult r = run(c, o);
  REQUIRE(r.exit_code == exit_ok);
  CHECK(r.failed_steps > 0);
  std::size_t first_accept = log.size(), first_halve = log.size();
  for (std::size_t i = 0; i < log.size(); ++i)
  {
    const std::string ev = log[i].value("event", "");
    if (ev == "step_accepted" && first_accept == log.size())
      first_accept = i;
    if (ev == "dt_change" && log[i]["cause"] == "halve" && first_halve == log.size())
      first_halve = i;
  }
  REQUIRE(first_accept < log.size());
  CHECK(first_halve < first_accept);
  CHECK(log[first_accept]["dt"].get<double>() < 2.0);
}

TEST_CASE("checkpointed and resumed run reproduces the uninterrupted frames")
{
  Quiet q;
  SimulationConfig c = plastic();
  c.load.horizon = 1.5;
  c.output.checkpoint_every = 2;

  const fs::path a = fresh_dir("restart_a");
  RunOptions oa;
  oa.output_dir = a.string();
  const RunResult ra = run(c, oa);
  REQUIRE(ra.exit_code == exit_ok);
  REQUIRE(ra.accepted_steps > 3);

  const fs::path b = fresh_dir("restart_b");
  RunOptions ob;
  ob.output_dir = b.string();
  ob.max_steps = 3;
  const RunResult rb1 = run(c, ob);
  REQUIRE(rb1.exit_code == exit_ok);
  CHECK_FALSE(rb1.finished);
  ob.max_steps = -1;
  ob.resume_from = (b / "checkpoint.cbor").string();
  const RunResult rb2 = run(c, ob);
  REQUIRE(rb2.exit_code == exit_ok);
  CHECK(rb2.finished);
  CHECK(rb1.accepted_steps + rb2.accepted_steps == ra.accepted_steps);

  for (int s = 0; s <= ra.accepted_steps; ++s)
  {
    CAPTURE(s);
    CHECK(slurp(a / frame_file_name(s)) == slurp(b / frame_file_name(s)));
  }
  CHECK(slurp(a / "summary.csv") == slurp(b / "summary.csv"));
  CHECK(slurp(a / "frames.pvd") == slurp(b / "frames.pvd"));
}

TEST_CASE("checkpoint round-trips exactly")
{
  const fs::path dir = fresh_dir("cbor");
  fs::create_directories(dir);
  Checkpoint cp;
  cp.step = 7;
  cp.dt_state = {0.0125, 3, 2, 17};
  cp.snapshot.time = 0.1 + 0.2;
  cp.snapshot.ug = Eigen::VectorXd::Random(11);
  cp.snapshot.d = Eigen::VectorXd::Random(5);
  MaterialPointState s;
  s.fp_inv(0, 1) = 1.0 / 3.0;
  s.k[4] = -2.5e-7;
  s.eps_p = 0.0123456789;
  s.phi = 0.75;
  cp.snapshot.states = {s, MaterialPointState{}};
  cp.frames = {{0.0, "frame_000000.vtu"}};
  const std::string path = (dir / "cp.cbor").string();
  write_checkpoint(cp, path);
  const Checkpoint back = read_checkpoint(path);
  CHECK(back.step == 7);
  CHECK(back.dt_state.dt == 0.0125);
  CHECK(back.dt_state.level == 3);
  CHECK(back.dt_state.consecutive_accepted == 2);
  CHECK(back.dt_state.last_field_iters == 17);
  CHECK(back.snapshot.time == cp.snapshot.time);
  CHECK(back.snapshot.ug == cp.snapshot.ug);
  CHECK(back.snapshot.d == cp.snapshot.d);
  CHECK(back.snapshot.states[0].fp_inv == s.fp_inv);
  CHECK(back.snapshot.states[0].k == s.k);
  CHECK(back.snapshot.states[0].eps_p == s.eps_p);
  CHECK(back.snapshot.states[0].phi == s.phi);
  CHECK(back.frames == cp.frames);
  CHECK_THROWS_AS(read_checkpoint((dir / "absent.cbor").string()), IOError);
}
