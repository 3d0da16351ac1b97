#include "pfcp/run.hpp"

#include "pfcp/mesh_gen.hpp"
#include "pfcp/output.hpp"

#include <spdlog/spdlog.h>

#include <filesystem>
#include <fstream>
#include <iterator>

namespace pfcp
{

namespace
{

namespace fs = std::filesystem;
using nlohmann::json;

json state_to_json(const MaterialPointState& s)
{
  std::vector<double> fp(s.fp_inv.data(), s.fp_inv.data() + 9);
  return json{{"fp_inv", fp}, {"k", s.k}, {"eps_p", s.eps_p}, {"phi", s.phi}};
}

MaterialPointState state_from_json(const json& j)
{
  MaterialPointState s;
  const auto fp = j.at("fp_inv").get<std::vector<double>>();
  if (fp.size() != 9)
    throw IOError("checkpoint: fp_inv must have 9 entries");
  std::copy(fp.begin(), fp.end(), s.fp_inv.data());
  s.k = j.at("k").get<SlipVector>();
  s.eps_p = j.at("eps_p").get<double>();
  s.phi = j.at("phi").get<double>();
  return s;
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

Eigen::VectorXd to_eigen(const std::vector<double>& v)
{
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

} // namespace

ModelSpec build_model_spec(const SimulationConfig& config)
{
  ModelSpec spec;
  if (config.mesh.generate)
  {
    const std::vector<Vector3> seeds = config.mesh.seeds.empty()
                                           ? random_seeds(config.mesh.grid, config.mesh.random_seeds, config.mesh.seed)
                                           : config.mesh.seeds;
    spec.mesh = generate_grid_mesh(config.mesh.grid, seeds, config.mesh.voids);
  }
  else
    spec.mesh = load_mesh_file(config.mesh.path);

  for (const std::string& set : config.referenced_sets)
  {
    const auto it = spec.mesh.facet_sets.find(set);
    if (it == spec.mesh.facet_sets.end() || it->second.empty())
      throw ConfigError("boundary." + set, "facet set '" + set + "' does not exist in the mesh");
  }
  for (const auto& [name, labels] : config.output.regions)
    for (const int l : labels)
      if (std::find(spec.mesh.grain_labels.begin(), spec.mesh.grain_labels.end(), l) == spec.mesh.grain_labels.end())
        throw ConfigError("output.regions." + name, "grain " + std::to_string(l) + " does not exist in the mesh");
  if (config.orientations.size() > spec.mesh.num_grains())
    throw ConfigError("grains.rodrigues", std::to_string(config.orientations.size()) + " orientations for "
                                              + std::to_string(spec.mesh.num_grains()) + " grains");

  spec.orientations = config.orientations;
  spec.convention = config.convention;
  spec.params = config.material;
  spec.inner_bc = config.inner_bc;
  spec.void_bc = config.void_bc;
  spec.load = config.load;
  spec.tangent_mode = config.tangent_mode;
  return spec;
}

void write_checkpoint(const Checkpoint& cp, const std::string& path)
{
  json j;
  j["step"] = cp.step;
  j["time"] = cp.snapshot.time;
  j["dt_state"] = {{"dt", cp.dt_state.dt},
                   {"level", cp.dt_state.level},
                   {"consecutive_accepted", cp.dt_state.consecutive_accepted},
                   {"last_field_iters", cp.dt_state.last_field_iters}};
  j["ug"] = to_std(cp.snapshot.ug);
  j["d"] = to_std(cp.snapshot.d);
  json states = json::array();
  for (const MaterialPointState& s : cp.snapshot.states)
    states.push_back(state_to_json(s));
  j["states"] = std::move(states);
  json frames = json::array();
  for (const auto& [t, file] : cp.frames)
    frames.push_back({t, file});
  j["frames"] = std::move(frames);

  const std::vector<std::uint8_t> bytes = json::to_cbor(j);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      throw IOError("cannot write '" + tmp + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
      throw IOError("write to '" + tmp + "' failed");
  }
  fs::rename(tmp, path);
}

Checkpoint read_checkpoint(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IOError("cannot read checkpoint '" + path + "'");
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try
  {
    const json j = json::from_cbor(bytes);
    Checkpoint cp;
    cp.step = j.at("step").get<int>();
    cp.snapshot.time = j.at("time").get<double>();
    const json& s = j.at("dt_state");
    cp.dt_state = {s.at("dt").get<double>(), s.at("level").get<int>(), s.at("consecutive_accepted").get<int>(),
                   s.at("last_field_iters").get<int>()};
    cp.snapshot.ug = to_eigen(j.at("ug").get<std::vector<double>>());
    cp.snapshot.d = to_eigen(j.at("d").get<std::vector<double>>());
    for (const json& st : j.at("states"))
      cp.snapshot.states.push_back(state_from_json(st));
    for (const json& f : j.at("frames"))
      cp.frames.emplace_back(f.at(0).get<double>(), f.at(1).get<std::string>());
    return cp;
  }
  catch (const json::exception& e)
  {
    throw IOError("malformed checkpoint '" + path + "': " + e.what());
  }
}

RunResult run(const SimulationConfig& config, const RunOptions& options)
{
  RunResult result;
  const auto fail = [&](int code, const std::string& what) {
    result.exit_code = code;
    result.message = what;
    spdlog::error("{}", what);
    return result;
  };

  ModelSpec spec;
  try
  {
    spec = build_model_spec(config);
  }
  catch (const ConfigError& e)
  {
    return fail(exit_config, std::string("configuration error: ") + e.what());
  }
  catch (const std::exception& e)
  {
    return fail(exit_io, std::string("mesh error: ") + e.what());
  }

  const fs::path dir = options.output_dir.empty() ? fs::path(config.output.directory) : fs::path(options.output_dir);
  std::unique_ptr<CoupledModel> model;
  try
  {
    model = std::make_unique<CoupledModel>(std::move(spec));
  }
  catch (const std::invalid_argument& e)
  {
    return fail(exit_config, std::string("invalid model setup: ") + e.what());
  }

  const bool resuming = !options.resume_from.empty();
  Checkpoint cp;
  std::vector<std::string> regions{"all"};
  for (const auto& [name, labels] : config.output.regions)
    if (name != "all")
      regions.push_back(name);

  std::ofstream log_file;
  std::unique_ptr<SummaryCsv> csv;
  try
  {
    fs::create_directories(dir);
    if (resuming)
    {
      cp = read_checkpoint(options.resume_from);
      model->restore(cp.snapshot);
      spdlog::info("resuming at step {} (t = {})", cp.step, cp.snapshot.time);
    }
    log_file.open(dir / "solver_log.jsonl", resuming ? std::ios::app : std::ios::trunc);
    if (!log_file)
      throw IOError("cannot write '" + (dir / "solver_log.jsonl").string() + "'");
    csv = std::make_unique<SummaryCsv>((dir / "summary.csv").string(), regions, resuming);
    if (!resuming && config.output.cadence > 0)
    {
      const OutputFrame frame = make_frame(*model, 0, config.output.regions);
      write_vtu_file(frame, (dir / frame_file_name(0)).string());
      cp.frames.emplace_back(frame.time, frame_file_name(0));
    }
  }
  catch (const std::invalid_argument& e)
  {
    return fail(exit_io, std::string("checkpoint does not match the model: ") + e.what());
  }
  catch (const std::exception& e)
  {
    return fail(exit_io, std::string("output error: ") + e.what());
  }

  const LogSink log = [&](const json& record) {
    log_file << record.dump() << '\n';
    if (record.value("event", "") == "step_failed")
      spdlog::warn("step {} failed at t = {}: {}", record.value("step", 0), record.value("t", 0.0),
                   record.value("reason", std::string()));
    if (options.log)
      options.log(record);
  };
  const auto on_accept = [&](int step, const StepOutcome& outcome, const TimeStepState& next) {
    const int done = step;
    const OutputFrame frame = make_frame(*model, done, config.output.regions);
    csv->write_row(frame);
    if (config.output.cadence > 0 && done % config.output.cadence == 0)
    {
      write_vtu_file(frame, (dir / frame_file_name(done)).string());
      cp.frames.emplace_back(frame.time, frame_file_name(done));
    }
    cp.step = done;
    cp.dt_state = next;
    if (config.output.checkpoint_every > 0 && done % config.output.checkpoint_every == 0)
    {
      cp.snapshot = model->snapshot();
      write_checkpoint(cp, (dir / "checkpoint.cbor").string());
    }
    spdlog::info("step {} accepted: t = {:.6g}, dt = {:.3g}, field iterations {}{}", done, outcome.t, outcome.dt,
                 outcome.field_iters_used, outcome.used_backup ? " (back-up tolerances)" : "");
  };

  const auto finish_outputs = [&]() {
    cp.snapshot = model->snapshot();
    write_checkpoint(cp, (dir / "checkpoint.cbor").string());
    write_pvd(cp.frames, (dir / "frames.pvd").string());
  };

  try
  {
    const TimeLoopResult loop =
        run_time_loop(*model, config.solver, model->time(), config.load.horizon, on_accept, log, options.max_steps,
                      resuming ? &cp.dt_state : nullptr, cp.step + 1);
    result.accepted_steps = loop.accepted_steps;
    result.failed_steps = loop.failed_steps;
    result.time = model->time();
    result.finished = loop.finished;
    finish_outputs();
    result.message = loop.finished ? "reached the end of the load program" : "stopped at the step limit";
    spdlog::info("{} at t = {} after {} accepted and {} failed steps", result.message, result.time,
                 result.accepted_steps, result.failed_steps);
    return result;
  }
  catch (const RefinementExhausted& e)
  {
    result.time = model->time();
    try
    {
      write_vtu_file(make_frame(*model, cp.step, config.output.regions), (dir / "failure_state.vtu").string());
      finish_outputs();
    }
    catch (const std::exception& io)
    {
      spdlog::error("could not write the failure state: {}", io.what());
    }
    return fail(exit_refinement_exhausted, std::string("time step refinement exhausted: ") + e.what());
  }
  catch (const IOError& e)
  {
    return fail(exit_io, std::string("output error: ") + e.what());
  }
  catch (const fs::filesystem_error& e)
  {
    return fail(exit_io, std::string("output error: ") + e.what());
  }
  catch (const std::exception& e)
  {
    return fail(exit_solver, std::string("solver failure: ") + e.what());
  }
}

} // namespace pfcp
