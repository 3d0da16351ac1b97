#include "pfcp/config.hpp"
#include "pfcp/model.hpp"
#include "pfcp/run.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <fstream>
#include <iostream>

namespace
{

int check(const std::string& path)
{
  using namespace pfcp;
  SimulationConfig config;
  try
  {
    config = load_config_file(path);
  }
  catch (const ConfigError& e)
  {
    spdlog::error("configuration error: {}", e.what());
    return exit_config;
  }
  try
  {
    const CoupledModel model(build_model_spec(config));
    const FieldLayout& l = model.layout();
    std::cout << "config ok\n"
              << "  dimension        " << model.mesh().dim << "\n"
              << "  cells            " << model.mesh().num_cells() << "\n"
              << "  grains           " << model.mesh().num_grains() << "\n"
              << "  nodes (replicas) " << l.n_nodes << " (" << l.n_nodes - l.n_masters << ")\n"
              << "  u, g dofs        " << l.n_u << ", " << l.n_g << "\n"
              << "  d dofs           " << l.n_masters << "\n"
              << "  inner boundary   " << to_string(config.inner_bc.kind) << "\n"
              << "  void boundary    " << to_string(config.void_bc.kind) << "\n"
              << "  horizon          " << config.load.horizon << "\n";
    return exit_ok;
  }
  catch (const ConfigError& e)
  {
    spdlog::error("configuration error: {}", e.what());
    return exit_config;
  }
  catch (const std::invalid_argument& e)
  {
    spdlog::error("invalid model setup: {}", e.what());
    return exit_config;
  }
  catch (const std::exception& e)
  {
    spdlog::error("mesh error: {}", e.what());
    return exit_io;
  }
}

int write_mesh(const std::string& config_path, const std::string& out_path)
{
  using namespace pfcp;
  try
  {
    const SimulationConfig config = load_config_file(config_path);
    const ModelSpec spec = build_model_spec(config);
    std::ofstream out(out_path);
    if (!out)
    {
      spdlog::error("cannot write '{}'", out_path);
      return exit_io;
    }
    write_msh(spec.mesh, out);
    spdlog::info("wrote {} cells in {} grains to {}", spec.mesh.num_cells(), spec.mesh.num_grains(), out_path);
    return exit_ok;
  }
  catch (const ConfigError& e)
  {
    spdlog::error("configuration error: {}", e.what());
    return exit_config;
  }
  catch (const std::exception& e)
  {
    spdlog::error("mesh error: {}", e.what());
    return exit_io;
  }
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Phase-field gradient crystal plasticity fracture simulator"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  std::string config_path;
  pfcp::RunOptions options;
  auto* run = app.add_subcommand("run", "Run the load program of a configuration");
  run->add_option("config", config_path, "Configuration file")->required();
  run->add_option("--output-dir", options.output_dir, "Output directory (overrides the configuration)");
  run->add_option("--max-steps", options.max_steps, "Stop after this many accepted steps");
  run->add_option("--resume", options.resume_from, "Continue from a checkpoint file");

  auto* chk = app.add_subcommand("check", "Validate a configuration and its mesh");
  chk->add_option("config", config_path, "Configuration file")->required();

  std::string mesh_out;
  auto* mesh = app.add_subcommand("mesh", "Write the (generated) mesh of a configuration as MSH 4.1");
  mesh->add_option("config", config_path, "Configuration file")->required();
  mesh->add_option("output", mesh_out, "Mesh file to write")->required();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  if (chk->parsed())
    return check(config_path);
  if (mesh->parsed())
    return write_mesh(config_path, mesh_out);

  pfcp::SimulationConfig config;
  try
  {
    config = pfcp::load_config_file(config_path);
  }
  catch (const pfcp::ConfigError& e)
  {
    spdlog::error("configuration error: {}", e.what());
    return pfcp::exit_config;
  }
  return pfcp::run(config, options).exit_code;
}
