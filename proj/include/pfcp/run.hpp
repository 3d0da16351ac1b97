#pragma once

#include "pfcp/config.hpp"
#include "pfcp/model.hpp"
#include "pfcp/solver.hpp"

#include <string>
#include <utility>
#include <vector>

namespace pfcp
{

enum ExitCode
{
  exit_ok = 0,
  exit_config = 1,
  exit_io = 2,
  exit_refinement_exhausted = 3,
  exit_solver = 4
};

struct RunOptions
{
  /// Replaces the configured output directory when non-empty.
  std::string output_dir;
  /// Stop after this many accepted steps; negative means run to the horizon.
  int max_steps = -1;
  /// Checkpoint file to continue from.
  std::string resume_from;
  /// Receives every solver log record in addition to the log file.
  LogSink log;
};

struct RunResult
{
  int exit_code = exit_ok;
  int accepted_steps = 0;
  int failed_steps = 0;
  double time = 0.0;
  bool finished = false;
  std::string message;
};

/// Loads or generates the mesh and checks that referenced facet sets and
/// region grains exist. Throws ConfigError, or the mesh reader's errors.
ModelSpec build_model_spec(const SimulationConfig& config);

struct Checkpoint
{
  /// Number of accepted steps so far.
  int step = 0;
  TimeStepState dt_state;
  ModelSnapshot snapshot;
  /// (time, file) of the frames written so far.
  std::vector<std::pair<double, std::string>> frames;
};

/// CBOR encoding; doubles are stored exactly.
void write_checkpoint(const Checkpoint& cp, const std::string& path);
Checkpoint read_checkpoint(const std::string& path);

/// Runs the load program. Writes frame_<step>.vtu at the output cadence (step 0
/// included), summary.csv with one row per accepted step, solver_log.jsonl,
/// frames.pvd and checkpoint.cbor. Never throws; errors map to exit codes.
RunResult run(const SimulationConfig& config, const RunOptions& options = {});

} // namespace pfcp
