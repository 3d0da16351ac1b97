#pragma once

#include "pfcp/staggered_problem.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace pfcp
{

struct FieldTolerance
{
  double residual = 0.0;
  double update = 0.0;
};

/// Tolerances by field name ("u", "g", "d").
using ToleranceTable = std::map<std::string, FieldTolerance>;

struct StaggeredConfig
{
  ToleranceTable final_tol;
  ToleranceTable backup_tol;
  int max_field_iter = 500;
  int max_iter = 25;
  int iter_backuptol = 8;
  int n_iter_backuptols_ug = 25;
  int n_iter_backuptols_d = 2;
  int max_field_div = 2;
  int max_divergence_count = 5;
  int max_time_refinement_level = 20;
  int n_field_iter_coarsen = 20;
  int n_timesteps_recoarsen = 5;
  double line_search_factor = 0.7;
  double initial_dt = 0.1;

  /// Table values with L in mm.
  static StaggeredConfig defaults(double length_scale = 1.0);
  int n_iter_backuptols(Block b) const { return b == Block::ug ? n_iter_backuptols_ug : n_iter_backuptols_d; }
  void validate() const;
};

class SolverError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};
class BlockDiverged : public SolverError
{
public:
  using SolverError::SolverError;
};
/// max_iter reached without meeting even the back-up tolerances.
class BlockNotConverged : public SolverError
{
public:
  using SolverError::SolverError;
};
class FieldLoopDiverged : public SolverError
{
public:
  using SolverError::SolverError;
};
class FieldIterExhausted : public SolverError
{
public:
  using SolverError::SolverError;
};
class RefinementExhausted : public SolverError
{
public:
  using SolverError::SolverError;
};

enum class Regime
{
  final,
  backup
};
const char* to_string(Regime r);

enum class FieldReason
{
  residual,
  update,
  backup
};
const char* to_string(FieldReason r);

enum class BackupTrigger
{
  none,
  iter_backuptol,
  previous_solve,
  max_iter
};
const char* to_string(BackupTrigger t);

/// Iteration counts and first residual of the latest solve of each block.
struct BlockHistory
{
  bool solved[2] = {false, false};
  int iterations[2] = {0, 0};
  double first_merit[2] = {0.0, 0.0};
  bool final_converged[2] = {false, false};
};

struct BlockResult
{
  Block block = Block::ug;
  /// Newton corrections applied.
  int iterations = 0;
  std::vector<double> first_residual;
  std::vector<double> last_residual;
  std::vector<double> last_update;
  std::vector<FieldReason> reasons;
  Regime regime = Regime::final;
  BackupTrigger trigger = BackupTrigger::none;
  /// Every field met its final criterion.
  bool final_converged = false;
  int shrinks = 0;
  /// Residual of the first evaluation scaled by the final tolerances (max over fields).
  double first_merit = 0.0;
};

using LogSink = std::function<void(const nlohmann::json&)>;

/// Newton loop on one block. Residual increases scale the next correction by
/// factor^(successive increases); more than max_divergence_count successive
/// increases raise BlockDiverged.
BlockResult newton_block_solve(StaggeredProblem& problem, Block block, const StaggeredConfig& config,
                               const BlockHistory& history);

struct StepOutcome
{
  bool converged = false;
  int field_iters_used = 0;
  /// Reasons of the accepting check per field, keyed by field name.
  std::map<std::string, FieldReason> reasons;
  double dt = 0.0;
  double t = 0.0;
  bool used_backup = false;
};

/// One time step of the staggered scheme. Block solves alternate, starting with
/// ug; the step is accepted once two consecutive solves (one per block) pass their
/// first check under final tolerances without an update. A field iteration is
/// one ug solve plus one d solve.
StepOutcome staggered_step(StaggeredProblem& problem, double t_new, double dt, const StaggeredConfig& config,
                           const LogSink& log = {}, int step_index = 0);

struct TimeStepState
{
  double dt = 0.0;
  int level = 0;
  int consecutive_accepted = 0;
  int last_field_iters = 0;
};

/// After a failure: halve. After an accepted step: maybe double, never above initial_dt.
TimeStepState adapt_timestep(const TimeStepState& current, bool accepted, int field_iters,
                             const StaggeredConfig& config);

struct TimeLoopResult
{
  int accepted_steps = 0;
  int failed_steps = 0;
  double time = 0.0;
  bool finished = false;
  TimeStepState dt_state;
};

/// Called after each accepted step with the time-step state for the next one.
using AcceptCallback = std::function<void(int step, const StepOutcome& outcome, const TimeStepState& next)>;

/// Advances from t_start to horizon. LocalDivergence, LinearSolveFailure and
/// SolverError other than RefinementExhausted fail the step and halve dt.
/// max_steps < 0 means unlimited.
TimeLoopResult run_time_loop(StaggeredProblem& problem, const StaggeredConfig& config, double t_start,
                             double horizon, const AcceptCallback& on_accept = {}, const LogSink& log = {},
                             int max_steps = -1, const TimeStepState* resume = nullptr, int first_step = 0);

} // namespace pfcp
