#include "pfcp/solver.hpp"

#include "pfcp/material_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pfcp
{

namespace
{

int idx(Block b) { return b == Block::ug ? 0 : 1; }

const FieldTolerance& lookup(const ToleranceTable& table, const std::string& field)
{
  const auto it = table.find(field);
  if (it == table.end())
    throw std::invalid_argument("no tolerance for field '" + field + "'");
  return it->second;
}

nlohmann::json reasons_json(const std::vector<std::string>& names, const std::vector<FieldReason>& reasons)
{
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < reasons.size(); ++i)
    j[names[i]] = to_string(reasons[i]);
  return j;
}

} // namespace

const char* to_string(const Regime r) { return r == Regime::final ? "final" : "backup"; }

const char* to_string(const FieldReason r)
{
  switch (r)
  {
  case FieldReason::residual: return "residual";
  case FieldReason::update: return "update";
  case FieldReason::backup: return "backup";
  }
  return "unknown";
}

const char* to_string(const BackupTrigger t)
{
  switch (t)
  {
  case BackupTrigger::none: return "none";
  case BackupTrigger::iter_backuptol: return "iter_backuptol";
  case BackupTrigger::previous_solve: return "previous_solve";
  case BackupTrigger::max_iter: return "max_iter";
  }
  return "unknown";
}

StaggeredConfig StaggeredConfig::defaults(const double L)
{
  StaggeredConfig c;
  c.final_tol = {{"u", {L * L * 1e-6, L * 1e-8}}, {"g", {L * L * 1e-11, 1e-6 / L}}, {"d", {L * L * L * 1e-10, 1e-8}}};
  c.backup_tol = {{"u", {L * L * 1e-3, L * 1e-8}}, {"g", {L * L * 1e-8, 1e-6 / L}}, {"d", {L * L * L * 1e-10, 1e-8}}};
  return c;
}

void StaggeredConfig::validate() const
{
  for (const auto& [field, f] : final_tol)
  {
    const auto it = backup_tol.find(field);
    if (it == backup_tol.end())
      throw std::invalid_argument("missing back-up tolerance for field '" + field + "'");
    if (!(f.residual > 0.0) || !(f.update > 0.0))
      throw std::invalid_argument("final tolerances of '" + field + "' must be positive");
    if (it->second.residual < f.residual || it->second.update < f.update)
      throw std::invalid_argument("back-up tolerances of '" + field + "' are tighter than the final ones");
  }
  for (const int v : {max_field_iter, max_iter, iter_backuptol, n_iter_backuptols_ug, n_iter_backuptols_d,
                      max_field_div, max_divergence_count, max_time_refinement_level, n_field_iter_coarsen,
                      n_timesteps_recoarsen})
    if (v <= 0)
      throw std::invalid_argument("solver counters must be positive");
  if (!(line_search_factor > 0.0 && line_search_factor < 1.0))
    throw std::invalid_argument("line_search_factor must lie in (0, 1)");
  if (!(initial_dt > 0.0))
    throw std::invalid_argument("initial_dt must be positive");
}

BlockResult newton_block_solve(StaggeredProblem& problem, const Block block, const StaggeredConfig& config,
                               const BlockHistory& history)
{
  const std::vector<std::string> names = problem.fields(block);
  const std::size_t nf = names.size();
  std::vector<FieldTolerance> fin(nf), bak(nf);
  for (std::size_t i = 0; i < nf; ++i)
  {
    fin[i] = lookup(config.final_tol, names[i]);
    bak[i] = lookup(config.backup_tol, names[i]);
  }

  BlockResult out;
  out.block = block;
  const auto above_backup = [&](const std::vector<double>& res) {
    for (std::size_t i = 0; i < nf; ++i)
      if (res[i] > bak[i].residual)
        return true;
    return false;
  };
  const auto finish = [&](const std::vector<double>& res, const std::vector<double>& upd) {
    out.last_residual = res;
    out.last_update = upd;
    out.reasons.resize(nf);
    out.final_converged = true;
    for (std::size_t i = 0; i < nf; ++i)
    {
      if (res[i] <= fin[i].residual)
        out.reasons[i] = FieldReason::residual;
      else if (!upd.empty() && upd[i] <= fin[i].update)
        out.reasons[i] = FieldReason::update;
      else
      {
        out.reasons[i] = FieldReason::backup;
        out.final_converged = false;
      }
    }
    return out;
  };

  int increases = 0;
  double prev_merit = std::numeric_limits<double>::infinity();
  for (int iter = 0;; ++iter)
  {
    const std::vector<double> res = problem.residual_norms(block);
    double merit = 0.0;
    for (std::size_t i = 0; i < nf; ++i)
      merit = std::max(merit, res[i] / fin[i].residual);
    if (!std::isfinite(merit))
      throw BlockDiverged(std::string("non-finite residual in block ") + to_string(block));
    if (iter == 0)
    {
      out.first_residual = res;
      out.first_merit = merit;
      bool long_solve = false;
      for (const Block b : {Block::ug, Block::d})
        long_solve = long_solve || (history.solved[idx(b)] && history.iterations[idx(b)] > config.n_iter_backuptols(b));
      if (long_solve && above_backup(res))
      {
        out.regime = Regime::backup;
        out.trigger = BackupTrigger::previous_solve;
      }
    }
    else if (merit > prev_merit)
    {
      if (++increases > config.max_divergence_count)
        throw BlockDiverged(std::string("residual of block ") + to_string(block) + " increased "
                            + std::to_string(increases) + " times in a row");
    }
    else
      increases = 0;
    prev_merit = merit;

    if (iter == config.iter_backuptol && out.regime == Regime::final && above_backup(res))
    {
      out.regime = Regime::backup;
      out.trigger = BackupTrigger::iter_backuptol;
    }
    const std::vector<FieldTolerance>& tol = out.regime == Regime::final ? fin : bak;
    std::vector<char> res_ok(nf);
    bool all_res = true;
    for (std::size_t i = 0; i < nf; ++i)
    {
      res_ok[i] = res[i] <= tol[i].residual;
      all_res = all_res && res_ok[i];
    }
    if (all_res)
      return finish(res, {});
    if (iter == config.max_iter)
    {
      if (above_backup(res))
        throw BlockNotConverged(std::string("block ") + to_string(block) + " missed the back-up tolerances after "
                                + std::to_string(iter) + " iterations");
      out.regime = Regime::backup;
      out.trigger = BackupTrigger::max_iter;
      return finish(res, {});
    }

    std::vector<double> upd = problem.solve_linearized(block);
    const double scale = std::pow(config.line_search_factor, increases);
    if (increases > 0)
      ++out.shrinks;
    bool all_conv = true;
    for (std::size_t i = 0; i < nf; ++i)
    {
      upd[i] *= scale;
      all_conv = all_conv && (res_ok[i] || upd[i] <= tol[i].update);
    }
    if (all_conv && iter == 0)
      return finish(res, upd);
    problem.apply_update(block, scale);
    out.iterations = iter + 1;
    if (all_conv)
      return finish(res, upd);
  }
}

StepOutcome staggered_step(StaggeredProblem& problem, const double t_new, const double dt,
                           const StaggeredConfig& config, const LogSink& log, const int step_index)
{
  problem.begin_step(t_new, dt);
  BlockHistory hist;
  int div_count[2] = {0, 0};
  StepOutcome outcome;
  outcome.dt = dt;
  outcome.t = t_new;
  Block block = Block::ug;
  bool previous_clean = false;
  for (int solve = 0;; ++solve)
  {
    const int field_iter = solve / 2;
    if (field_iter >= config.max_field_iter)
      throw FieldIterExhausted("no convergence after " + std::to_string(field_iter) + " field iterations");
    const BlockResult r = newton_block_solve(problem, block, config, hist);
    const int b = idx(block);
    const std::vector<std::string> names = problem.fields(block);
    if (log)
      log({{"event", "block_solve"},
           {"step", step_index},
           {"field_iter", field_iter},
           {"solve", solve},
           {"block", to_string(block)},
           {"iterations", r.iterations},
           {"first_residual", r.first_residual},
           {"residual", r.last_residual},
           {"update", r.last_update},
           {"regime", to_string(r.regime)},
           {"trigger", to_string(r.trigger)},
           {"reasons", reasons_json(names, r.reasons)},
           {"final_converged", r.final_converged},
           {"shrinks", r.shrinks}});
    if (r.regime == Regime::backup)
      outcome.used_backup = true;

    // Only first residuals above the final tolerance count, so roundoff noise
    // in a converged block does not register as divergence.
    if (hist.solved[b] && r.first_merit > 1.0 && r.first_merit > hist.first_merit[b])
    {
      if (++div_count[b] > config.max_field_div)
        throw FieldLoopDiverged(std::string("first residual of block ") + to_string(block) + " grew "
                                + std::to_string(div_count[b]) + " times in a row");
    }
    else
      div_count[b] = 0;

    // Both blocks must pass back to back without an update: each check re-solves
    // the local variables its block owns, which the other block depends on.
    const bool clean = r.iterations == 0 && r.final_converged;
    const bool accepted = clean && previous_clean;
    previous_clean = clean;
    hist.solved[b] = true;
    hist.iterations[b] = r.iterations;
    hist.first_merit[b] = r.first_merit;
    hist.final_converged[b] = r.final_converged;
    if (accepted)
    {
      outcome.converged = true;
      outcome.field_iters_used = field_iter + 1;
      for (std::size_t i = 0; i < names.size(); ++i)
        outcome.reasons[names[i]] = r.reasons[i];
      return outcome;
    }
    block = other(block);
  }
}

TimeStepState adapt_timestep(const TimeStepState& current, const bool accepted, const int field_iters,
                             const StaggeredConfig& config)
{
  TimeStepState next = current;
  next.last_field_iters = field_iters;
  if (!accepted)
  {
    if (current.level >= config.max_time_refinement_level)
      throw RefinementExhausted("time step failed at refinement level " + std::to_string(current.level));
    next.dt = 0.5 * current.dt;
    next.level = current.level + 1;
    next.consecutive_accepted = 0;
    return next;
  }
  next.consecutive_accepted = current.consecutive_accepted + 1;
  if (next.consecutive_accepted >= config.n_timesteps_recoarsen && field_iters <= config.n_field_iter_coarsen
      && current.level > 0)
  {
    next.dt = std::min(2.0 * current.dt, config.initial_dt);
    next.level = current.level - 1;
    next.consecutive_accepted = 0;
  }
  return next;
}

TimeLoopResult run_time_loop(StaggeredProblem& problem, const StaggeredConfig& config, const double t_start,
                             const double horizon, const AcceptCallback& on_accept, const LogSink& log,
                             const int max_steps, const TimeStepState* resume, const int first_step)
{
  config.validate();
  TimeLoopResult result;
  result.dt_state = resume ? *resume : TimeStepState{config.initial_dt, 0, 0, 0};
  result.time = t_start;
  int step = first_step;
  const double eps = 1e-12 * std::max(1.0, std::abs(horizon));
  while (result.time < horizon - eps)
  {
    if (max_steps >= 0 && result.accepted_steps >= max_steps)
      return result;
    TimeStepState& s = result.dt_state;
    double dt = s.dt;
    double t_new = result.time + dt;
    if (t_new > horizon - eps)
    {
      t_new = horizon;
      dt = horizon - result.time;
    }
    StepOutcome outcome;
    std::string failure;
    try
    {
      outcome = staggered_step(problem, t_new, dt, config, log, step);
    }
    catch (const RefinementExhausted&)
    {
      throw;
    }
    catch (const SolverError& e)
    {
      failure = e.what();
    }
    catch (const LocalDivergence& e)
    {
      failure = std::string("local divergence: ") + e.what();
    }
    catch (const LinearSolveFailure& e)
    {
      failure = std::string("linear solve: ") + e.what();
    }
    if (!failure.empty())
    {
      problem.rollback_step();
      ++result.failed_steps;
      if (log)
        log({{"event", "step_failed"}, {"step", step}, {"t", t_new}, {"dt", dt}, {"reason", failure}});
      const TimeStepState next = adapt_timestep(s, false, 0, config);
      if (log)
        log({{"event", "dt_change"}, {"step", step}, {"from", s.dt}, {"to", next.dt}, {"level", next.level},
             {"cause", "halve"}});
      s = next;
      continue;
    }
    problem.commit_step();
    result.time = t_new;
    ++result.accepted_steps;
    if (log)
      log({{"event", "step_accepted"},
           {"step", step},
           {"t", t_new},
           {"dt", dt},
           {"field_iters", outcome.field_iters_used},
           {"used_backup", outcome.used_backup}});
    const TimeStepState next = adapt_timestep(s, true, outcome.field_iters_used, config);
    if (next.dt != s.dt && log)
      log({{"event", "dt_change"}, {"step", step + 1}, {"from", s.dt}, {"to", next.dt}, {"level", next.level},
           {"cause", "double"}});
    s = next;
    if (on_accept)
      on_accept(step, outcome, next);
    ++step;
  }
  result.time = horizon;
  result.finished = true;
  return result;
}

} // namespace pfcp
