#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pfcp
{

/// The two staggered blocks: {u, g} with the plastic stage, and {d} with the damage stage.
enum class Block
{
  ug,
  d
};

inline const char* to_string(Block b) { return b == Block::ug ? "ug" : "d"; }
inline Block other(Block b) { return b == Block::ug ? Block::d : Block::ug; }

/// Raised when a block's linearised system cannot be factorised.
class LinearSolveFailure : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// What the staggered driver needs from a discretised problem.
class StaggeredProblem
{
public:
  virtual ~StaggeredProblem() = default;

  /// Field names of a block, in the order used by the norm vectors.
  virtual std::vector<std::string> fields(Block block) const = 0;

  /// Prepares the trial step ending at t_new (boundary values, local history).
  virtual void begin_step(double t_new, double dt) = 0;

  /// Evaluates and linearises the block at the current iterate; returns the
  /// Euclidean residual norm of each field over free dofs. May throw LocalDivergence.
  virtual std::vector<double> residual_norms(Block block) = 0;

  /// Solves for the Newton correction of the last evaluation and returns its norm per field.
  virtual std::vector<double> solve_linearized(Block block) = 0;

  /// Adds scale times the last correction to the block's unknowns.
  virtual void apply_update(Block block, double scale) = 0;

  virtual void commit_step() = 0;
  virtual void rollback_step() = 0;
};

} // namespace pfcp
