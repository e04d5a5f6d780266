#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pslvqa/grounding.hpp"
#include "pslvqa/logic.hpp"

namespace pslvqa {

// Lukasiewicz connectives over [0,1]. Out-of-range input throws Error.
double luk_and(double a, double b);
double luk_or(double a, double b);
double luk_not(double a);

// max{1 - sum_{I+} V - sum_{I-} (1 - V), 0}. `atom_values` is indexed by
// AtomId; NaN marks an unassigned atom and raises Error.
double distance_to_satisfaction(const GroundRule& rule, std::span<const double> atom_values);

// n-ary Lukasiewicz conjunction: max(0, sum v - (n - 1)); 1 for no inputs.
double luk_conjunction(std::span<const double> values);

// weight * max(0, offset + sum coef_i * y_i); hard terms instead require
// offset + sum coef_i * y_i <= 0.
struct HingeTerm {
  std::vector<std::pair<std::size_t, double>> coefficients;
  double offset = 0.0;
  double weight = 1.0;
  bool hard = false;
  std::size_t source = 0;  // index of the ground rule it came from

  double linear(std::span<const double> y) const;
};

// sum_{i in variables} y_i <= bound
struct LinearConstraint {
  std::vector<std::size_t> variables;
  double bound = 1.0;
};

struct InferenceProblem {
  std::size_t num_variables = 0;
  std::vector<HingeTerm> terms;
  std::vector<LinearConstraint> constraints;

  // Variable i corresponds to ground.targets[i].
  static InferenceProblem from_ground_program(const GroundProgram& ground, const Database& db);

  double objective(std::span<const double> y) const;
  // Box, summation and hard constraints within `tolerance`.
  bool feasible(std::span<const double> y, double tolerance = 1e-6) const;
  double total_weight() const;
};

enum class SolverMethod { admm, simplex };

struct SolverConfig {
  SolverMethod method = SolverMethod::admm;
  std::size_t max_iterations = 5000;
  double tolerance = 1e-4;
  double step_size = 1.0;  // ADMM penalty / dual step
  unsigned threads = 1;
};

struct Solution {
  std::vector<double> values;
  double objective = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Best objective seen after each outer iteration; non-increasing.
  std::vector<double> objective_trace;
};

class InfeasibleProblem : public Error {
 public:
  using Error::Error;
};

Solution map_inference(const InferenceProblem& problem, const SolverConfig& config = {});

// Exhaustive search over the grid {0, step, 2*step, ..., 1} for at most
// four variables.
Solution grid_oracle(const InferenceProblem& problem, double step);

// Projects v onto {x in [0,1]^n : sum x <= bound}.
void project_capped_simplex(std::span<double> v, double bound);

// Full assignment indexed by AtomId: observed values from the database,
// targets from `target_values` (aligned with ground.targets).
std::vector<double> atom_assignment(const Database& db, const GroundProgram& ground,
                                    std::span<const double> target_values);

}  // namespace pslvqa
