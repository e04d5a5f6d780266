#pragma once

#include "pslvqa/inference.hpp"

namespace pslvqa::detail {

Solution solve_admm(const InferenceProblem& problem, const SolverConfig& config);
Solution solve_simplex(const InferenceProblem& problem, const SolverConfig& config);

// Clips to the box and projects onto every summation constraint.
void repair(const InferenceProblem& problem, std::span<double> y);

}  // namespace pslvqa::detail
