#pragma once

#include <cstddef>
#include <vector>

#include "pslvqa/grounding.hpp"
#include "pslvqa/inference.hpp"
#include "pslvqa/parser.hpp"

namespace pslvqa {

// A database whose target atoms all carry labels.
struct LearningInstance {
  Database db;
};

struct LearningConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 50;
  SolverConfig solver;
  GroundingOptions grounding;
};

struct EpochTrace {
  std::size_t epoch = 0;
  std::vector<double> weights;      // before the update
  std::vector<double> phi_labels;   // per rule, summed over instances
  std::vector<double> phi_map;
  std::vector<double> gradient;     // phi_labels - phi_map
  double loss = 0.0;                // sum_j w_j * gradient_j
};

struct LearningResult {
  Program program;  // with learned weights
  std::vector<EpochTrace> trace;
};

// Per rule j, Phi_j(y) sums the distance to satisfaction of j's ground rules.
std::vector<double> rule_potentials(const InferenceProblem& problem, const GroundProgram& ground,
                                    std::size_t num_rules, std::span<const double> y);

// Perceptron-style approximation of maximum likelihood: the expectation in
// the gradient is replaced by the MAP state under the current weights.
// Hard rules keep their status and are not learned.
LearningResult learn_weights(const Program& program, const std::vector<LearningInstance>& instances,
                             const LearningConfig& config = {});

}  // namespace pslvqa
