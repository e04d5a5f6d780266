#include "pslvqa/learning.hpp"

#include <algorithm>
#include <cmath>

namespace pslvqa {

std::vector<double> rule_potentials(const InferenceProblem& problem, const GroundProgram& ground,
                                    std::size_t num_rules, std::span<const double> y) {
  std::vector<double> phi(num_rules, 0.0);
  for (const HingeTerm& t : problem.terms) {
    if (t.hard) continue;
    phi[ground.potentials[t.source].rule_index] += std::max(0.0, t.linear(y));
  }
  return phi;
}

namespace {

struct PreparedInstance {
  Database db;
  GroundProgram ground;
  InferenceProblem problem;
  std::vector<double> labels;
};

}  // namespace

LearningResult learn_weights(const Program& program, const std::vector<LearningInstance>& instances,
                             const LearningConfig& config) {
  if (instances.empty()) throw Error("weight learning needs at least one instance");
  if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
    throw Error("learning rate must be a finite non-negative number");

  const std::size_t m = program.rules.size();
  std::vector<PreparedInstance> prepared;
  for (std::size_t k = 0; k < instances.size(); ++k) {
    PreparedInstance p{instances[k].db, {}, {}, {}};
    p.ground = ground_program(program, p.db, config.grounding);
    for (AtomId id : p.ground.targets) {
      auto v = p.db.value(id);
      if (!v)
        throw Error("instance " + std::to_string(k) + ": target atom " + p.db.atom(id).to_string() +
                    " has no label");
      p.labels.push_back(*v);
    }
    p.problem = InferenceProblem::from_ground_program(p.ground, p.db);
    prepared.push_back(std::move(p));
  }

  std::vector<double> weights(m);
  for (std::size_t j = 0; j < m; ++j) weights[j] = program.rules[j].weight;

  std::vector<double> phi_labels(m, 0.0);
  for (const PreparedInstance& p : prepared) {
    auto phi = rule_potentials(p.problem, p.ground, m, p.labels);
    for (std::size_t j = 0; j < m; ++j) phi_labels[j] += phi[j];
  }

  LearningResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    EpochTrace trace;
    trace.epoch = epoch;
    trace.weights = weights;
    trace.phi_labels = phi_labels;
    trace.phi_map.assign(m, 0.0);
    for (PreparedInstance& p : prepared) {
      for (HingeTerm& t : p.problem.terms)
        if (!t.hard) t.weight = weights[p.ground.potentials[t.source].rule_index];
      Solution sol = map_inference(p.problem, config.solver);
      auto phi = rule_potentials(p.problem, p.ground, m, sol.values);
      for (std::size_t j = 0; j < m; ++j) trace.phi_map[j] += phi[j];
    }
    trace.gradient.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      double g = trace.phi_labels[j] - trace.phi_map[j];
      if (!std::isfinite(g)) throw Error("non-finite gradient at epoch " + std::to_string(epoch));
      trace.gradient[j] = g;
      trace.loss += weights[j] * g;
    }
    for (std::size_t j = 0; j < m; ++j)
      if (!program.rules[j].is_hard)
        weights[j] = std::max(0.0, weights[j] - config.learning_rate * trace.gradient[j]);
    result.trace.push_back(std::move(trace));
  }

  result.program = program;
  for (std::size_t j = 0; j < m; ++j) result.program.rules[j].weight = weights[j];
  return result;
}

}  // namespace pslvqa
