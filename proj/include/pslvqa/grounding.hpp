#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "pslvqa/logic.hpp"
#include "pslvqa/parser.hpp"

namespace pslvqa {

class GroundingError : public Error {
 public:
  GroundingError(std::size_t rule_index, const std::string& message);
  std::size_t rule_index() const { return rule_index_; }

 private:
  std::size_t rule_index_;
};

// Similarity atoms below `threshold` block a binding.
struct BlockingPolicy {
  double threshold = 0.25;
  std::vector<std::string> similarity_predicates = {"sim"};
};

bool blocking_filter(std::span<const double> similarity_values, double threshold);

struct GroundingOptions {
  BlockingPolicy blocking;
  std::size_t max_ground_rules = 5'000'000;
  // Skip bindings whose body contains an observed atom with truth 0 (or a
  // negated observed atom with truth 1). Unlisted observed atoms are never
  // enumerated either way.
  bool prune_zero_bodies = true;
};

struct GroundRule {
  double weight = 0.0;
  bool is_hard = false;
  std::vector<AtomId> i_plus;
  std::vector<AtomId> i_minus;
  std::size_t rule_index = 0;
  std::vector<std::pair<Symbol, Symbol>> binding;  // variable -> constant, by name
};

struct GroundConstraint {
  std::vector<AtomId> atoms;
  double bound = 1.0;
  std::size_t constraint_index = 0;
};

struct GroundProgram {
  std::vector<GroundRule> potentials;
  std::vector<AtomId> targets;  // ascending atom id
  std::vector<GroundConstraint> constraints;
};

// Instantiates every rule against `db`. Target atoms implied by rule heads
// (or negated body literals) that are not yet stored are added to `db` as
// uninitialized targets; after this call the database should be treated as
// frozen.
GroundProgram ground_program(const Program& program, Database& db,
                             const GroundingOptions& options = {});

// One line per ground rule: `weight | I+ | I- | provenance`.
std::string dump_grounding(const GroundProgram& ground, const Database& db);

}  // namespace pslvqa
