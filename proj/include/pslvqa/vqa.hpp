#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "pslvqa/extraction.hpp"
#include "pslvqa/grounding.hpp"
#include "pslvqa/inference.hpp"
#include "pslvqa/parser.hpp"
#include "pslvqa/similarity.hpp"

namespace pslvqa {

struct Answer {
  std::string phrase;
  double prior = 1.0;
};

struct QuestionInstance {
  std::vector<Answer> answers;
  std::vector<Triplet> image;     // has_img
  std::vector<Triplet> question;  // has_q; the focus node is "?x"
};

struct VqaConfig {
  std::array<double, 6> weights = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
  double bound = 1.0;                     // S in sum ans/1 <= S
  double blocking_threshold = 0.25;
  std::optional<std::size_t> top_k;       // keep the K answers with highest prior
  double evidence_epsilon = 1e-3;
  SolverConfig solver;
  std::size_t max_ground_rules = 5'000'000;
};

// The six rule templates with the given weights, plus declarations and the
// summation constraint.
std::string vqa_rules_text(const std::array<double, 6>& weights, double bound);

struct BuiltProgram {
  Program program;
  Database db;
};

// Question triplets are reoriented so that the focus node sits in the third
// argument. Similarity atoms are added for every pair the rules can join.
BuiltProgram build_program(const QuestionInstance& instance, const SimilarityOracle& oracle,
                           const VqaConfig& config);

struct EvidenceItem {
  std::size_t rule_index = 0;
  double weight = 0.0;
  std::string head;
  std::vector<std::pair<std::string, double>> body;  // atom text, truth value
  double body_truth = 0.0;
  double distance = 0.0;
};

struct RankedAnswer {
  std::string phrase;
  double value = 0.0;
  double prior = 0.0;
  std::vector<EvidenceItem> evidence;
};

struct AnswerResult {
  std::vector<RankedAnswer> ranked;
  BuiltProgram built;
  GroundProgram ground;
  Solution solution;
  std::vector<double> atom_values;  // indexed by AtomId
  bool converged = false;
};

AnswerResult rank_answers(const QuestionInstance& instance, const SimilarityOracle& oracle,
                          const VqaConfig& config = {});

// Satisfied ground rules (distance <= epsilon) whose head mentions the
// answer, sorted by weight times body truth. Answers with value 0 get none.
std::vector<EvidenceItem> extract_evidence(const AnswerResult& result, const std::string& answer,
                                           double epsilon);

// Instance directory: `answers` (phrase,prior per line), `image_triplets`
// and `question_triplets` (predicate records), optional `sims` stub table
// (read into `sims` when given).
QuestionInstance load_instance(const std::string& dir, StubTable* sims = nullptr);
std::vector<Answer> parse_answers(std::string_view text);
std::vector<Triplet> parse_triplet_records(std::string_view text, std::string_view predicate);

}  // namespace pslvqa
