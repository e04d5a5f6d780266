#pragma once

// Shared fixtures and independent reference implementations for the unit
// and acceptance tests.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "pslvqa/extraction.hpp"
#include "pslvqa/grounding.hpp"
#include "pslvqa/inference.hpp"
#include "pslvqa/learning.hpp"
#include "pslvqa/parser.hpp"
#include "pslvqa/similarity.hpp"
#include "pslvqa/vqa.hpp"

#ifndef PSLVQA_FIXTURE_DIR
#define PSLVQA_FIXTURE_DIR "tests/fixtures"
#endif

namespace support {

using namespace pslvqa;

inline std::string fixture(const std::string& rel) { return std::string(PSLVQA_FIXTURE_DIR) + "/" + rel; }

struct Grounded {
  Program program;
  Database db;
  GroundProgram ground;
  InferenceProblem problem;
};

inline Grounded ground_text(const std::string& rules, const std::string& data,
                            const GroundingOptions& options = {}) {
  Grounded g;
  g.program = parse_program(rules);
  g.db = parse_data(data, g.program);
  g.ground = ground_program(g.program, g.db, options);
  g.problem = InferenceProblem::from_ground_program(g.ground, g.db);
  return g;
}

inline Grounded two_answer() {
  return ground_text(read_file(fixture("two_answer/rules.psl")),
                     read_file(fixture("two_answer/data.jsonl")));
}

struct LoadedInstance {
  QuestionInstance instance;
  SimilarityOracle oracle;
};

inline LoadedInstance load_question(const std::string& name) {
  LoadedInstance out;
  StubTable sims;
  out.instance = load_instance(fixture(name), &sims);
  out.oracle.set_stub(std::move(sims));
  return out;
}

// Reference hinge evaluation, written against the raw clause description
// rather than the library's linearized terms.
struct RefClause {
  double weight = 1.0;
  std::vector<std::size_t> plus_targets;
  std::vector<std::size_t> minus_targets;
  std::vector<double> plus_observed;
  std::vector<double> minus_observed;
};

struct RefInstance {
  std::size_t n = 0;
  std::vector<RefClause> clauses;
  bool has_sum = false;
  double bound = 1.0;
};

inline double ref_distance(const RefClause& c, const std::vector<double>& y) {
  double truth = 0.0;
  for (std::size_t i : c.plus_targets) truth += y[i];
  for (double v : c.plus_observed) truth += v;
  for (std::size_t i : c.minus_targets) truth += 1.0 - y[i];
  for (double v : c.minus_observed) truth += 1.0 - v;
  return std::max(0.0, 1.0 - truth);
}

inline double ref_objective(const RefInstance& inst, const std::vector<double>& y) {
  double f = 0.0;
  for (const RefClause& c : inst.clauses) f += c.weight * ref_distance(c, y);
  return f;
}

inline InferenceProblem to_problem(const RefInstance& inst) {
  InferenceProblem p;
  p.num_variables = inst.n;
  for (std::size_t k = 0; k < inst.clauses.size(); ++k) {
    const RefClause& c = inst.clauses[k];
    HingeTerm t;
    t.weight = c.weight;
    t.source = k;
    t.offset = 1.0;
    std::vector<double> coef(inst.n, 0.0);
    for (std::size_t i : c.plus_targets) coef[i] -= 1.0;
    for (double v : c.plus_observed) t.offset -= v;
    for (std::size_t i : c.minus_targets) {
      coef[i] += 1.0;
      t.offset -= 1.0;
    }
    for (double v : c.minus_observed) t.offset -= 1.0 - v;
    for (std::size_t i = 0; i < inst.n; ++i)
      if (coef[i] != 0.0) t.coefficients.emplace_back(i, coef[i]);
    p.terms.push_back(std::move(t));
  }
  if (inst.has_sum) {
    LinearConstraint c;
    for (std::size_t i = 0; i < inst.n; ++i) c.variables.push_back(i);
    c.bound = inst.bound;
    p.constraints.push_back(std::move(c));
  }
  return p;
}

// <= 3 targets, <= 6 clauses, weights in [0,2], observed values on a 0.1
// grid, half of the instances with sum y <= S for S in {0.5, 1.0}.
inline RefInstance random_instance(std::mt19937& rng) {
  std::uniform_int_distribution<int> n_dist(1, 3), m_dist(1, 6), coin(0, 1), tenth(0, 10);
  std::uniform_real_distribution<double> w_dist(0.0, 2.0);
  RefInstance inst;
  inst.n = static_cast<std::size_t>(n_dist(rng));
  int m = m_dist(rng);
  for (int k = 0; k < m; ++k) {
    RefClause c;
    c.weight = w_dist(rng);
    for (std::size_t i = 0; i < inst.n; ++i) {
      int r = std::uniform_int_distribution<int>(0, 2)(rng);
      if (r == 1) c.plus_targets.push_back(i);
      if (r == 2) c.minus_targets.push_back(i);
    }
    if (c.plus_targets.empty() && c.minus_targets.empty()) c.plus_targets.push_back(0);
    int obs = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int o = 0; o < obs; ++o) {
      double v = 0.1 * tenth(rng);
      (coin(rng) ? c.plus_observed : c.minus_observed).push_back(v);
    }
    inst.clauses.push_back(std::move(c));
  }
  inst.has_sum = coin(rng) == 1;
  inst.bound = coin(rng) ? 0.5 : 1.0;
  return inst;
}

// Exhaustive grid search on the reference objective.
inline double ref_grid_minimum(const RefInstance& inst, int steps) {
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> idx(inst.n, 0);
  std::vector<double> y(inst.n, 0.0);
  while (true) {
    double sum = 0.0;
    for (std::size_t i = 0; i < inst.n; ++i) {
      y[i] = static_cast<double>(idx[i]) / steps;
      sum += y[i];
    }
    if (!inst.has_sum || sum <= inst.bound + 1e-9) best = std::min(best, ref_objective(inst, y));
    std::size_t i = 0;
    while (i < inst.n && ++idx[i] > steps) idx[i++] = 0;
    if (i == inst.n) break;
  }
  return best;
}

// Synthetic extraction corpus: "NOUN RELATION NOUN" sentences where the
// linking phrase is a vocabulary relation verbatim.
struct SyntheticCorpus {
  std::vector<ParsedSentence> sentences;
  std::vector<std::string> expected;
  std::vector<std::string> relations;
  EmbeddingStore store;
};

inline SyntheticCorpus synthetic_corpus(std::size_t count, unsigned seed) {
  SyntheticCorpus c;
  c.relations = {"sitting on", "standing near", "holding",    "riding",      "behind",
                 "next to",    "on top of",     "wearing",    "looking at",  "under",
                 "parked near", "hanging from", "walking on", "lying in",    "eating"};
  const std::vector<std::string> nouns = {"man",  "dog",   "table", "car",   "tree",
                                          "bird", "horse", "woman", "bench", "kite"};
  std::mt19937 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  c.store.name = "synthetic";
  c.store.dimension = 50;
  auto add_word = [&](const std::string& w) {
    if (c.store.vectors.contains(w)) return;
    std::vector<double> v(50);
    for (double& x : v) x = g(rng);
    c.store.vectors.emplace(w, std::move(v));
  };
  for (const auto& n : nouns) add_word(n);
  for (const auto& r : c.relations)
    for (const auto& t : tokenize(r)) add_word(t);

  std::uniform_int_distribution<std::size_t> pick_noun(0, nouns.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_rel(0, c.relations.size() - 1);
  for (std::size_t k = 0; k < count; ++k) {
    const std::string& rel = c.relations[pick_rel(rng)];
    auto rel_tokens = tokenize(rel);
    ParsedSentence s;
    s.confidence = 1.0;
    const std::size_t root = 2;  // first relation token
    s.tokens.push_back({nouns[pick_noun(rng)], "", "NN", root, "nsubj"});
    for (std::size_t i = 0; i < rel_tokens.size(); ++i) {
      Token t{rel_tokens[i], rel_tokens[i], i == 0 ? "VBG" : "IN", i == 0 ? 0 : root, "dep"};
      s.tokens.push_back(t);
    }
    s.tokens.push_back({nouns[pick_noun(rng)], "", "NN", root, "obj"});
    for (Token& t : s.tokens)
      if (t.lemma.empty()) t.lemma = t.form;
    c.sentences.push_back(std::move(s));
    c.expected.push_back(rel);
  }
  return c;
}

struct LearningFixture {
  Program program;
  std::vector<LearningInstance> instances;
};

inline LearningFixture learning_fixture() {
  LearningFixture f;
  f.program = parse_program(read_file(fixture("learning/rules.psl")));
  f.instances.push_back({parse_data(read_file(fixture("learning/data/instance.jsonl")), f.program)});
  return f;
}

}  // namespace support
