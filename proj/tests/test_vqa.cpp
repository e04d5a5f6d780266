#include <doctest.h>

#include "support.hpp"

using namespace pslvqa;

namespace {

std::vector<std::string> order(const AnswerResult& r) {
  std::vector<std::string> out;
  for (const auto& a : r.ranked) out.push_back(a.phrase);
  return out;
}

double value_of(const AnswerResult& r, const std::string& phrase) {
  for (const auto& a : r.ranked)
    if (a.phrase == phrase) return a.value;
  FAIL("missing answer " << phrase);
  return 0.0;
}

VqaConfig exact() {
  VqaConfig c;
  c.solver.method = SolverMethod::simplex;
  return c;
}

}  // namespace

TEST_CASE("the template program has six rules and one summation constraint") {
  auto program = parse_program(vqa_rules_text({1, 2, 3, 4, 5, 6}, 0.5));
  REQUIRE(program.rules.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) CHECK(program.rules[i].weight == static_cast<double>(i + 1));
  REQUIRE(program.constraints.size() == 1);
  CHECK(program.constraints[0].bound == 0.5);
}

TEST_CASE("question triplets are reoriented and sims added") {
  auto q = support::load_question("barn");
  auto built = build_program(q.instance, q.oracle, {});
  auto id = built.db.find(make_atom("has_q", {"building", "is", "?x"}));
  REQUIRE(id);
  CHECK(*built.db.value(*id) == doctest::Approx(0.9));
  CHECK_FALSE(built.db.find(make_atom("has_q", {"?x", "is", "building"})));
  auto sim = built.db.find(make_atom("sim", {"barn", "building"}));
  REQUIRE(sim);
  CHECK(*built.db.value(*sim) == doctest::Approx(0.8));
  CHECK(built.db.find(make_atom("ans", {"barn"})));
  CHECK(built.db.find(make_atom("candidate", {"church"})));
}

TEST_CASE("without image triplets only the prior rule grounds") {
  auto q = support::load_question("prior_only");
  auto r = rank_answers(q.instance, q.oracle, exact());
  REQUIRE_FALSE(r.ground.potentials.empty());
  for (const GroundRule& g : r.ground.potentials) CHECK(g.rule_index == 1);
  CHECK(order(r) == std::vector<std::string>{"cat", "horse", "dog"});
}

TEST_CASE("single answer") {
  QuestionInstance inst;
  inst.answers = {{"dog", 0.4}};
  SimilarityOracle oracle;
  auto r = rank_answers(inst, oracle);
  REQUIRE(r.ranked.size() == 1);
  CHECK(r.ranked[0].phrase == "dog");
  CHECK(r.ranked[0].value >= 0.0);
  CHECK(r.ranked[0].value <= 1.0 + 1e-6);
}

TEST_CASE("answer lexicon validation") {
  SimilarityOracle oracle;
  QuestionInstance empty;
  CHECK_THROWS_AS(rank_answers(empty, oracle), Error);
  QuestionInstance bad;
  bad.answers = {{"dog", 1.5}};
  CHECK_THROWS_AS(rank_answers(bad, oracle), Error);
  CHECK(parse_answers("barn,0.3\nstop sign,0.2\nred\n").size() == 3);
  CHECK_THROWS_AS(parse_answers("stop, sign\n"), Error);
  CHECK(parse_answers("red\n")[0].prior == 1.0);
}

TEST_CASE("adversarial image triplet does not flip the ranking") {
  auto q = support::load_question("adversarial");
  auto r = rank_answers(q.instance, q.oracle, exact());
  REQUIRE(r.ranked.size() == 2);
  CHECK(r.ranked[0].phrase == "church");
}

TEST_CASE("top-k keeps the highest priors") {
  auto q = support::load_question("prior_only");
  VqaConfig cfg = exact();
  cfg.top_k = 2;
  auto r = rank_answers(q.instance, q.oracle, cfg);
  CHECK(order(r) == std::vector<std::string>{"cat", "horse"});
}

TEST_CASE("summation constraint holds for every instance") {
  for (const char* name : {"barn", "adversarial", "prior_only"})
    for (double bound : {0.5, 1.0})
      for (SolverMethod m : {SolverMethod::admm, SolverMethod::simplex}) {
        auto q = support::load_question(name);
        VqaConfig cfg;
        cfg.bound = bound;
        cfg.solver.method = m;
        auto r = rank_answers(q.instance, q.oracle, cfg);
        double total = 0.0;
        for (const auto& a : r.ranked) {
          CHECK(a.value >= -1e-6);
          total += a.value;
        }
        CHECK(total <= bound + 1e-4);
      }
}

TEST_CASE("raising an answer's prior never lowers its value") {
  auto q = support::load_question("barn");
  double previous = -1.0;
  for (double prior : {0.1, 0.3, 0.5, 0.7, 0.9, 1.0}) {
    q.instance.answers[0].prior = prior;
    auto r = rank_answers(q.instance, q.oracle, exact());
    double v = value_of(r, "barn");
    CHECK(v >= previous - 1e-6);
    previous = v;
  }
}

TEST_CASE("scaling every weight preserves the ranking") {
  for (const char* name : {"barn", "adversarial", "prior_only"}) {
    auto q = support::load_question(name);
    VqaConfig base = exact();
    base.weights = {1.0, 0.5, 2.0, 1.5, 1.0, 0.7};
    VqaConfig scaled = base;
    for (double& w : scaled.weights) w *= 10.0;
    CHECK(order(rank_answers(q.instance, q.oracle, base)) ==
          order(rank_answers(q.instance, q.oracle, scaled)));
  }
}

TEST_CASE("evidence is sound") {
  QuestionInstance inst;
  inst.answers = {{"barn", 1.0}, {"church", 0.9}};
  inst.image = {{"barn", "is", "building", 1.0}};
  inst.question = {{"?x", "is", "building", 1.0, true, true}};
  SimilarityOracle oracle;
  VqaConfig cfg = exact();
  auto r = rank_answers(inst, oracle, cfg);
  REQUIRE(r.ranked[0].phrase == "barn");
  CHECK(r.ranked[0].value > 0.5);
  const auto& ev = r.ranked[0].evidence;
  REQUIRE_FALSE(ev.empty());
  bool has_w4 = false;
  for (const EvidenceItem& e : ev) {
    CHECK(e.head.find("barn") != std::string::npos);
    CHECK(e.distance <= cfg.evidence_epsilon);
    std::vector<double> body;
    for (const auto& [atom, v] : e.body) body.push_back(v);
    CHECK(e.body_truth == doctest::Approx(luk_conjunction(body)));
    has_w4 = has_w4 || e.rule_index == 3;
  }
  CHECK(has_w4);
  for (std::size_t k = 1; k < ev.size(); ++k)
    CHECK(ev[k - 1].weight * ev[k - 1].body_truth >= ev[k].weight * ev[k].body_truth - 1e-12);
}

TEST_CASE("answers with value zero have no evidence") {
  auto q = support::load_question("prior_only");
  auto r = rank_answers(q.instance, q.oracle, exact());
  for (const auto& a : r.ranked) {
    CHECK(a.value == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(a.evidence.empty());
  }
}

TEST_CASE("ranking is deterministic") {
  auto q = support::load_question("adversarial");
  auto a = rank_answers(q.instance, q.oracle);
  auto b = rank_answers(q.instance, q.oracle);
  REQUIRE(a.ranked.size() == b.ranked.size());
  for (std::size_t i = 0; i < a.ranked.size(); ++i) {
    CHECK(a.ranked[i].phrase == b.ranked[i].phrase);
    CHECK(a.ranked[i].value == b.ranked[i].value);
  }
}
