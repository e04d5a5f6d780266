#include <doctest.h>

#include <map>
#include <random>
#include <set>

#include "support.hpp"

using namespace pslvqa;
using support::ground_text;

namespace {

std::string rec(const std::string& pred, const std::vector<std::string>& args, double v) {
  std::string out = "{\"pred\":\"" + pred + "\",\"args\":[";
  for (std::size_t i = 0; i < args.size(); ++i) out += (i ? ",\"" : "\"") + args[i] + "\"";
  return out + "],\"value\":" + std::to_string(v) + "}\n";
}

}  // namespace

TEST_CASE("one ground rule per word") {
  const std::string rules = "predicate word/1\npredicate ans/1 target\n1.0: ans(Z) <- word(Z)\n";
  auto g = ground_text(rules, rec("word", {"a"}, 1.0) + rec("word", {"b"}, 0.6));
  CHECK(g.ground.potentials.size() == 2);
  CHECK(g.ground.targets.size() == 2);

  auto pruned = ground_text(rules, rec("word", {"a"}, 1.0) + rec("word", {"b"}, 0.0));
  CHECK(pruned.ground.potentials.size() == 1);
  CHECK(pruned.db.atom(pruned.ground.potentials[0].i_plus[0]).to_string() == "ans(a)");
}

TEST_CASE("w1 blocking over 3 answers and 4 image triplets") {
  const std::vector<std::string> answers = {"barn", "church", "house"};
  const std::vector<std::vector<std::string>> triplets = {{"horses", "near", "fence"},
                                                          {"building", "behind", "horses"},
                                                          {"crosses", "on", "building"},
                                                          {"sky", "above", "building"}};
  std::map<std::pair<std::string, std::string>, double> sims = {
      {{"barn", "horses"}, 0.6},   {{"barn", "fence"}, 0.5},    {{"barn", "building"}, 0.8},
      {{"barn", "crosses"}, 0.05}, {{"barn", "sky"}, 0.1},      {{"church", "horses"}, 0.1},
      {{"church", "fence"}, 0.3},  {{"church", "building"}, 0.8}, {{"church", "crosses"}, 0.7},
      {{"church", "sky"}, 0.3},    {{"house", "horses"}, 0.2},  {{"house", "fence"}, 0.4},
      {{"house", "building"}, 0.9}, {{"house", "crosses"}, 0.2}, {{"house", "sky"}, 0.5}};
  const double tau = 0.25;

  std::size_t expected = 0;
  for (const auto& z : answers)
    for (const auto& t : triplets)
      if (sims.at({z, t[0]}) >= tau && sims.at({z, t[2]}) >= tau) ++expected;
  CHECK(expected == 5);

  std::string data;
  for (const auto& z : answers) data += rec("word", {z}, 1.0);
  for (const auto& t : triplets) data += rec("has_img", t, 0.9);
  for (const auto& [k, v] : sims) data += rec("sim", {k.first, k.second}, v);
  const std::string rules =
      "predicate word/1\npredicate has_img/3\npredicate sim/2\npredicate has_img_ans/4 target\n"
      "1: has_img_ans(Z, X, R1, Y1) <- word(Z) & has_img(X, R1, Y1) & sim(Z, X) & sim(Z, Y1)\n";
  GroundingOptions options;
  options.blocking.threshold = tau;
  auto g = ground_text(rules, data, options);
  CHECK(g.ground.potentials.size() == expected);

  options.blocking.threshold = 0.0;
  CHECK(ground_text(rules, data, options).ground.potentials.size() == 12);
}

TEST_CASE("blocking filter") {
  CHECK(blocking_filter(std::vector<double>{0.9, 0.4}, 0.25));
  CHECK_FALSE(blocking_filter(std::vector<double>{0.9, 0.1}, 0.25));
  CHECK(blocking_filter(std::vector<double>{0.0, 0.0}, 0.0));
  CHECK(blocking_filter(std::vector<double>{}, 0.9));
}

TEST_CASE("grounding cap names the rule") {
  std::string data;
  for (int i = 0; i < 10; ++i) data += rec("word", {"w" + std::to_string(i)}, 1.0);
  GroundingOptions options;
  options.max_ground_rules = 12;
  try {
    ground_text("predicate word/1\npredicate ans/1 target\n"
                "1: ans(Z) <- word(Z) & word(Z)\n2: ans(Z) <- word(Z) & word(Y)\n",
                data, options);
    FAIL("expected a grounding error");
  } catch (const GroundingError& e) {
    CHECK(e.rule_index() == 1);
  }
}

TEST_CASE("implied targets feed later rules") {
  auto g = ground_text(
      "predicate a/1\npredicate b/1 target\npredicate c/1 target\n"
      "1: c(X) <- b(X)\n1: b(X) <- a(X)\n",
      rec("a", {"x"}, 0.7) + rec("a", {"y"}, 0.2));
  CHECK(g.ground.targets.size() == 4);
  CHECK(g.ground.potentials.size() == 4);
}

TEST_CASE("constant potentials are dropped and constraints cover targets only") {
  auto g = ground_text(
      "predicate a/1\npredicate b/1 target\n"
      "1: a(X) <- a(X)\n1: b(X) <- a(X)\nsum b/1 <= 1\n",
      rec("a", {"x"}, 0.7) + rec("a", {"y"}, 0.2));
  CHECK(g.ground.potentials.size() == 2);
  REQUIRE(g.ground.constraints.size() == 1);
  CHECK(g.ground.constraints[0].atoms == g.ground.targets);
}

TEST_CASE("grounding matches brute-force enumeration") {
  const std::vector<std::string> consts = {"c0", "c1", "c2", "c3", "c4"};
  const std::string rules =
      "predicate e/2\npredicate f/1\npredicate sim/2\npredicate t/2 target\n"
      "1.0: t(X, Y) <- e(X, Y) & sim(X, Y)\n"
      "0.5: t(X, Z) <- e(X, Y) & e(Y, Z) & !f(Z)\n";
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> v(0, 4);
  for (int trial = 0; trial < 10; ++trial) {
    std::map<std::pair<std::string, std::string>, double> e, sim;
    std::map<std::string, double> f;
    std::string data;
    for (const auto& a : consts) {
      int fv = v(rng);
      if (fv < 4) {
        f[a] = fv / 3.0;
        data += rec("f", {a}, f[a]);
      }
      for (const auto& b : consts) {
        int ev = v(rng);
        if (ev < 3) {  // otherwise unlisted
          e[{a, b}] = ev / 2.0;
          data += rec("e", {a, b}, e[{a, b}]);
        }
        sim[{a, b}] = v(rng) / 4.0;
        data += rec("sim", {a, b}, sim[{a, b}]);
      }
    }
    auto val = [](const auto& m, const auto& k) {
      auto it = m.find(k);
      return it == m.end() ? 0.0 : it->second;
    };
    std::multiset<std::string> expected;
    for (const auto& x : consts)
      for (const auto& y : consts) {
        if (val(e, std::make_pair(x, y)) > 0 && val(sim, std::make_pair(x, y)) >= 0.25 &&
            val(sim, std::make_pair(x, y)) > 0)
          expected.insert("0 X=" + x + " Y=" + y);
        for (const auto& z : consts)
          if (val(e, std::make_pair(x, y)) > 0 && val(e, std::make_pair(y, z)) > 0 && val(f, z) < 1.0)
            expected.insert("1 X=" + x + " Y=" + y + " Z=" + z);
      }
    auto g = ground_text(rules, data);
    std::multiset<std::string> got;
    for (const GroundRule& gr : g.ground.potentials) {
      std::string key = std::to_string(gr.rule_index);
      for (const auto& [var, c] : gr.binding) key += " " + var.str() + "=" + c.str();
      got.insert(key);
    }
    CHECK(got == expected);
  }
}

TEST_CASE("zero-body pruning does not change the MAP objective") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> v(0, 4);
  const std::string rules =
      "predicate e/2\npredicate t/1 target\n"
      "1.0: t(X) <- e(X, Y) & e(Y, X)\n"
      "0.7: !t(X) <- e(X, X)\n"
      "sum t/1 <= 1\n";
  for (int trial = 0; trial < 10; ++trial) {
    std::string data;
    for (const auto& a : {"a", "b", "c"})
      for (const auto& b : {"a", "b", "c"}) data += rec("e", {a, b}, v(rng) / 4.0);
    GroundingOptions off;
    off.prune_zero_bodies = false;
    auto pruned = ground_text(rules, data);
    auto full = ground_text(rules, data, off);
    CHECK(full.ground.potentials.size() >= pruned.ground.potentials.size());
    SolverConfig exact;
    exact.method = SolverMethod::simplex;
    double f1 = map_inference(pruned.problem, exact).objective;
    double f2 = map_inference(full.problem, exact).objective;
    CHECK(f1 == doctest::Approx(f2).epsilon(1e-9));
  }
}

TEST_CASE("grounding is deterministic") {
  auto a = support::two_answer();
  auto b = support::two_answer();
  CHECK(dump_grounding(a.ground, a.db) == dump_grounding(b.ground, b.db));
  CHECK(dump_grounding(a.ground, a.db) ==
        "2.000000 | ans(a) | word(a) | rule 0 {}\n1.000000 | ans(b) | word(b) | rule 1 {}\n");
}

TEST_CASE("blocking threshold must lie in [0,1]") {
  GroundingOptions options;
  options.blocking.threshold = 1.5;
  CHECK_THROWS_AS(ground_text("predicate a/1\npredicate b/1 target\n1: b(X) <- a(X)\n", "", options),
                  Error);
}
