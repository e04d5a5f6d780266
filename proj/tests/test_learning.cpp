#include <doctest.h>

#include <map>
#include <sstream>

#include <json.hpp>

#include "support.hpp"

using namespace pslvqa;

namespace {

struct Entity {
  double pos = 0.0;
  double neg = 0.0;
  double label = 0.0;
};

// Reads the fixture records directly, independent of the library parser.
std::map<std::string, Entity> raw_entities() {
  std::map<std::string, Entity> out;
  std::istringstream in(read_file(support::fixture("learning/data/instance.jsonl")));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    Entity& e = out[j["args"][0].get<std::string>()];
    double v = j["value"].get<double>();
    std::string pred = j["pred"];
    if (pred == "pos") e.pos = v;
    else if (pred == "neg") e.neg = v;
    else e.label = v;
  }
  return out;
}

std::vector<double> learned_weights(const LearningResult& r) {
  std::vector<double> w;
  for (const Rule& rule : r.program.rules) w.push_back(rule.weight);
  return w;
}

// Fraction of entities whose MAP value under `program` is within `tol` of the label.
double map_agreement(const Program& program, double tol) {
  auto f = support::learning_fixture();
  Database db = f.instances[0].db;
  auto ground = ground_program(program, db);
  auto problem = InferenceProblem::from_ground_program(ground, db);
  SolverConfig cfg;
  cfg.method = SolverMethod::simplex;
  auto sol = map_inference(problem, cfg);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < ground.targets.size(); ++i)
    if (std::abs(sol.values[i] - *db.value(ground.targets[i])) <= tol) ++ok;
  return static_cast<double>(ok) / static_cast<double>(ground.targets.size());
}

}  // namespace

TEST_CASE("fixture labels are the MAP state at the generating weights") {
  auto f = support::learning_fixture();
  f.program.rules[0].weight = 2.0;
  f.program.rules[1].weight = 0.5;
  CHECK(map_agreement(f.program, 1e-6) == 1.0);
  auto entities = raw_entities();
  CHECK(entities.size() == 40);
  for (const auto& [name, e] : entities) {
    CHECK(e.pos + e.neg >= 1.15 - 1e-9);
    CHECK(e.label == doctest::Approx(e.pos));
  }
}

TEST_CASE("learning recovers the weight ordering") {
  auto f = support::learning_fixture();
  LearningConfig cfg;
  cfg.solver.method = SolverMethod::simplex;
  auto r = learn_weights(f.program, f.instances, cfg);
  auto w = learned_weights(r);
  REQUIRE(w.size() == 2);
  CHECK(w[0] > w[1]);
  CHECK(map_agreement(r.program, 0.1) >= 0.9);
  CHECK(r.trace.size() == cfg.epochs);
  CHECK(r.trace[0].weights == std::vector<double>{1.0, 1.0});
}

TEST_CASE("learning with the ADMM solver also orders the weights") {
  auto f = support::learning_fixture();
  auto r = learn_weights(f.program, f.instances);
  auto w = learned_weights(r);
  CHECK(w[0] > w[1]);
  CHECK(map_agreement(r.program, 0.1) >= 0.9);
}

TEST_CASE("weights stay non-negative") {
  auto f = support::learning_fixture();
  LearningConfig cfg;
  cfg.learning_rate = 5.0;
  cfg.epochs = 10;
  cfg.solver.method = SolverMethod::simplex;
  auto r = learn_weights(f.program, f.instances, cfg);
  for (const EpochTrace& t : r.trace)
    for (double w : t.weights) CHECK(w >= 0.0);
  for (double w : learned_weights(r)) CHECK(w >= 0.0);
}

TEST_CASE("zero learning rate leaves the weights unchanged") {
  auto f = support::learning_fixture();
  LearningConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.epochs = 3;
  auto r = learn_weights(f.program, f.instances, cfg);
  CHECK(learned_weights(r) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("labels at the MAP state are a fixed point") {
  auto f = support::learning_fixture();
  f.program.rules[0].weight = 2.0;
  f.program.rules[1].weight = 0.5;
  LearningConfig cfg;
  cfg.epochs = 5;
  cfg.solver.method = SolverMethod::simplex;
  auto r = learn_weights(f.program, f.instances, cfg);
  auto w = learned_weights(r);
  CHECK(w[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(w[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("label potentials match an independent computation") {
  auto f = support::learning_fixture();
  LearningConfig cfg;
  cfg.epochs = 1;
  cfg.solver.method = SolverMethod::simplex;
  auto r = learn_weights(f.program, f.instances, cfg);
  double phi1 = 0.0, phi2 = 0.0;
  for (const auto& [name, e] : raw_entities()) {
    phi1 += std::max(0.0, e.pos - e.label);
    phi2 += std::max(0.0, e.label + e.neg - 1.0);
  }
  const EpochTrace& t = r.trace.at(0);
  CHECK(std::abs(t.phi_labels[0] - phi1) < 1e-9);
  CHECK(std::abs(t.phi_labels[1] - phi2) < 1e-9);
  for (std::size_t j = 0; j < 2; ++j)
    CHECK(std::abs(t.gradient[j] - (t.phi_labels[j] - t.phi_map[j])) < 1e-12);
}

TEST_CASE("unlabeled targets are rejected") {
  auto f = support::learning_fixture();
  Database db = f.program.make_database();
  db.set_observed(Atom{Symbol("pos"), {Term::constant("a")}}, 0.8);
  db.set_target(Atom{Symbol("label"), {Term::constant("a")}}, std::nullopt);
  CHECK_THROWS_WITH_AS(learn_weights(f.program, {{db}}),
                       doctest::Contains("instance 0: target atom label(a) has no label"), Error);
}

TEST_CASE("hard rules are not learned") {
  auto program = parse_program(
      "predicate pos/1\npredicate label/1 target\n"
      "hard: label(X) <- pos(X)\n1.0: !label(X) <- pos(X)\n");
  Database db = parse_data(
      "{\"pred\":\"pos\",\"args\":[\"a\"],\"value\":0.5}\n"
      "{\"pred\":\"label\",\"args\":[\"a\"],\"value\":0.5,\"target\":true}\n",
      program);
  LearningConfig cfg;
  cfg.epochs = 3;
  cfg.solver.method = SolverMethod::simplex;
  auto r = learn_weights(program, {{db}}, cfg);
  CHECK(r.program.rules[0].is_hard);
}
