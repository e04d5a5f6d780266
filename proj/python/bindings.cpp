#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pslvqa/extraction.hpp"
#include "pslvqa/inference.hpp"
#include "pslvqa/learning.hpp"
#include "pslvqa/parser.hpp"
#include "pslvqa/similarity.hpp"
#include "pslvqa/vqa.hpp"

namespace py = pybind11;
using namespace pslvqa;

namespace {

SolverConfig solver_config(const std::string& method, std::size_t max_iterations, double tolerance,
                           unsigned threads) {
  SolverConfig c;
  if (method == "admm") c.method = SolverMethod::admm;
  else if (method == "simplex") c.method = SolverMethod::simplex;
  else throw Error("unknown solver '" + method + "'");
  c.max_iterations = max_iterations;
  c.tolerance = tolerance;
  c.threads = threads;
  return c;
}

SimilarityOracle make_oracle(const std::vector<std::string>& embeddings, const std::string& sims) {
  SimilarityOracle oracle;
  for (std::size_t i = 0; i < embeddings.size(); ++i)
    oracle.add_store(load_embeddings(embeddings[i], "store" + std::to_string(i)));
  if (!sims.empty()) oracle.set_stub(StubTable::parse(sims));
  return oracle;
}

py::dict solution_dict(const Database& db, const GroundProgram& ground, const Solution& s) {
  py::dict values;
  for (std::size_t i = 0; i < ground.targets.size(); ++i)
    values[py::str(db.atom(ground.targets[i]).to_string())] = s.values[i];
  py::dict out;
  out["objective"] = s.objective;
  out["converged"] = s.converged;
  out["iterations"] = s.iterations;
  out["values"] = values;
  return out;
}

struct Loaded {
  Program program;
  Database db;
  GroundProgram ground;
  InferenceProblem problem;
};

Loaded load(const std::string& rules, const std::string& data, double tau) {
  Loaded l;
  l.program = parse_program(rules);
  l.db = parse_data(data, l.program);
  GroundingOptions options;
  options.blocking.threshold = tau;
  l.ground = ground_program(l.program, l.db, options);
  l.problem = InferenceProblem::from_ground_program(l.ground, l.db);
  return l;
}

py::list triplet_list(const std::vector<Triplet>& triplets) {
  py::list out;
  for (const Triplet& t : triplets) out.append(py::make_tuple(t.node1, t.relation, t.node2, t.confidence));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Probabilistic soft logic engine for visual question answering";
  py::register_exception<Error>(m, "PslError", PyExc_ValueError);

  m.def("luk_and", &luk_and);
  m.def("luk_or", &luk_or);
  m.def("luk_not", &luk_not);

  m.def(
      "infer",
      [](const std::string& rules, const std::string& data, const std::string& solver, double tau,
         std::size_t max_iterations, double tolerance, unsigned threads) {
        Loaded l = load(rules, data, tau);
        return solution_dict(l.db, l.ground,
                             map_inference(l.problem, solver_config(solver, max_iterations, tolerance, threads)));
      },
      py::arg("rules"), py::arg("data"), py::arg("solver") = "admm", py::arg("tau") = 0.25,
      py::arg("max_iterations") = 5000, py::arg("tolerance") = 1e-4, py::arg("threads") = 1);

  m.def(
      "grid_oracle",
      [](const std::string& rules, const std::string& data, double step, double tau) {
        Loaded l = load(rules, data, tau);
        return solution_dict(l.db, l.ground, grid_oracle(l.problem, step));
      },
      py::arg("rules"), py::arg("data"), py::arg("step") = 0.01, py::arg("tau") = 0.25);

  m.def(
      "dump_grounding",
      [](const std::string& rules, const std::string& data, double tau) {
        Loaded l = load(rules, data, tau);
        return dump_grounding(l.ground, l.db);
      },
      py::arg("rules"), py::arg("data"), py::arg("tau") = 0.25);

  m.def(
      "similarity",
      [](const std::string& a, const std::string& b, const std::vector<std::string>& embeddings,
         const std::string& sims) { return make_oracle(embeddings, sims).similarity(a, b); },
      py::arg("a"), py::arg("b"), py::arg("embeddings") = std::vector<std::string>{},
      py::arg("sims") = "");

  m.def(
      "extract",
      [](const std::string& conll, const std::vector<std::string>& vocabulary,
         const std::vector<std::string>& embeddings, const std::string& sims, bool question) {
        SimilarityOracle oracle = make_oracle(embeddings, sims);
        RelationVocabulary vocab(vocabulary, oracle);
        auto sentences = parse_conll(conll);
        if (!question) return triplet_list(captions_to_triplets(sentences, vocab, oracle));
        std::vector<Triplet> all;
        for (const auto& s : sentences) {
          auto t = question_to_triplets(s, vocab, oracle);
          all.insert(all.end(), t.begin(), t.end());
        }
        return triplet_list(all);
      },
      py::arg("conll"), py::arg("vocabulary"), py::arg("embeddings") = std::vector<std::string>{},
      py::arg("sims") = "", py::arg("question") = false);

  m.def(
      "answer",
      [](const std::string& instance_dir, std::vector<double> weights, double bound, double tau,
         const std::string& solver, std::vector<std::string> embeddings) {
        StubTable stub;
        QuestionInstance instance = load_instance(instance_dir, &stub);
        SimilarityOracle oracle = make_oracle(embeddings, "");
        oracle.set_stub(std::move(stub));
        VqaConfig cfg;
        if (weights.size() != 6) throw Error("weights must list 6 values");
        std::copy(weights.begin(), weights.end(), cfg.weights.begin());
        cfg.bound = bound;
        cfg.blocking_threshold = tau;
        cfg.solver = solver_config(solver, 5000, 1e-4, 1);
        AnswerResult r = rank_answers(instance, oracle, cfg);
        py::list out;
        for (const RankedAnswer& a : r.ranked) {
          py::list evidence;
          for (const EvidenceItem& e : a.evidence) {
            py::dict item;
            item["rule"] = e.rule_index + 1;
            item["weight"] = e.weight;
            item["head"] = e.head;
            item["body"] = e.body;
            item["body_truth"] = e.body_truth;
            item["distance"] = e.distance;
            evidence.append(item);
          }
          py::dict d;
          d["answer"] = a.phrase;
          d["value"] = a.value;
          d["prior"] = a.prior;
          d["converged"] = r.converged;
          d["evidence"] = evidence;
          out.append(d);
        }
        return out;
      },
      py::arg("instance_dir"), py::arg("weights") = std::vector<double>(6, 1.0), py::arg("bound") = 1.0,
      py::arg("tau") = 0.25, py::arg("solver") = "admm", py::arg("embeddings") = std::vector<std::string>{});

  m.def(
      "learn",
      [](const std::string& rules, const std::vector<std::string>& data, std::size_t epochs,
         double learning_rate, const std::string& solver) {
        Program program = parse_program(rules);
        std::vector<LearningInstance> instances;
        for (const auto& d : data) instances.push_back({parse_data(d, program)});
        LearningConfig cfg;
        cfg.epochs = epochs;
        cfg.learning_rate = learning_rate;
        cfg.solver = solver_config(solver, 5000, 1e-4, 1);
        LearningResult r = learn_weights(program, instances, cfg);
        std::vector<double> weights;
        for (const Rule& rule : r.program.rules) weights.push_back(rule.weight);
        return py::make_tuple(weights, rewrite_weights(rules, r.program));
      },
      py::arg("rules"), py::arg("data"), py::arg("epochs") = 50, py::arg("learning_rate") = 0.1,
      py::arg("solver") = "admm");
}
