// psl-vqa: batch front end for inference, extraction, answering and learning.
//
// Exit codes: 0 success, 2 solver did not converge, 1 error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pslvqa/extraction.hpp"
#include "pslvqa/grounding.hpp"
#include "pslvqa/inference.hpp"
#include "pslvqa/learning.hpp"
#include "pslvqa/parser.hpp"
#include "pslvqa/similarity.hpp"
#include "pslvqa/vqa.hpp"

using namespace pslvqa;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Config {
  double tau = 0.25;
  double bound = 1.0;
  double evidence_epsilon = 1e-3;
  SolverConfig solver;
  std::vector<std::string> embeddings;
  std::string vocabulary;
  std::string sims;
  std::size_t max_distance = 10;
  std::optional<std::size_t> top_k;
  std::array<double, 6> weights = {1, 1, 1, 1, 1, 1};
  std::size_t epochs = 50;
  double learning_rate = 0.1;
  unsigned seed = 0;
};

SolverMethod parse_method(const std::string& name) {
  if (name == "admm") return SolverMethod::admm;
  if (name == "simplex") return SolverMethod::simplex;
  throw Error("unknown solver '" + name + "' (expected admm or simplex)");
}

void load_config_file(const std::string& path, Config& c) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  if (!j.is_object()) throw Error(path + ": config must be a JSON object");
  try {
    for (auto& [key, v] : j.items()) {
      if (key == "tau") c.tau = v.get<double>();
      else if (key == "bound") c.bound = v.get<double>();
      else if (key == "evidence_epsilon") c.evidence_epsilon = v.get<double>();
      else if (key == "solver") c.solver.method = parse_method(v.get<std::string>());
      else if (key == "tolerance") c.solver.tolerance = v.get<double>();
      else if (key == "max_iterations") c.solver.max_iterations = v.get<std::size_t>();
      else if (key == "step_size") c.solver.step_size = v.get<double>();
      else if (key == "threads") c.solver.threads = v.get<unsigned>();
      else if (key == "embeddings") c.embeddings = v.get<std::vector<std::string>>();
      else if (key == "vocabulary") c.vocabulary = v.get<std::string>();
      else if (key == "sims") c.sims = v.get<std::string>();
      else if (key == "max_distance") c.max_distance = v.get<std::size_t>();
      else if (key == "top_k") c.top_k = v.get<std::size_t>();
      else if (key == "weights") {
        auto w = v.get<std::vector<double>>();
        if (w.size() != 6) throw Error(path + ": weights must list 6 values");
        std::copy(w.begin(), w.end(), c.weights.begin());
      } else if (key == "epochs") c.epochs = v.get<std::size_t>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "seed") c.seed = v.get<unsigned>();
      else throw Error(path + ": unknown config key '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

void validate(const Config& c) {
  if (!(c.tau >= 0.0 && c.tau <= 1.0)) throw Error("tau must lie in [0,1]");
  if (!(c.bound > 0.0)) throw Error("bound must be positive");
  if (!(c.evidence_epsilon >= 0.0)) throw Error("evidence epsilon must be non-negative");
  if (!(c.solver.tolerance > 0.0)) throw Error("tolerance must be positive");
  if (c.solver.max_iterations == 0) throw Error("max iterations must be positive");
  if (c.solver.threads == 0) throw Error("threads must be at least 1");
  if (c.embeddings.size() > 2) throw Error("at most two embedding files");
  if (!(c.learning_rate >= 0.0)) throw Error("learning rate must be non-negative");
}

// Flags shared by every subcommand. Values given on the command line
// override the config file.
struct Common {
  std::string config_path;
  std::string dump_path;
  std::string out_path;
  std::string solver;
  unsigned threads = 0;
  double tolerance = 0.0;
  std::size_t max_iterations = 0;
  double tau = -1.0;
  double bound = -1.0;
  std::vector<std::string> embeddings;
  std::string sims;
  std::string vocabulary;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--dump-grounding", dump_path, "write an audit of the ground program here");
    app->add_option("-o,--out", out_path, "output file (default stdout)");
    app->add_option("--solver", solver, "admm or simplex");
    app->add_option("--threads", threads, "worker threads for ADMM");
    app->add_option("--tolerance", tolerance, "solver tolerance");
    app->add_option("--max-iterations", max_iterations, "solver iteration cap");
    app->add_option("--tau", tau, "similarity blocking threshold");
    app->add_option("--bound", bound, "summation bound S");
    app->add_option("--embeddings", embeddings, "embedding files (at most two)");
    app->add_option("--sims", sims, "similarity stub table");
  }

  Config resolve() const {
    Config c;
    if (!config_path.empty()) load_config_file(config_path, c);
    if (!solver.empty()) c.solver.method = parse_method(solver);
    if (threads) c.solver.threads = threads;
    if (tolerance > 0.0) c.solver.tolerance = tolerance;
    if (max_iterations) c.solver.max_iterations = max_iterations;
    if (tau >= 0.0) c.tau = tau;
    if (bound >= 0.0) c.bound = bound;
    if (!embeddings.empty()) c.embeddings = embeddings;
    if (!sims.empty()) c.sims = sims;
    if (!vocabulary.empty()) c.vocabulary = vocabulary;
    validate(c);
    return c;
  }
};

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << text;
}

std::string quote(const std::string& s) { return json(s).dump(); }

std::string args_json(const Atom& atom) {
  std::string out = "[";
  for (std::size_t i = 0; i < atom.args.size(); ++i) {
    if (i) out += ",";
    out += quote(atom.args[i].name().str());
  }
  return out + "]";
}

SimilarityOracle make_oracle(const Config& c, StubTable* stub, std::vector<std::string>& warnings) {
  SimilarityOracle oracle;
  for (std::size_t i = 0; i < c.embeddings.size(); ++i)
    oracle.add_store(load_embeddings(c.embeddings[i], "store" + std::to_string(i), &warnings));
  StubTable table = stub ? std::move(*stub) : StubTable{};
  if (!c.sims.empty()) table.merge(StubTable::load(c.sims));
  if (table.size()) oracle.set_stub(std::move(table));
  return oracle;
}

void flush_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string solution_text(const Database& db, const GroundProgram& ground, const Solution& s) {
  std::string out = "{\"objective\":" + format_value(s.objective) +
                    ",\"converged\":" + (s.converged ? "true" : "false") +
                    ",\"iterations\":" + std::to_string(s.iterations) + "}\n";
  for (std::size_t i = 0; i < ground.targets.size(); ++i) {
    const Atom& a = db.atom(ground.targets[i]);
    out += "{\"pred\":" + quote(a.predicate.str()) + ",\"args\":" + args_json(a) +
           ",\"value\":" + format_value(s.values[i]) + "}\n";
  }
  return out;
}

struct Grounded {
  Program program;
  Database db;
  GroundProgram ground;
  InferenceProblem problem;
};

Grounded ground_files(const std::string& rules, const std::string& data, const Config& c) {
  Grounded g;
  g.program = parse_program(read_file(rules));
  std::vector<std::string> warnings;
  g.db = parse_data(read_file(data), g.program, &warnings);
  flush_warnings(warnings);
  GroundingOptions options;
  options.blocking.threshold = c.tau;
  g.ground = ground_program(g.program, g.db, options);
  g.problem = InferenceProblem::from_ground_program(g.ground, g.db);
  return g;
}

int cmd_infer(const std::string& rules, const std::string& data, const Common& common) {
  Config c = common.resolve();
  Grounded g = ground_files(rules, data, c);
  if (!common.dump_path.empty()) write_output(common.dump_path, dump_grounding(g.ground, g.db));
  Solution s = map_inference(g.problem, c.solver);
  write_output(common.out_path, solution_text(g.db, g.ground, s));
  if (!s.converged) {
    std::cerr << "solver did not converge after " << s.iterations << " iterations\n";
    return 2;
  }
  return 0;
}

int cmd_oracle(const std::string& rules, const std::string& data, double step, const Common& common) {
  Config c = common.resolve();
  Grounded g = ground_files(rules, data, c);
  if (!common.dump_path.empty()) write_output(common.dump_path, dump_grounding(g.ground, g.db));
  Solution s = grid_oracle(g.problem, step);
  write_output(common.out_path, solution_text(g.db, g.ground, s));
  return 0;
}

int cmd_extract(const std::string& captions, bool question, const Common& common) {
  Config c = common.resolve();
  if (c.vocabulary.empty()) throw Error("a relation vocabulary is required (--vocab)");
  std::vector<std::string> warnings;
  SimilarityOracle oracle = make_oracle(c, nullptr, warnings);
  auto vocab = RelationVocabulary::load(c.vocabulary, oracle);
  auto sentences = parse_conll(read_file(captions));
  ExtractionOptions options;
  options.max_distance = c.max_distance;

  std::string audit;
  if (!common.dump_path.empty()) {
    for (std::size_t k = 0; k < sentences.size(); ++k)
      for (const NodePair& p : extract_pairs(sentences[k], question, options)) {
        auto f = connecting_features(sentences[k], p);
        auto r = predict_relation(f, vocab, oracle);
        audit += std::to_string(k + 1) + " | " + p.first.phrase + " | " + p.second.phrase + " | " +
                 f.linking_phrase + " | " + f.path_phrase + " | " + r.relation + " | " +
                 format_value(r.confidence) + "\n";
      }
    write_output(common.dump_path, audit);
  }

  std::vector<Triplet> triplets;
  if (question) {
    for (const ParsedSentence& s : sentences) {
      auto t = question_to_triplets(s, vocab, oracle, &warnings, options);
      triplets.insert(triplets.end(), t.begin(), t.end());
    }
  } else {
    triplets = captions_to_triplets(sentences, vocab, oracle, options);
  }
  flush_warnings(warnings);
  write_output(common.out_path, triplets_to_records(triplets, question ? "has_q" : "has_img"));
  return 0;
}

std::string ranking_text(const AnswerResult& r) {
  std::string out;
  for (std::size_t i = 0; i < r.ranked.size(); ++i) {
    const RankedAnswer& a = r.ranked[i];
    out += "{\"rank\":" + std::to_string(i + 1) + ",\"answer\":" + quote(a.phrase) +
           ",\"value\":" + format_value(a.value) + ",\"prior\":" + format_value(a.prior) +
           ",\"converged\":" + (r.converged ? "true" : "false") + ",\"evidence\":[";
    for (std::size_t k = 0; k < a.evidence.size(); ++k) {
      const EvidenceItem& e = a.evidence[k];
      if (k) out += ",";
      out += "{\"rule\":" + std::to_string(e.rule_index + 1) + ",\"weight\":" + format_value(e.weight) +
             ",\"head\":" + quote(e.head) + ",\"body\":[";
      for (std::size_t b = 0; b < e.body.size(); ++b) {
        if (b) out += ",";
        out += "{\"atom\":" + quote(e.body[b].first) + ",\"value\":" + format_value(e.body[b].second) + "}";
      }
      out += "],\"body_truth\":" + format_value(e.body_truth) + ",\"distance\":" + format_value(e.distance) + "}";
    }
    out += "]}\n";
  }
  return out;
}

int cmd_answer(const std::string& dir, const Common& common) {
  Config c = common.resolve();
  StubTable stub;
  QuestionInstance instance = load_instance(dir, &stub);
  std::vector<std::string> warnings;
  SimilarityOracle oracle = make_oracle(c, &stub, warnings);
  flush_warnings(warnings);

  VqaConfig vc;
  vc.weights = c.weights;
  vc.bound = c.bound;
  vc.blocking_threshold = c.tau;
  vc.top_k = c.top_k;
  vc.evidence_epsilon = c.evidence_epsilon;
  vc.solver = c.solver;
  AnswerResult r = rank_answers(instance, oracle, vc);
  if (!common.dump_path.empty()) write_output(common.dump_path, dump_grounding(r.ground, r.built.db));
  write_output(common.out_path, ranking_text(r));
  if (!r.converged) {
    std::cerr << "solver did not converge; ranking flagged\n";
    return 2;
  }
  return 0;
}

int cmd_learn(const std::string& rules, const std::string& data_dir, const std::string& trace_path,
              const Common& common, std::optional<std::size_t> epochs, std::optional<double> rate) {
  Config c = common.resolve();
  if (epochs) c.epochs = *epochs;
  if (rate) c.learning_rate = *rate;
  std::string source = read_file(rules);
  Program program = parse_program(source);

  std::vector<fs::path> files;
  if (!fs::is_directory(data_dir)) throw Error("not a directory: " + data_dir);
  for (const auto& entry : fs::directory_iterator(data_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .jsonl instances in " + data_dir);

  std::vector<LearningInstance> instances;
  std::vector<std::string> warnings;
  for (const auto& f : files) instances.push_back({parse_data(read_file(f.string()), program, &warnings)});
  flush_warnings(warnings);

  LearningConfig lc;
  lc.learning_rate = c.learning_rate;
  lc.epochs = c.epochs;
  lc.solver = c.solver;
  lc.grounding.blocking.threshold = c.tau;
  if (!common.dump_path.empty()) {
    std::string dump;
    for (std::size_t k = 0; k < instances.size(); ++k) {
      Database db = instances[k].db;
      dump += "# instance " + files[k].filename().string() + "\n" +
              dump_grounding(ground_program(program, db, lc.grounding), db);
    }
    write_output(common.dump_path, dump);
  }
  LearningResult result = learn_weights(program, instances, lc);

  if (!trace_path.empty()) {
    std::string trace;
    for (const EpochTrace& t : result.trace) {
      trace += "{\"epoch\":" + std::to_string(t.epoch) + ",\"loss\":" + format_value(t.loss) + ",\"weights\":[";
      for (std::size_t j = 0; j < t.weights.size(); ++j) trace += (j ? "," : "") + format_value(t.weights[j]);
      trace += "],\"gradient\":[";
      for (std::size_t j = 0; j < t.gradient.size(); ++j) trace += (j ? "," : "") + format_value(t.gradient[j]);
      trace += "]}\n";
    }
    write_output(trace_path, trace);
  }
  write_output(common.out_path, rewrite_weights(source, result.program));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic soft logic engine for visual question answering"};
  app.require_subcommand(1);
  int code = 0;

  Common infer_common, oracle_common, extract_common, answer_common, learn_common;
  std::string rules, data, captions, instance_dir, data_dir, trace_path;
  double step = 0.01;
  bool question = false;
  std::size_t epochs = 0;
  double rate = -1.0;

  auto* infer = app.add_subcommand("infer", "MAP inference over a rule file and data");
  infer->add_option("rules", rules)->required();
  infer->add_option("data", data)->required();
  infer_common.attach(infer);

  auto* oracle = app.add_subcommand("oracle", "exhaustive grid search for at most four targets");
  oracle->add_option("rules", rules)->required();
  oracle->add_option("data", data)->required();
  oracle->add_option("--step", step, "grid spacing");
  oracle_common.attach(oracle);

  auto* extract = app.add_subcommand("extract", "relation triplets from dependency parses");
  extract->add_option("captions", captions)->required();
  extract->add_option("--vocab", extract_common.vocabulary, "relation vocabulary, one phrase per line");
  extract->add_flag("--question", question, "treat sentences as questions (emit has_q)");
  extract_common.attach(extract);

  auto* answer = app.add_subcommand("answer", "rank answers for one question instance");
  answer->add_option("instance", instance_dir)->required();
  answer_common.attach(answer);

  auto* learn = app.add_subcommand("learn", "learn rule weights from labelled instances");
  learn->add_option("rules", rules)->required();
  learn->add_option("data_dir", data_dir)->required();
  learn->add_option("--epochs", epochs);
  learn->add_option("--learning-rate", rate);
  learn->add_option("--trace", trace_path, "per-epoch trace (JSONL)");
  learn_common.attach(learn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*infer) code = cmd_infer(rules, data, infer_common);
    else if (*oracle) code = cmd_oracle(rules, data, step, oracle_common);
    else if (*extract) code = cmd_extract(captions, question, extract_common);
    else if (*answer) code = cmd_answer(instance_dir, answer_common);
    else if (*learn)
      code = cmd_learn(rules, data_dir, trace_path, learn_common,
                       epochs ? std::optional<std::size_t>(epochs) : std::nullopt,
                       rate >= 0.0 ? std::optional<double>(rate) : std::nullopt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return code;
}
