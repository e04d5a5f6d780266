#include "pslvqa/vqa.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include <json.hpp>

namespace pslvqa {

std::string vqa_rules_text(const std::array<double, 6>& weights, double bound) {
  const auto w = [&](std::size_t i) { return format_weight(weights[i]); };
  std::string text =
      "predicate word/1 observed\n"
      "predicate has_q/3 observed\n"
      "predicate has_img/3 observed\n"
      "predicate sim/2 observed\n"
      "predicate has_img_ans/4 target\n"
      "predicate candidate/1 target\n"
      "predicate ans/1 target\n";
  text += w(0) + ": has_img_ans(Z, X, R1, Y1) <- word(Z) & has_img(X, R1, Y1) & sim(Z, X) & sim(Z, Y1)\n";
  text += w(1) + ": candidate(Z) <- word(Z)\n";
  text += w(2) +
          ": candidate(Z) <- word(Z) & has_q(Y, R, X) & has_img_ans(Z, X1, R1, Y1)"
          " & sim(R, R1) & sim(Y, Y1) & sim(X, X1)\n";
  text += w(3) + ": ans(Z) <- has_q(X, R, ?x) & has_img(Z, R, X) & candidate(Z)\n";
  text += w(4) + ": ans(Z) <- has_q(X, R, ?x) & has_img(Z1, R, X) & candidate(Z) & sim(Z, Z1)\n";
  text += w(5) +
          ": ans(Z) <- has_q(X, R, ?x) & has_img(Z1, R1, X1) & candidate(Z)"
          " & sim(Z, Z1) & sim(R, R1) & sim(X, X1)\n";
  text += "sum ans/1 <= " + format_weight(bound) + "\n";
  return text;
}

namespace {

std::vector<Answer> select_answers(const QuestionInstance& instance, const VqaConfig& config) {
  std::map<std::string, double> unique;
  for (const Answer& a : instance.answers) {
    if (!(a.prior >= 0.0 && a.prior <= 1.0))
      throw Error("prior of answer '" + a.phrase + "' outside [0,1]");
    std::string phrase = normalize_phrase(a.phrase);
    if (phrase.empty()) throw Error("empty answer phrase");
    auto [it, inserted] = unique.emplace(phrase, a.prior);
    if (!inserted) it->second = std::max(it->second, a.prior);
  }
  if (unique.empty()) throw Error("answer lexicon is empty");
  std::vector<Answer> answers;
  for (const auto& [p, prior] : unique) answers.push_back({p, prior});
  if (config.top_k && *config.top_k < answers.size()) {
    std::stable_sort(answers.begin(), answers.end(),
                     [](const Answer& a, const Answer& b) { return a.prior > b.prior; });
    answers.resize(*config.top_k);
    std::sort(answers.begin(), answers.end(),
              [](const Answer& a, const Answer& b) { return a.phrase < b.phrase; });
  }
  return answers;
}

void check_triplet(const Triplet& t) {
  if (!(t.confidence >= 0.0 && t.confidence <= 1.0))
    throw Error("triplet confidence outside [0,1]: " + t.node1 + " " + t.relation + " " + t.node2);
}

}  // namespace

BuiltProgram build_program(const QuestionInstance& instance, const SimilarityOracle& oracle,
                           const VqaConfig& config) {
  if (!(config.bound > 0.0)) throw Error("summation bound must be positive");
  auto answers = select_answers(instance, config);

  BuiltProgram built;
  built.program = parse_program(vqa_rules_text(config.weights, config.bound));
  built.db = built.program.make_database();
  Database& db = built.db;

  for (const Answer& a : answers) {
    db.set_observed(make_atom("word", {a.phrase}), a.prior);
    db.set_target(make_atom("candidate", {a.phrase}), std::nullopt);
    db.set_target(make_atom("ans", {a.phrase}), std::nullopt);
  }

  // Keep the highest confidence per triplet.
  std::map<std::vector<std::string>, double> img, q;
  for (const Triplet& t : instance.image) {
    check_triplet(t);
    std::vector<std::string> key = {normalize_phrase(t.node1), normalize_phrase(t.relation),
                                    normalize_phrase(t.node2)};
    auto [it, inserted] = img.emplace(key, t.confidence);
    if (!inserted) it->second = std::max(it->second, t.confidence);
  }
  for (const Triplet& t : instance.question) {
    check_triplet(t);
    std::vector<std::string> key = {normalize_phrase(t.node1), normalize_phrase(t.relation),
                                    normalize_phrase(t.node2)};
    if (key[0] == kFocusNode && key[2] != kFocusNode) std::swap(key[0], key[2]);
    auto [it, inserted] = q.emplace(key, t.confidence);
    if (!inserted) it->second = std::max(it->second, t.confidence);
  }
  for (const auto& [k, v] : img) db.set_observed(make_atom("has_img", k), v);
  for (const auto& [k, v] : q) db.set_observed(make_atom("has_q", k), v);

  std::set<std::string> image_nodes, image_relations, question_nodes, question_relations;
  for (const auto& [k, v] : img) {
    image_nodes.insert(k[0]);
    image_nodes.insert(k[2]);
    image_relations.insert(k[1]);
  }
  for (const auto& [k, v] : q) {
    for (const std::string& n : {k[0], k[2]})
      if (n != kFocusNode) question_nodes.insert(n);
    question_relations.insert(k[1]);
  }

  std::map<std::string, PreparedPhrase> cache;
  auto prepared = [&](const std::string& p) -> const PreparedPhrase& {
    auto it = cache.find(p);
    if (it == cache.end()) it = cache.emplace(p, oracle.prepare(p)).first;
    return it->second;
  };
  auto add_sims = [&](const auto& left, const std::set<std::string>& right) {
    for (const std::string& a : left)
      for (const std::string& b : right) {
        double v = oracle.similarity(prepared(a), prepared(b));
        if (v > 0.0) db.set_observed(make_atom("sim", {a, b}), v);
      }
  };
  std::vector<std::string> answer_phrases;
  for (const Answer& a : answers) answer_phrases.push_back(a.phrase);
  add_sims(answer_phrases, image_nodes);
  add_sims(question_nodes, image_nodes);
  add_sims(question_relations, image_relations);
  return built;
}

AnswerResult rank_answers(const QuestionInstance& instance, const SimilarityOracle& oracle,
                          const VqaConfig& config) {
  AnswerResult result;
  result.built = build_program(instance, oracle, config);
  Database& db = result.built.db;

  GroundingOptions grounding;
  grounding.blocking.threshold = config.blocking_threshold;
  grounding.max_ground_rules = config.max_ground_rules;
  result.ground = ground_program(result.built.program, db, grounding);
  InferenceProblem problem = InferenceProblem::from_ground_program(result.ground, db);
  result.solution = map_inference(problem, config.solver);
  result.converged = result.solution.converged;
  result.atom_values = atom_assignment(db, result.ground, result.solution.values);

  for (AtomId id : db.atoms_of(Symbol("ans"))) {
    RankedAnswer r;
    r.phrase = db.atom(id).args[0].name().str();
    r.value = result.atom_values[id];
    r.prior = db.lookup(make_atom("word", {r.phrase})).value.value_or(0.0);
    r.evidence = extract_evidence(result, r.phrase, config.evidence_epsilon);
    result.ranked.push_back(std::move(r));
  }
  // Values are compared at output precision so solver noise cannot reorder ties.
  auto rounded = [](double v) { return std::round(v * 1e6); };
  std::sort(result.ranked.begin(), result.ranked.end(),
            [&](const RankedAnswer& a, const RankedAnswer& b) {
              if (rounded(a.value) != rounded(b.value)) return rounded(a.value) > rounded(b.value);
              if (a.prior != b.prior) return a.prior > b.prior;
              return a.phrase < b.phrase;
            });
  return result;
}

std::vector<EvidenceItem> extract_evidence(const AnswerResult& result, const std::string& answer,
                                           double epsilon) {
  const Database& db = result.built.db;
  const std::vector<double>& values = result.atom_values;
  std::vector<EvidenceItem> out;
  auto ans_id = db.find(make_atom("ans", {answer}));
  if (!ans_id || values[*ans_id] < 5e-7) return out;

  const Symbol z(answer);
  const std::set<Symbol> heads = {Symbol("ans"), Symbol("candidate"), Symbol("has_img_ans")};
  for (const GroundRule& gr : result.ground.potentials) {
    const Atom* head = nullptr;
    for (AtomId id : gr.i_plus) {
      const Atom& a = db.atom(id);
      if (heads.contains(a.predicate) && !a.args.empty() && a.args[0].name() == z) {
        head = &a;
        break;
      }
    }
    if (!head) continue;
    double d = distance_to_satisfaction(gr, values);
    if (d > epsilon) continue;
    EvidenceItem item;
    item.rule_index = gr.rule_index;
    item.weight = gr.weight;
    item.head = head->to_string();
    item.distance = d;
    std::vector<double> body_values;
    for (AtomId id : gr.i_minus) {
      item.body.emplace_back(db.atom(id).to_string(), values[id]);
      body_values.push_back(values[id]);
    }
    item.body_truth = luk_conjunction(body_values);
    out.push_back(std::move(item));
  }
  std::stable_sort(out.begin(), out.end(), [](const EvidenceItem& a, const EvidenceItem& b) {
    double sa = a.weight * a.body_truth, sb = b.weight * b.body_truth;
    if (sa != sb) return sa > sb;
    if (a.rule_index != b.rule_index) return a.rule_index < b.rule_index;
    if (a.head != b.head) return a.head < b.head;
    return a.body < b.body;
  });
  return out;
}

std::vector<Answer> parse_answers(std::string_view text) {
  std::vector<Answer> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string line(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    std::string phrase = normalize_phrase(line);
    if (phrase.empty()) continue;
    Answer a;
    std::size_t comma = line.rfind(',');
    if (comma == std::string::npos) {
      a.phrase = phrase;
    } else {
      a.phrase = normalize_phrase(line.substr(0, comma));
      try {
        std::size_t used = 0;
        std::string num = normalize_phrase(line.substr(comma + 1));
        a.prior = std::stod(num, &used);
        if (used != num.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw Error("answers line " + std::to_string(line_no) + ": prior must be a number");
      }
    }
    if (!(a.prior >= 0.0 && a.prior <= 1.0))
      throw Error("answers line " + std::to_string(line_no) + ": prior outside [0,1]");
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<Triplet> parse_triplet_records(std::string_view text, std::string_view predicate) {
  std::vector<Triplet> out;
  std::size_t record = 0;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    ++record;
    auto fail = [&](const std::string& msg) -> Error {
      return Error("record " + std::to_string(record) + ": " + msg);
    };
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception&) {
      throw fail("malformed record");
    }
    if (!j.is_object() || !j.contains("args") || !j["args"].is_array()) throw fail("malformed record");
    if (j.contains("pred") && j["pred"] != predicate)
      throw fail("expected predicate " + std::string(predicate));
    const auto& args = j["args"];
    if (args.size() != 3) throw fail("expected 3 arguments");
    Triplet t;
    for (const auto& a : args)
      if (!a.is_string()) throw fail("arguments must be strings");
    t.node1 = args[0].get<std::string>();
    t.relation = args[1].get<std::string>();
    t.node2 = args[2].get<std::string>();
    t.confidence = j.value("value", 1.0);
    if (!(t.confidence >= 0.0 && t.confidence <= 1.0)) throw fail("value outside [0,1]");
    t.from_question = predicate == "has_q";
    t.focus = t.node1 == kFocusNode || t.node2 == kFocusNode;
    out.push_back(std::move(t));
  }
  return out;
}

QuestionInstance load_instance(const std::string& dir, StubTable* sims) {
  namespace fs = std::filesystem;
  fs::path root(dir);
  if (!fs::is_directory(root)) throw Error("instance directory not found: " + dir);
  QuestionInstance instance;
  instance.answers = parse_answers(read_file((root / "answers").string()));
  if (fs::exists(root / "image_triplets"))
    instance.image = parse_triplet_records(read_file((root / "image_triplets").string()), "has_img");
  if (fs::exists(root / "question_triplets"))
    instance.question =
        parse_triplet_records(read_file((root / "question_triplets").string()), "has_q");
  if (sims && fs::exists(root / "sims")) *sims = StubTable::load((root / "sims").string());
  return instance;
}

}  // namespace pslvqa
