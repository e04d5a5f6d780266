#include "pslvqa/extraction.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <map>
#include <set>
#include <tuple>

#include <json.hpp>

#include "pslvqa/parser.hpp"

namespace pslvqa {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  if (line.find('\t') != std::string_view::npos) {
    std::size_t start = 0;
    while (true) {
      std::size_t tab = line.find('\t', start);
      out.push_back(trim(line.substr(start, tab == std::string_view::npos ? tab : tab - start)));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    return out;
  }
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_noun(const Token& t) { return t.pos.starts_with("NN"); }
bool is_adjective(const Token& t) { return t.pos.starts_with("JJ"); }
bool is_wh(const Token& t) {
  return t.pos == "WP" || t.pos == "WDT" || t.pos == "WRB" || t.pos == "WP$";
}
bool is_compound(const Token& t) { return t.deprel == "compound" || t.deprel == "nn"; }

bool is_punctuation(const Token& t) {
  static const std::set<std::string> tags = {".", ",", ":", "``", "''", "-LRB-", "-RRB-",
                                             "#", "$", "PUNCT", "HYPH"};
  if (tags.contains(t.pos)) return true;
  return std::none_of(t.form.begin(), t.form.end(),
                      [](char c) { return std::isalnum(static_cast<unsigned char>(c)); });
}

}  // namespace

void ParsedSentence::validate() const {
  if (tokens.empty()) throw Error("sentence has no tokens");
  if (!(confidence >= 0.0 && confidence <= 1.0))
    throw Error("sentence confidence " + std::to_string(confidence) + " outside [0,1]");
  std::size_t roots = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i].head > tokens.size())
      throw Error("token " + std::to_string(i + 1) + " has head " +
                  std::to_string(tokens[i].head) + " out of range");
    if (tokens[i].head == i + 1) throw Error("token " + std::to_string(i + 1) + " heads itself");
    if (tokens[i].head == 0) ++roots;
  }
  if (roots != 1) throw Error("sentence has " + std::to_string(roots) + " roots, expected 1");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    std::size_t cur = i + 1, steps = 0;
    while (cur != 0) {
      cur = tokens[cur - 1].head;
      if (++steps > tokens.size()) throw Error("dependency cycle through token " + std::to_string(i + 1));
    }
  }
}

std::string ParsedSentence::text() const {
  std::string out;
  for (const Token& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t.form;
  }
  return out;
}

std::vector<ParsedSentence> parse_conll(std::string_view text) {
  std::vector<ParsedSentence> out;
  ParsedSentence current;
  bool has_content = false;
  std::size_t line_no = 0;
  auto flush = [&] {
    if (!current.tokens.empty()) {
      try {
        current.validate();
      } catch (const Error& e) {
        throw Error("sentence ending at line " + std::to_string(line_no) + ": " + e.what());
      }
      out.push_back(std::move(current));
    }
    current = ParsedSentence{};
    has_content = false;
  };
  while (true) {
    bool last = text.empty();
    std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) {
      if (has_content && current.tokens.empty())
        throw Error("line " + std::to_string(line_no) + ": sentence header without tokens");
      flush();
      if (last) break;
      continue;
    }
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      if (body.starts_with("conf")) {
        std::size_t eq = body.find('=');
        if (eq == std::string_view::npos)
          throw Error("line " + std::to_string(line_no) + ": expected '#conf=FLOAT'");
        std::string_view num = trim(body.substr(eq + 1));
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), v);
        if (ec != std::errc() || ptr != num.data() + num.size() || v < 0.0 || v > 1.0)
          throw Error("line " + std::to_string(line_no) + ": confidence must be a number in [0,1]");
        current.confidence = v;
        has_content = true;
      }
      continue;
    }
    auto fields = split_fields(line);
    if (fields.size() < 6)
      throw Error("line " + std::to_string(line_no) + ": expected 6 columns, found " +
                  std::to_string(fields.size()));
    std::size_t index = 0, head = 0;
    auto parse_index = [&](std::string_view s, std::size_t& v) {
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      return ec == std::errc() && ptr == s.data() + s.size();
    };
    if (!parse_index(fields[0], index) || index != current.tokens.size() + 1)
      throw Error("line " + std::to_string(line_no) + ": expected token index " +
                  std::to_string(current.tokens.size() + 1));
    if (!parse_index(fields[4], head))
      throw Error("line " + std::to_string(line_no) + ": head must be a non-negative integer");
    Token t;
    t.form = std::string(fields[1]);
    t.lemma = fields[2] == "_" ? lower(fields[1]) : std::string(fields[2]);
    t.pos = std::string(fields[3]);
    t.head = head;
    t.deprel = std::string(fields[5]);
    current.tokens.push_back(std::move(t));
    has_content = true;
  }
  return out;
}

std::vector<Node> extract_nodes(const ParsedSentence& s, bool question) {
  std::vector<Node> nodes;
  const auto& tok = s.tokens;
  for (std::size_t i = 0; i < tok.size(); ++i) {
    const Token& t = tok[i];
    Node n;
    n.head = i;
    n.begin = i;
    n.end = i + 1;
    if (question && is_wh(t)) {
      n.phrase = std::string(kFocusNode);
      n.focus = true;
    } else if (is_noun(t)) {
      if (is_compound(t) && t.head > 0 && is_noun(tok[t.head - 1])) continue;
      while (n.begin > 0 && tok[n.begin - 1].head == i + 1 && is_compound(tok[n.begin - 1])) --n.begin;
      for (std::size_t k = n.begin; k < n.end; ++k) {
        if (!n.phrase.empty()) n.phrase += ' ';
        n.phrase += lower(tok[k].form);
      }
    } else if (is_adjective(t)) {
      n.phrase = lower(t.form);
    } else {
      continue;
    }
    nodes.push_back(std::move(n));
  }
  return nodes;
}

std::vector<NodePair> extract_pairs(const ParsedSentence& s, bool question,
                                    const ExtractionOptions& options) {
  auto nodes = extract_nodes(s, question);
  std::vector<NodePair> pairs;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (nodes[j].head - nodes[i].head <= options.max_distance) pairs.push_back({nodes[i], nodes[j]});
  return pairs;
}

ConnectingFeatures connecting_features(const ParsedSentence& s, const NodePair& pair) {
  const auto& tok = s.tokens;
  const std::size_t n = tok.size();
  if (pair.first.head >= n || pair.second.head >= n) throw Error("node outside the sentence");

  ConnectingFeatures f;
  for (std::size_t k = pair.first.end; k < pair.second.begin; ++k) {
    if (is_punctuation(tok[k])) continue;
    if (!f.linking_phrase.empty()) f.linking_phrase += ' ';
    f.linking_phrase += lower(tok[k].form);
  }

  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    if (tok[i].head > 0 && tok[i].head <= n) {
      adj[i].push_back(tok[i].head - 1);
      adj[tok[i].head - 1].push_back(i);
    }
  const std::size_t none = n;
  std::vector<std::size_t> prev(n, none);
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue{pair.first.head};
  seen[pair.first.head] = true;
  while (!queue.empty()) {
    std::size_t u = queue.front();
    queue.pop_front();
    if (u == pair.second.head) break;
    for (std::size_t v : adj[u])
      if (!seen[v]) {
        seen[v] = true;
        prev[v] = u;
        queue.push_back(v);
      }
  }
  if (!seen[pair.second.head])
    throw Error("no dependency path between '" + pair.first.phrase + "' and '" +
                pair.second.phrase + "'");
  std::vector<std::size_t> interior;
  for (std::size_t v = prev[pair.second.head]; v != none && v != pair.first.head; v = prev[v])
    interior.push_back(v);
  std::reverse(interior.begin(), interior.end());
  for (std::size_t v : interior) {
    if (is_punctuation(tok[v])) continue;
    if (!f.path_phrase.empty()) f.path_phrase += ' ';
    f.path_phrase += lower(tok[v].lemma);
  }
  return f;
}

RelationVocabulary::RelationVocabulary(std::vector<std::string> phrases,
                                       const SimilarityOracle& oracle) {
  for (std::string& p : phrases) p = normalize_phrase(p);
  std::erase_if(phrases, [](const std::string& p) { return p.empty(); });
  std::sort(phrases.begin(), phrases.end());
  phrases.erase(std::unique(phrases.begin(), phrases.end()), phrases.end());
  if (phrases.empty()) throw Error("relation vocabulary is empty");
  phrases_ = std::move(phrases);
  prepared_.reserve(phrases_.size());
  for (const std::string& p : phrases_) prepared_.push_back(oracle.prepare(p));
}

RelationVocabulary RelationVocabulary::parse(std::string_view text, const SimilarityOracle& oracle) {
  std::vector<std::string> phrases;
  while (!text.empty()) {
    std::size_t nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (!line.empty()) phrases.emplace_back(line);
  }
  return RelationVocabulary(std::move(phrases), oracle);
}

RelationVocabulary RelationVocabulary::load(const std::string& path, const SimilarityOracle& oracle) {
  return parse(read_file(path), oracle);
}

RelationPrediction predict_relation(const ConnectingFeatures& features,
                                    const RelationVocabulary& vocab,
                                    const SimilarityOracle& oracle) {
  std::vector<PreparedPhrase> usable;
  for (const std::string* p : {&features.linking_phrase, &features.path_phrase}) {
    PreparedPhrase prepared = oracle.prepare(*p);
    if (oracle.covers(prepared)) usable.push_back(std::move(prepared));
  }
  if (usable.empty()) return {std::string(kFallbackRelation), 0.0, true};

  RelationPrediction best;
  best.confidence = -1.0;
  // Phrases are sorted, so keeping the first maximum breaks ties lexicographically.
  for (std::size_t r = 0; r < vocab.size(); ++r) {
    double score = 0.0;
    for (const PreparedPhrase& f : usable)
      score = std::max(score, oracle.similarity(f, vocab.prepared()[r]));
    if (score > best.confidence) {
      best.confidence = score;
      best.relation = vocab.phrases()[r];
    }
  }
  if (best.confidence <= 0.0) return {std::string(kFallbackRelation), 0.0, true};
  return best;
}

namespace {

void add_deduplicated(std::vector<Triplet>& out,
                      std::map<std::tuple<std::string, std::string, std::string>, std::size_t>& index,
                      Triplet t) {
  auto key = std::make_tuple(t.node1, t.relation, t.node2);
  auto [it, inserted] = index.emplace(key, out.size());
  if (inserted) {
    out.push_back(std::move(t));
  } else if (t.confidence > out[it->second].confidence) {
    out[it->second] = std::move(t);
  }
}

}  // namespace

std::vector<Triplet> captions_to_triplets(const std::vector<ParsedSentence>& captions,
                                          const RelationVocabulary& vocab,
                                          const SimilarityOracle& oracle,
                                          const ExtractionOptions& options) {
  std::vector<Triplet> out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  for (const ParsedSentence& caption : captions) {
    for (const NodePair& pair : extract_pairs(caption, false, options)) {
      auto prediction = predict_relation(connecting_features(caption, pair), vocab, oracle);
      Triplet t;
      t.node1 = pair.first.phrase;
      t.relation = prediction.relation;
      t.node2 = pair.second.phrase;
      t.confidence = caption.confidence * prediction.confidence;
      t.fallback = prediction.fallback;
      add_deduplicated(out, index, std::move(t));
    }
  }
  return out;
}

std::vector<Triplet> question_to_triplets(const ParsedSentence& question,
                                          const RelationVocabulary& vocab,
                                          const SimilarityOracle& oracle,
                                          std::vector<std::string>* warnings,
                                          const ExtractionOptions& options) {
  std::vector<Triplet> out;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  auto pairs = extract_pairs(question, true, options);
  if (pairs.empty() && warnings)
    warnings->push_back("question has no candidate node pairs: " + question.text());
  for (const NodePair& pair : pairs) {
    auto prediction = predict_relation(connecting_features(question, pair), vocab, oracle);
    Triplet t;
    t.node1 = pair.first.phrase;
    t.relation = prediction.relation;
    t.node2 = pair.second.phrase;
    t.confidence = prediction.confidence;
    t.from_question = true;
    t.focus = pair.first.focus || pair.second.focus;
    t.fallback = prediction.fallback;
    add_deduplicated(out, index, std::move(t));
  }
  return out;
}

std::string triplets_to_records(const std::vector<Triplet>& triplets, std::string_view predicate) {
  std::string out;
  for (const Triplet& t : triplets) {
    out += "{\"pred\":" + nlohmann::json(predicate).dump() + ",\"args\":[" +
           nlohmann::json(t.node1).dump() + "," + nlohmann::json(t.relation).dump() + "," +
           nlohmann::json(t.node2).dump() + "],\"value\":" + format_value(t.confidence) + "}\n";
  }
  return out;
}

}  // namespace pslvqa
