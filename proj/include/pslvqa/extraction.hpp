#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pslvqa/logic.hpp"
#include "pslvqa/similarity.hpp"

namespace pslvqa {

struct Token {
  std::string form;
  std::string lemma;
  std::string pos;
  std::size_t head = 0;  // 1-based; 0 is the root
  std::string deprel;
};

struct ParsedSentence {
  std::vector<Token> tokens;
  double confidence = 1.0;

  // Exactly one root, heads in range, no cycles. Throws Error.
  void validate() const;
  std::string text() const;
};

// CoNLL-style blocks: `index form lemma POS head deprel` per line (tab or
// space separated), blank line between sentences, `#conf=FLOAT` comments.
std::vector<ParsedSentence> parse_conll(std::string_view text);

struct Node {
  std::size_t head = 0;   // 0-based token index of the node's head word
  std::size_t begin = 0;  // token span [begin, end) covered by the phrase
  std::size_t end = 0;
  std::string phrase;     // lowercased surface form, or "?x"
  bool focus = false;
};

struct NodePair {
  Node first;
  Node second;
};

struct ExtractionOptions {
  std::size_t max_distance = 10;  // tokens between the two head words
};

// Nodes are nouns (with their compound modifiers), adjectives and, in
// question mode, Wh-words mapped to `?x`.
std::vector<Node> extract_nodes(const ParsedSentence& s, bool question);
// All node pairs in sentence order whose heads are at most max_distance apart.
std::vector<NodePair> extract_pairs(const ParsedSentence& s, bool question,
                                    const ExtractionOptions& options = {});

struct ConnectingFeatures {
  std::string linking_phrase;  // tokens strictly between the two nodes
  std::string path_phrase;     // lemmas of interior nodes on the dependency path
};

ConnectingFeatures connecting_features(const ParsedSentence& s, const NodePair& pair);

class RelationVocabulary {
 public:
  RelationVocabulary(std::vector<std::string> phrases, const SimilarityOracle& oracle);
  static RelationVocabulary parse(std::string_view text, const SimilarityOracle& oracle);
  static RelationVocabulary load(const std::string& path, const SimilarityOracle& oracle);

  const std::vector<std::string>& phrases() const { return phrases_; }
  const std::vector<PreparedPhrase>& prepared() const { return prepared_; }
  std::size_t size() const { return phrases_.size(); }

 private:
  std::vector<std::string> phrases_;  // normalized, unique, sorted
  std::vector<PreparedPhrase> prepared_;
};

inline constexpr std::string_view kFallbackRelation = "near";

struct RelationPrediction {
  std::string relation;
  double confidence = 0.0;
  bool fallback = false;
};

// Argmax over the vocabulary of max(sim(linking, rel), sim(path, rel)).
// Falls back to "near" with confidence 0 when neither feature is covered by
// the oracle or nothing scores above 0.
RelationPrediction predict_relation(const ConnectingFeatures& features,
                                    const RelationVocabulary& vocab,
                                    const SimilarityOracle& oracle);

struct Triplet {
  std::string node1;
  std::string relation;
  std::string node2;
  double confidence = 0.0;
  bool from_question = false;
  bool focus = false;
  bool fallback = false;
};

// Confidence is caption confidence times relation confidence; duplicate
// triplets keep the highest confidence.
std::vector<Triplet> captions_to_triplets(const std::vector<ParsedSentence>& captions,
                                          const RelationVocabulary& vocab,
                                          const SimilarityOracle& oracle,
                                          const ExtractionOptions& options = {});

std::vector<Triplet> question_to_triplets(const ParsedSentence& question,
                                          const RelationVocabulary& vocab,
                                          const SimilarityOracle& oracle,
                                          std::vector<std::string>* warnings = nullptr,
                                          const ExtractionOptions& options = {});

// Predicate data records, one per line.
std::string triplets_to_records(const std::vector<Triplet>& triplets, std::string_view predicate);

}  // namespace pslvqa
