#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pslvqa/logic.hpp"

namespace pslvqa {

// Word -> vector table. Words are stored lowercased.
struct EmbeddingStore {
  std::string name;
  std::size_t dimension = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
  std::size_t malformed_lines = 0;

  const std::vector<double>* find(std::string_view word) const;
  std::size_t size() const { return vectors.size(); }
};

// Text format: optional header `COUNT DIM`, then `word v1 ... vd` per line.
// A line with the wrong number of values is an error; a line with values
// that do not parse as numbers is skipped and counted in malformed_lines.
// Duplicate words keep the last vector and add a warning.
EmbeddingStore parse_embeddings(std::string_view text, std::string name = {},
                                std::vector<std::string>* warnings = nullptr);
EmbeddingStore load_embeddings(const std::string& path, std::string name = {},
                               std::vector<std::string>* warnings = nullptr);

// Lowercases and splits on whitespace.
std::vector<std::string> tokenize(std::string_view phrase);
// Tokens joined by single spaces.
std::string normalize_phrase(std::string_view phrase);

// Mean of the in-vocabulary token vectors; empty if no token is known.
std::optional<std::vector<double>> phrase_vector(const EmbeddingStore& store,
                                                 std::span<const std::string> tokens);

// Cosine similarity; 0 when either vector has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

// Fixed phrase-pair similarities, `phrase1 | phrase2 | sim` per line.
// Lookups are symmetric and case-normalized.
class StubTable {
 public:
  static StubTable parse(std::string_view text);
  static StubTable load(const std::string& path);

  void set(std::string_view a, std::string_view b, double value);
  std::optional<double> find(std::string_view a, std::string_view b) const;
  bool mentions(std::string_view phrase) const;
  std::size_t size() const { return table_.size(); }
  // Entries of `other` override existing ones.
  void merge(const StubTable& other);
  const std::map<std::pair<std::string, std::string>, double>& entries() const { return table_; }

 private:
  std::map<std::pair<std::string, std::string>, double> table_;
  std::map<std::string, std::size_t> phrases_;
};

// A phrase with its per-store vectors precomputed.
struct PreparedPhrase {
  std::string text;  // normalized
  std::vector<std::optional<std::vector<double>>> vectors;
};

// Phrase similarity in [0,1]. Stub entries win; otherwise the clamped cosine
// in each store that covers both phrases, averaged over those stores; if no
// store covers both, exact match gives 1 and anything else 0.
class SimilarityOracle {
 public:
  SimilarityOracle() = default;

  void add_store(EmbeddingStore store);
  void set_stub(StubTable stub) { stub_ = std::move(stub); }
  const std::vector<EmbeddingStore>& stores() const { return stores_; }
  const StubTable& stub() const { return stub_; }

  PreparedPhrase prepare(std::string_view phrase) const;
  double similarity(const PreparedPhrase& a, const PreparedPhrase& b) const;
  double similarity(std::string_view a, std::string_view b) const;

  // True if the stub table mentions the phrase or some store knows one of
  // its tokens.
  bool covers(const PreparedPhrase& phrase) const;

 private:
  std::vector<EmbeddingStore> stores_;
  StubTable stub_;
};

}  // namespace pslvqa
